"""Input-transition cases and analytic delay templates for 2-input gates.

The four input states of a 2-input gate form a square; every edge in which
exactly one input toggles gets a case label.  The default labelling is::

    a: (0,0) -A-> (1,0)     b: (0,0) -B-> (0,1)
    c: (1,0) -B-> (1,1)     d: (0,1) -A-> (1,1)
    e: (1,1) -A-> (0,1)     f: (1,1) -B-> (1,0)
    g: (0,1) -B-> (0,0)     h: (1,0) -A-> (0,0)

so that the walk a, c, e, g returns to (0,0).  A model file may remap labels
with ``edge`` lines.

Delay templates are expressions over the reserved symbols ``T`` (time from
the previous output transition to the causing input transition) and
``DELTA`` (time from the previous input transition of the same gate to the
causing one), plus gate parameters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .errors import DirectionMismatch, MissingParameter, ParseError, UnknownGateType, ValidationError
from .symcore import Expr, Symbol, as_expr, parse, substitute, symbol

GATE_TYPES = ("NOR2", "NAND2", "C2")
DIRECTIONS = ("rising", "falling")
CASE_LABELS = tuple("abcdefgh")
RESERVED = frozenset({"T", "DELTA"})

State = tuple  # (bit A, bit B)

DEFAULT_EDGES = {
    "a": ((0, 0), "A"),
    "b": ((0, 0), "B"),
    "c": ((1, 0), "B"),
    "d": ((0, 1), "A"),
    "e": ((1, 1), "A"),
    "f": ((1, 1), "B"),
    "g": ((0, 1), "B"),
    "h": ((1, 0), "A"),
}

_OPAQUE_RE = re.compile(r"d_[a-h]{1,2}\Z")


def toggle(state: State, pin: str) -> State:
    a, b = state
    return (1 - a, b) if pin == "A" else (a, 1 - b)


@dataclass(frozen=True)
class CasePair:
    previous: str
    current: str

    def __str__(self):
        return f"({self.previous},{self.current})"

    @property
    def tag(self) -> str:
        return self.previous + self.current


@dataclass(frozen=True)
class DelayTemplate:
    gate_type: str
    pair: CasePair
    direction: str
    body: Expr
    opaque: bool = False

    def describe(self) -> str:
        if self.opaque:
            return f"no published formula; opaque symbol {self.body}"
        return f"{self.gate_type} {self.pair} {self.direction}: {self.body}"


@dataclass(frozen=True)
class ColdDelay:
    gate_type: str
    case: str
    direction: str
    value: Expr
    opaque: bool = False

    @property
    def body(self) -> Expr:
        return self.value

    def describe(self) -> str:
        return f"cold case {self.case}: {self.value}"


@dataclass
class GateModel:
    gate_type: str
    params: tuple = ()
    cold: dict = field(default_factory=dict)  # (case, direction) -> Expr
    pairs: dict = field(default_factory=dict)  # (CasePair, direction) -> Expr


class ModelLibrary:
    """Per-gate-type delay templates plus the case-label table.

    A library that declares no gate types at all is permissive: every lookup
    falls back to opaque delay symbols.  Otherwise looking up an undeclared
    gate type raises :class:`UnknownGateType`.
    """

    def __init__(self, gates=None, edges=None):
        self.gates: dict = dict(gates or {})
        self.edges: dict = dict(edges or DEFAULT_EDGES)
        _check_bijection(self.edges)
        self._by_edge = {v: k for k, v in self.edges.items()}

    def classify(self, source: State, pin: str) -> str:
        return self._by_edge[(tuple(source), pin)]

    def edge(self, label: str):
        """``(source, pin, target)`` of a case label."""
        source, pin = self.edges[label]
        return source, pin, toggle(source, pin)

    def valid_pair(self, pair: CasePair) -> bool:
        return self.edge(pair.previous)[2] == self.edge(pair.current)[0]

    def model(self, gate_type: str) -> Optional[GateModel]:
        if gate_type in self.gates:
            return self.gates[gate_type]
        if not self.gates:
            return None
        raise UnknownGateType(f"gate type {gate_type!r} is not declared in the model library")

    def parameters(self, gate_type: str) -> tuple:
        m = self.model(gate_type)
        return m.params if m else ()


def _check_bijection(edges: Mapping):
    if sorted(edges) != list(CASE_LABELS):
        raise ValidationError("edge table must label exactly the cases a..h")
    seen = set()
    for label, (source, pin) in edges.items():
        if pin not in ("A", "B") or tuple(source) not in {(0, 0), (0, 1), (1, 0), (1, 1)}:
            raise ValidationError(f"case {label}: invalid edge {source} {pin}")
        key = (tuple(source), pin)
        if key in seen:
            raise ValidationError(f"case {label}: edge {source} {pin} labelled twice")
        seen.add(key)


def classify_case(source_state: State, toggled_input: str, lib: Optional[ModelLibrary] = None) -> str:
    """Label of the edge leaving ``source_state`` when ``toggled_input`` toggles."""
    if lib is not None:
        return lib.classify(source_state, toggled_input)
    for label, edge in DEFAULT_EDGES.items():
        if edge == (tuple(source_state), toggled_input):
            return label
    raise ValueError(f"no edge from {source_state} via {toggled_input}")


def lookup_template(lib: ModelLibrary, gate_type: str, pair: CasePair, direction: str) -> DelayTemplate:
    """Template for a two-step sequence, or an opaque ``d_<x><y>`` fallback."""
    m = lib.model(gate_type)
    if m is not None:
        body = m.pairs.get((pair, direction))
        if body is not None:
            return DelayTemplate(gate_type, pair, direction, body)
        other = "rising" if direction == "falling" else "falling"
        if (pair, other) in m.pairs:
            raise DirectionMismatch(
                f"{gate_type} pair {pair} is modelled only for a {other} output, "
                f"but the scheduled output is {direction}"
            )
    return DelayTemplate(gate_type, pair, direction, symbol(f"d_{pair.tag}"), opaque=True)


def lookup_cold(lib: ModelLibrary, gate_type: str, case: str, direction: str) -> ColdDelay:
    """Cold delay for a gate's first output transition (fallback ``d_<case>``)."""
    m = lib.model(gate_type)
    if m is not None:
        value = m.cold.get((case, direction))
        if value is not None:
            return ColdDelay(gate_type, case, direction, value)
        other = "rising" if direction == "falling" else "falling"
        if (case, other) in m.cold:
            raise DirectionMismatch(
                f"{gate_type} cold case {case} is modelled only for a {other} output"
            )
    return ColdDelay(gate_type, case, direction, symbol(f"d_{case}"), opaque=True)


def instantiate_delay(template, T_expr: Optional[Expr], Delta_expr: Optional[Expr], params: Mapping) -> Expr:
    """Substitute T, DELTA and gate parameters into a template body."""
    body = template.body
    bindings = {}
    for name in body.free_symbols:
        if name == "T":
            value = T_expr
        elif name == "DELTA":
            value = Delta_expr
        else:
            value = params.get(name, params.get(Symbol(name)))
            if value is None and _OPAQUE_RE.match(name):
                continue  # unbound opaque delay symbols stand for themselves
        if value is None:
            raise MissingParameter(name)
        bindings[name] = as_expr(value)
    return substitute(body, bindings)


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

_GATE_RE = re.compile(r"gate\s+(\w+)\Z")
_PARAMS_RE = re.compile(r"params\s+(.*)\Z")
_EDGE_RE = re.compile(r"edge\s+([a-h])\s+\(\s*([01])\s*,\s*([01])\s*\)\s+([AB])\Z")
_COLD_RE = re.compile(r"cold\s+([a-h])\s+(rising|falling)\s*=\s*(.+)\Z")
_PAIR_RE = re.compile(r"pair\s+\(\s*([a-h])\s*,\s*([a-h])\s*\)\s+(rising|falling)\s*=\s*(.+)\Z")


def parse_model(text: str) -> ModelLibrary:
    gates: dict = {}
    edges = dict(DEFAULT_EDGES)
    current: Optional[GateModel] = None
    body_lines = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _GATE_RE.match(line):
            gate_type = m.group(1)
            if gate_type not in GATE_TYPES:
                raise ParseError(lineno, f"unsupported gate type {gate_type!r}")
            if gate_type in gates:
                raise ParseError(lineno, f"gate type {gate_type} declared twice")
            current = gates[gate_type] = GateModel(gate_type)
            continue
        if m := _EDGE_RE.match(line):
            if gates:
                raise ParseError(lineno, "edge declarations must precede gate sections")
            edges[m.group(1)] = ((int(m.group(2)), int(m.group(3))), m.group(4))
            continue
        if current is None:
            raise ParseError(lineno, f"entry outside a gate section: {line!r}")
        if m := _PARAMS_RE.match(line):
            names = m.group(1).split()
            for n in names:
                try:
                    symbol(n)
                except ValueError as exc:
                    raise ParseError(lineno, str(exc)) from None
                if n in RESERVED:
                    raise ParseError(lineno, f"{n} is a reserved symbol")
            current.params = current.params + tuple(n for n in names if n not in current.params)
        elif m := _COLD_RE.match(line):
            case, direction, expr = m.groups()
            key = (case, direction)
            if key in current.cold:
                raise ParseError(lineno, f"duplicate cold entry {case} {direction}")
            current.cold[key] = parse(expr, line=lineno)
            body_lines.append((lineno, current, current.cold[key], False, None))
        elif m := _PAIR_RE.match(line):
            x, y, direction, expr = m.groups()
            pair = CasePair(x, y)
            key = (pair, direction)
            if key in current.pairs:
                raise ParseError(lineno, f"duplicate pair entry {pair} {direction}")
            current.pairs[key] = parse(expr, line=lineno)
            body_lines.append((lineno, current, current.pairs[key], True, pair))
        else:
            raise ParseError(lineno, f"cannot parse {line!r}")

    try:
        lib = ModelLibrary(gates, edges)
    except ValidationError as exc:
        raise ValidationError(f"edge table: {exc}") from None
    for lineno, model, body, uses_inputs, pair in body_lines:
        allowed = set(model.params)
        if uses_inputs:
            allowed |= RESERVED
            if not lib.valid_pair(pair):
                raise ValidationError(
                    f"line {lineno}: pair {pair} does not chain "
                    f"({pair.previous} ends in {lib.edge(pair.previous)[2]}, "
                    f"{pair.current} starts in {lib.edge(pair.current)[0]})"
                )
        unknown = sorted(n for n in body.free_symbols if n not in allowed and not _OPAQUE_RE.match(n))
        if unknown:
            raise ValidationError(f"line {lineno}: undeclared symbol(s) {', '.join(unknown)}")
    return lib


def load_model_file(path) -> ModelLibrary:
    return parse_model(Path(path).read_text())


def default_model_text() -> str:
    return resources.files("symtime.data").joinpath("default.model").read_text()


def default_library() -> ModelLibrary:
    return parse_model(default_model_text())
