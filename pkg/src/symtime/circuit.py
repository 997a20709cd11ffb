"""Gate-level netlists of 2-input gates.

Native format, one statement per line, ``#`` starts a comment::

    input a1
    output o1
    gate o1 NOR2 A=a1 B=a3 Y=o1 [private] [param C1=2 param d_a=d_a]...

Gate parameters bind template symbols for that gate instance.  Parameters a
gate does not bind stay as the bare template symbol (shared by every gate of
the same type) unless the gate is marked ``private``, in which case they
become ``<name>_<gate id>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import networkx as nx

from .errors import MultipleDrivers, ParseError, UndeclaredSignal, ValidationError
from .gatemodel import GATE_TYPES
from .symcore import Const, Expr, parse, symbol

_IDENT = r"[A-Za-z_][A-Za-z0-9_.\[\]]*"
_GATE_RE = re.compile(
    rf"gate\s+(?P<id>{_IDENT})\s+(?P<type>\w+)\s+A=(?P<a>\S+)\s+B=(?P<b>\S+)\s+Y=(?P<y>\S+)(?P<rest>.*)\Z"
)
_PARAM_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)\Z")


def evaluate_gate(gate_type: str, a: int, b: int):
    """Boolean target value of a gate for inputs (a, b).

    Returns ``None`` for a Muller C gate whose inputs disagree (it holds).
    """
    if gate_type == "NOR2":
        return int(not (a or b))
    if gate_type == "NAND2":
        return int(not (a and b))
    if gate_type == "C2":
        return a if a == b else None
    raise ValueError(f"unknown gate type {gate_type!r}")


@dataclass(frozen=True)
class Gate:
    id: str
    gate_type: str
    input_A: str
    input_B: str
    output: str
    params: Mapping = field(default_factory=dict, hash=False)
    private: bool = False

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    @property
    def inputs(self) -> tuple:
        return (self.input_A, self.input_B)

    def pins_of(self, signal: str) -> list:
        return [pin for pin, s in (("A", self.input_A), ("B", self.input_B)) if s == signal]

    def default_parameter(self, name: str) -> Expr:
        """Value of a template symbol the gate does not bind explicitly."""
        if name in self.params:
            return self.params[name]
        if self.private:
            return symbol(f"{name}_{_sanitize(self.id)}")
        return symbol(name)


@dataclass(frozen=True, eq=False)
class Netlist:
    primary_inputs: tuple
    primary_outputs: tuple
    gates: tuple

    def __post_init__(self):
        driver: dict = {s: None for s in self.primary_inputs}
        for g in self.gates:
            driver[g.output] = g
        readers: dict = {}
        for g in self.gates:
            for s in dict.fromkeys(g.inputs):
                readers.setdefault(s, []).append(g)
        for name, value in (
            ("primary_inputs", tuple(self.primary_inputs)),
            ("primary_outputs", tuple(self.primary_outputs)),
            ("gates", tuple(self.gates)),
            ("driver", MappingProxyType(driver)),
            ("readers", MappingProxyType({k: tuple(v) for k, v in readers.items()})),
            ("_by_id", {g.id: g for g in self.gates}),
        ):
            object.__setattr__(self, name, value)

    @property
    def signals(self) -> list:
        return list(self.driver)

    def gate(self, gate_id: str) -> Gate:
        return self._by_id[gate_id]

    def driving_gate(self, signal: str):
        return self.driver.get(signal)

    def is_primary_input(self, signal: str) -> bool:
        return signal in self.primary_inputs

    def __eq__(self, other):
        if not isinstance(other, Netlist):
            return NotImplemented
        return (
            self.primary_inputs == other.primary_inputs
            and self.primary_outputs == other.primary_outputs
            and [(g, dict(g.params)) for g in self.gates] == [(g, dict(g.params)) for g in other.gates]
        )

    __hash__ = None


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


def _parse_params(rest: str, lineno: int):
    private = False
    params = {}
    chunks = re.split(r"\bparam\b", rest)
    head = chunks[0].split()
    for tok in head:
        if tok == "private":
            private = True
        else:
            raise ParseError(lineno, f"unexpected token {tok!r}")
    for chunk in chunks[1:]:
        m = _PARAM_RE.match(chunk.strip())
        if not m:
            raise ParseError(lineno, f"malformed parameter {chunk.strip()!r}")
        name, text = m.groups()
        if name in params:
            raise ParseError(lineno, f"parameter {name} bound twice")
        value = parse(text.strip(), line=lineno)
        if isinstance(value, Const) and value.value <= 0:
            raise ValidationError(f"line {lineno}: physical parameter {name} must be > 0, got {value}")
        params[name] = value
    return private, params


def build_netlist(primary_inputs, primary_outputs, gates) -> Netlist:
    """Validate drivers and connectivity, then assemble a :class:`Netlist`."""
    drivers = {}
    for s in primary_inputs:
        if s in drivers:
            raise MultipleDrivers(s)
        drivers[s] = "input"
    ids = set()
    for g in gates:
        if g.gate_type not in GATE_TYPES:
            raise ValidationError(f"gate {g.id}: unsupported gate type {g.gate_type!r}")
        if g.id in ids:
            raise ValidationError(f"duplicate gate id {g.id!r}")
        ids.add(g.id)
        if g.output in drivers:
            raise MultipleDrivers(g.output)
        drivers[g.output] = g.id
    for g in gates:
        for s in g.inputs:
            if s not in drivers:
                raise UndeclaredSignal(s)
    for s in primary_outputs:
        if s not in drivers:
            raise UndeclaredSignal(s)
    return Netlist(tuple(primary_inputs), tuple(primary_outputs), tuple(gates))


def parse_netlist(text: str) -> Netlist:
    inputs, outputs, gates = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword = line.split()[0]
        if keyword in ("input", "output"):
            names = line.split()[1:]
            if not names:
                raise ParseError(lineno, f"{keyword} needs a signal name")
            (inputs if keyword == "input" else outputs).extend(names)
        elif keyword == "gate":
            m = _GATE_RE.match(line)
            if not m:
                raise ParseError(lineno, f"malformed gate statement {line!r}")
            if m.group("type") not in GATE_TYPES:
                raise ParseError(lineno, f"unsupported gate type {m.group('type')!r}")
            private, params = _parse_params(m.group("rest"), lineno)
            gates.append(Gate(m.group("id"), m.group("type"), m.group("a"), m.group("b"), m.group("y"), params, private))
        else:
            raise ParseError(lineno, f"unknown statement {keyword!r}")
    return build_netlist(inputs, outputs, gates)


def format_netlist(netlist: Netlist) -> str:
    lines = [f"input {s}" for s in netlist.primary_inputs]
    lines += [f"output {s}" for s in netlist.primary_outputs]
    for g in netlist.gates:
        text = f"gate {g.id} {g.gate_type} A={g.input_A} B={g.input_B} Y={g.output}"
        if g.private:
            text += " private"
        for name, value in g.params.items():
            text += f" param {name}={str(value).replace(' ', '')}"
        lines.append(text)
    return "\n".join(lines) + "\n"


_BENCH_IO = re.compile(r"(INPUT|OUTPUT)\s*\(\s*([^)\s]+)\s*\)\Z", re.I)
_BENCH_GATE = re.compile(r"([^=\s]+)\s*=\s*(\w+)\s*\(([^)]*)\)\Z")


def parse_bench(text: str) -> Netlist:
    """Import an ISCAS ``.bench`` file (2-input NAND/NOR only).

    Every gate is private, so its parameters become fresh per-gate symbols.
    """
    inputs, outputs, gates = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _BENCH_IO.match(line):
            (inputs if m.group(1).upper() == "INPUT" else outputs).append(m.group(2))
        elif m := _BENCH_GATE.match(line):
            out, kind, args = m.group(1), m.group(2).upper(), [a.strip() for a in m.group(3).split(",")]
            if kind not in ("NAND", "NOR") or len(args) != 2:
                raise ParseError(lineno, f"only 2-input NAND/NOR gates can be imported, got {kind}({', '.join(args)})")
            gates.append(Gate(f"g{_sanitize(out)}", kind + "2", args[0], args[1], out, {}, True))
        else:
            raise ParseError(lineno, f"cannot parse {line!r}")
    return build_netlist(inputs, outputs, gates)


@dataclass
class Topology:
    drivers: dict  # gate id -> list of driving gate ids (per pin order, deduplicated)
    fanout: dict  # gate id -> list of driven gate ids
    sccs: list  # strongly connected components (lists of gate ids) that form cycles

    @property
    def has_cycles(self) -> bool:
        return bool(self.sccs)


def topology(netlist: Netlist) -> Topology:
    graph = nx.DiGraph()
    graph.add_nodes_from(g.id for g in netlist.gates)
    drivers, fanout = {}, {g.id: [] for g in netlist.gates}
    for g in netlist.gates:
        ds = []
        for s in g.inputs:
            d = netlist.driving_gate(s)
            if d is not None and d.id not in ds:
                ds.append(d.id)
        if ds:
            drivers[g.id] = ds
        for d in ds:
            graph.add_edge(d, g.id)
            fanout[d].append(g.id)
    sccs = []
    for comp in nx.strongly_connected_components(graph):
        if len(comp) > 1 or any(graph.has_edge(n, n) for n in comp):
            sccs.append(sorted(comp))
    sccs.sort()
    return Topology(drivers, fanout, sccs)
