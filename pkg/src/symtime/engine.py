"""Symbolic propagation of transition times through a netlist.

Events are processed strictly in schedule order.  For a gate-output event
``e`` caused by input event ``c`` of gate ``G``:

* first output transition of ``G``: ``time(e) = time(c) + cold(case(c))``;
* otherwise, with ``(x, y)`` the two most recent input cases of ``G`` up to
  ``c``::

      T     = time(c) - time(previous output transition of G)
      DELTA = time(c) - time(previous input transition of G)
      time(e) = time(c) + template[x, y](T, DELTA)

Every input transition of a gate after its first output transition also
gets a *step* record (case pair, T, DELTA, and the instantiated template when
one is published), whether or not it makes the output switch.

Two forms are kept per event: the closed form over primary-input times and
gate parameters, and a recursive form over the time symbols of the events it
directly depends on.  Substituting closed forms into the recursive form
reproduces the closed form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .circuit import Gate, Netlist, _sanitize, topology
from .errors import CausalityViolation, DirectionMismatch, UnknownEvent
from .gatemodel import (
    CasePair,
    ColdDelay,
    ModelLibrary,
    RESERVED,
    default_library,
    instantiate_delay,
    lookup_cold,
    lookup_template,
)
from .schedule import Schedule, attribute_causes, derive_case_sequence
from .symcore import Expr, as_expr, substitute, symbol


@dataclass(frozen=True)
class GateStep:
    """One input transition of one gate, with its delay-model context."""

    gate: str
    event: int  # index of the input event
    case: str
    pair: Optional[CasePair]
    direction: Optional[str]
    T_expr: Optional[Expr]
    Delta_expr: Optional[Expr]
    delay: Optional[Expr]
    candidate: Optional[Expr]  # time(input) + delay
    output_event: Optional[int]
    opaque: bool
    template: str
    recursive_delay: Optional[Expr] = None

    @property
    def cold(self) -> bool:
        return self.pair is None and self.output_event is not None


@dataclass(frozen=True)
class EventTiming:
    index: int
    name: str
    signal: str
    direction: str
    time: Expr
    recursive: Expr
    gate: Optional[str] = None
    step: Optional[GateStep] = None
    cause: Optional[int] = None

    @property
    def is_input(self) -> bool:
        return self.gate is None


@dataclass(frozen=True)
class TimingSolution:
    netlist: Netlist
    schedule: Schedule
    events: tuple
    steps: tuple
    time_symbols: dict  # output event index -> Symbol used in recursive forms
    diagnostics: tuple = ()
    _by_name: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._by_name.update({e.name: e for e in self.events})

    def event(self, ref) -> EventTiming:
        if isinstance(ref, EventTiming):
            return ref
        if isinstance(ref, int):
            if 0 <= ref < len(self.events):
                return self.events[ref]
            raise UnknownEvent(ref)
        try:
            return self._by_name[ref]
        except KeyError:
            raise UnknownEvent(ref) from None

    def time(self, ref) -> Expr:
        return self.event(ref).time

    @property
    def times(self) -> dict:
        return {e.index: e.time for e in self.events}

    @property
    def input_symbols(self) -> frozenset:
        names = set()
        for e in self.events:
            if e.is_input:
                names |= e.time.free_symbols
        return frozenset(names)

    @property
    def free_symbols(self) -> frozenset:
        names = set()
        for e in self.events:
            names |= e.time.free_symbols
        for s in self.steps:
            if s.delay is not None:
                names |= s.delay.free_symbols
        return frozenset(names)

    def expand(self, expr: Expr) -> Expr:
        """Replace event-time symbols of a recursive form by closed forms."""
        return substitute(expr, {self.time_symbols[i]: self.events[i].time for i in self.time_symbols})

    def steps_for(self, gate: Optional[str] = None, pair=None) -> list:
        if isinstance(pair, tuple):
            pair = CasePair(*pair)
        return [
            s for s in self.steps
            if (gate is None or s.gate == gate) and (pair is None or s.pair == pair)
        ]

    def outputs(self) -> list:
        return [e for e in self.events if not e.is_input]


def _gate_params(gate: Gate, body: Expr) -> dict:
    return {n: gate.default_parameter(n) for n in body.free_symbols if n not in RESERVED}


def propagate(
    netlist: Netlist,
    schedule: Schedule,
    model_lib: Optional[ModelLibrary] = None,
    allow_nonlogical: bool = False,
    pinned: Optional[Mapping] = None,
) -> TimingSolution:
    """Closed-form occurrence time of every event of ``schedule``.

    ``pinned`` optionally fixes the time of some events (by index or name) to
    a given expression; downstream events are composed from the pinned value.
    """
    lib = model_lib if model_lib is not None else default_library()
    if not schedule.attributed:
        schedule = attribute_causes(schedule, netlist, allow_nonlogical)
    events = schedule.events
    pins = {schedule.event(k).index: as_expr(v) for k, v in (pinned or {}).items()}

    case_of = {}
    for g in netlist.gates:
        for label, idx in derive_case_sequence(schedule, netlist, g, lib):
            case_of[(g.id, idx)] = label

    used = set()
    for ev in events:
        if ev.time is not None:
            used |= ev.time.free_symbols
    for g in netlist.gates:
        used.update(g.params)
        for v in g.params.values():
            used |= v.free_symbols
    time_symbols = {}
    for ev in events:
        if ev.time is None:
            name = f"t_{_sanitize(ev.signal)}_{ev.occurrence}"
            while name in used:
                name += "_"
            used.add(name)
            time_symbols[ev.index] = symbol(name)

    caused = {}
    for ev in events:
        if ev.cause is not None:
            caused[(netlist.driving_gate(ev.signal).id, ev.cause)] = ev.index

    closed: dict = {}
    recursive: dict = {}

    def ref(i):
        return time_symbols.get(i, events[i].time)

    diagnostics = [f"feedback loop through {', '.join(scc)}" for scc in topology(netlist).sccs]
    last_output: dict = {}
    last_input: dict = {}
    last_case: dict = {}
    pending: dict = {}
    steps = []
    timings = []

    for ev in events:
        gate = netlist.driving_gate(ev.signal)
        step = None
        if gate is None:
            closed[ev.index] = pins.get(ev.index, ev.time)
            recursive[ev.index] = ev.time
        else:
            if ev.cause is None or ev.cause >= ev.index:
                raise CausalityViolation(f"{ev} has no earlier cause")
            step = pending.pop((gate.id, ev.cause), None)
            if step is None or step.output_event != ev.index:
                raise CausalityViolation(f"{ev}: cause {events[ev.cause]} is not an input of {gate.id}")
            if last_output.get(gate.id) is not None and last_output[gate.id] > ev.cause:
                raise CausalityViolation(
                    f"{ev}: cause {events[ev.cause]} precedes the previous output transition of {gate.id}"
                )
            closed[ev.index] = pins.get(ev.index, step.candidate)
            recursive[ev.index] = ref(ev.cause) + step.recursive_delay
            last_output[gate.id] = ev.index
            if step.opaque:
                diagnostics.append(f"{ev.name}: {step.template}")
        timings.append(EventTiming(ev.index, ev.name, ev.signal, ev.direction, closed[ev.index],
                                   recursive[ev.index], gate.id if gate else None, step, ev.cause))

        for reader in netlist.readers.get(ev.signal, ()):
            s = _step(reader, ev, events, lib, case_of, caused, closed, ref,
                      last_output.get(reader.id), last_input.get(reader.id), last_case.get(reader.id))
            last_input[reader.id] = ev.index
            last_case[reader.id] = s.case
            if s.output_event is not None:
                pending[(reader.id, ev.index)] = s
            steps.append(s)

    return TimingSolution(netlist, schedule, tuple(timings), tuple(steps), time_symbols, tuple(diagnostics))


def _step(gate, ev, events, lib, case_of, caused, closed, ref, prev_out, prev_in, prev_case) -> GateStep:
    label = case_of[(gate.id, ev.index)]
    target = caused.get((gate.id, ev.index))
    t_c = closed[ev.index]
    T = t_c - closed[prev_out] if prev_out is not None else None
    Delta = t_c - closed[prev_in] if prev_in is not None else None
    T_rec = ref(ev.index) - ref(prev_out) if prev_out is not None else None
    Delta_rec = ref(ev.index) - ref(prev_in) if prev_in is not None else None
    pair = CasePair(prev_case, label) if prev_case is not None and prev_out is not None else None

    if target is not None:
        out_ev = events[target]
        direction = out_ev.direction
        if out_ev.nonlogical:
            opaque = symbol(f"d_nl_{_sanitize(out_ev.signal)}_{out_ev.occurrence}")
            tpl = ColdDelay(gate.gate_type, label, direction, opaque, opaque=True)
            describe = f"non-logical transition; opaque symbol {opaque}"
        elif prev_out is None:
            tpl = lookup_cold(lib, gate.gate_type, label, direction)
            describe = tpl.describe()
            pair = None
        else:
            tpl = lookup_template(lib, gate.gate_type, pair, direction)
            describe = tpl.describe()
        params = _gate_params(gate, tpl.body)
        delay = instantiate_delay(tpl, T, Delta, params)
        rec_delay = instantiate_delay(tpl, T_rec, Delta_rec, params)
        if tpl.opaque and not out_ev.nonlogical:
            describe = f"no published formula; opaque symbol {delay}"
        return GateStep(gate.id, ev.index, label, pair, direction, T, Delta, delay, t_c + delay,
                        target, tpl.opaque, describe, rec_delay)

    # input transition that does not (yet) switch the output
    direction = events[prev_out].direction if prev_out is not None else None
    delay = rec_delay = None
    describe = "no output transition"
    opaque = False
    if pair is not None:
        try:
            tpl = lookup_template(lib, gate.gate_type, pair, direction)
        except DirectionMismatch:
            tpl = None
        if tpl is not None and not tpl.opaque:
            params = _gate_params(gate, tpl.body)
            delay = instantiate_delay(tpl, T, Delta, params)
            rec_delay = instantiate_delay(tpl, T_rec, Delta_rec, params)
            describe = "no output transition; " + tpl.describe()
    return GateStep(gate.id, ev.index, label, pair, direction, T, Delta, delay,
                    None if delay is None else t_c + delay, None, opaque, describe, rec_delay)


def explain(solution: TimingSolution, event) -> str:
    """Human-readable derivation of one event's occurrence time."""
    e = solution.event(event)
    if e.is_input:
        return f"{e.name}: given: {e.time}"
    s = e.step
    cause = solution.event(e.cause)
    label = f"t_{e.signal}"
    lines = []
    if s.pair is None:
        lines.append(f"{e.name}: cold case {s.case}: {label} = {e.time}")
        if s.opaque:
            lines.append(f"  {s.template}")
    else:
        lines.append(f"{e.name}: pair {s.pair} {s.direction}: {label} = {e.time}")
        lines.append(f"  template: {s.template}")
        lines.append(f"  T = {s.T_expr}")
        lines.append(f"  DELTA = {s.Delta_expr}")
    lines.append(f"  cause: {cause.name} ({cause.signal} {'rise' if cause.direction == 'rising' else 'fall'}) at {cause.time}")
    lines.append(f"  delay = {s.delay}")
    lines.append(f"  recursive: {solution.time_symbols[e.index]} = {e.recursive}")
    return "\n".join(lines)


def format_report(solution: TimingSolution) -> str:
    return "\n".join(f"{e.name} -> {e.time}" for e in solution.events) + "\n"


def to_structured(solution: TimingSolution) -> dict:
    """JSON-ready export of a solution."""

    def text(x):
        return None if x is None else str(x)

    events = []
    for e in solution.events:
        row = {
            "index": e.index,
            "event": e.name,
            "signal": e.signal,
            "direction": e.direction,
            "expr": str(e.time),
            "kind": "input" if e.is_input else "output",
        }
        if not e.is_input:
            s = e.step
            row.update(
                gate=e.gate,
                cause=solution.event(e.cause).name,
                case_pair=f"{s.pair.previous},{s.pair.current}" if s.pair else None,
                cold_case=None if s.pair else s.case,
                T=text(s.T_expr),
                DELTA=text(s.Delta_expr),
                delay=text(s.delay),
                opaque=s.opaque,
                recursive=str(e.recursive),
            )
        events.append(row)
    steps = [
        {
            "gate": s.gate,
            "event": solution.event(s.event).name,
            "case": s.case,
            "case_pair": f"{s.pair.previous},{s.pair.current}" if s.pair else None,
            "direction": s.direction,
            "T": text(s.T_expr),
            "DELTA": text(s.Delta_expr),
            "delay": text(s.delay),
            "output_event": solution.event(s.output_event).name if s.output_event is not None else None,
        }
        for s in solution.steps
    ]
    return {"events": events, "steps": steps, "diagnostics": list(solution.diagnostics)}


def to_json(solution: TimingSolution) -> str:
    return json.dumps(to_structured(solution), indent=2)
