"""User-supplied total order of signal transitions.

Schedule file, one event per line in global order::

    init a1=0                 # optional header lines
    a1 rise @ t0              # primary-input event with a symbolic time
    o1 fall                   # gate-output event, time computed later
    o1 rise cause=7           # explicit cause: file line of an input event

Primary-input events without ``@`` get fresh time symbols ``t0, t1, ...``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Mapping, Optional

from .circuit import Gate, Netlist, evaluate_gate
from .errors import (
    InconsistentInitialState,
    NoFeasibleCause,
    NonAlternatingDirections,
    NonLogicalTransition,
    ParseError,
    UnknownEvent,
    UnknownSignal,
    ValidationError,
)
from .gatemodel import CasePair, ModelLibrary, classify_case
from .symcore import Expr, parse, symbol

_INIT_RE = re.compile(r"init\s+(\S+?)\s*=\s*([01])\Z")
_EVENT_RE = re.compile(
    r"(?P<sig>\S+)\s+(?P<dir>rise|fall)(?:\s*@\s*(?P<time>.+?))?(?:\s+cause\s*=\s*(?P<cause>\d+))?\s*\Z"
)
_DIRS = {"rise": "rising", "fall": "falling"}


@dataclass(frozen=True)
class TransitionEvent:
    index: int
    signal: str
    direction: str  # "rising" | "falling"
    occurrence: int  # 1-based count of transitions on this signal
    time: Optional[Expr] = None  # primary inputs only
    cause: Optional[int] = None  # gate outputs only, after attribution
    line: Optional[int] = None
    cause_line: Optional[int] = None
    nonlogical: bool = False

    @property
    def name(self) -> str:
        return f"{self.signal}:{self.occurrence}"

    @property
    def value(self) -> int:
        """Signal value after the event."""
        return 1 if self.direction == "rising" else 0

    def __str__(self):
        arrow = "rise" if self.direction == "rising" else "fall"
        return f"{self.name} ({self.signal} {arrow})"


@dataclass(frozen=True)
class Schedule:
    events: tuple
    initial_values: Mapping
    attributed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "initial_values", MappingProxyType(dict(self.initial_values)))

    def __len__(self):
        return len(self.events)

    def event(self, ref) -> TransitionEvent:
        """Look an event up by index or by ``signal:occurrence`` name."""
        if isinstance(ref, TransitionEvent):
            return ref
        if isinstance(ref, int):
            if 0 <= ref < len(self.events):
                return self.events[ref]
            raise UnknownEvent(ref)
        for ev in self.events:
            if ev.name == ref:
                return ev
        raise UnknownEvent(ref)

    def events_on(self, signal: str) -> list:
        return [ev for ev in self.events if ev.signal == signal]


def _resolve_initial_values(netlist: Netlist, explicit: dict, first_dir: dict) -> dict:
    values = {}
    for s in netlist.signals:
        if s in explicit:
            values[s] = explicit[s]
        elif s in first_dir:
            values[s] = 0 if first_dir[s] == "rising" else 1
        elif netlist.is_primary_input(s):
            values[s] = 0
    pending = [g for g in netlist.gates if g.output not in values]
    while pending:
        progress = False
        for g in list(pending):
            if g.input_A in values and g.input_B in values:
                target = evaluate_gate(g.gate_type, values[g.input_A], values[g.input_B])
                values[g.output] = 0 if target is None else target
                pending.remove(g)
                progress = True
        if not progress:
            # feedback without a stable assignment
            g = pending.pop(0)
            values[g.output] = 0
    return values


def parse_schedule(text: str, netlist: Netlist) -> Schedule:
    explicit_init: dict = {}
    raw_events = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _INIT_RE.match(line):
            if raw_events:
                raise ParseError(lineno, "init lines must precede all events")
            sig, bit = m.groups()
            if sig not in netlist.driver:
                raise UnknownSignal(sig)
            explicit_init[sig] = int(bit)
            continue
        m = _EVENT_RE.match(line)
        if not m:
            raise ParseError(lineno, f"cannot parse event {line!r}")
        sig = m.group("sig")
        if sig not in netlist.driver:
            raise UnknownSignal(sig)
        time = None
        if m.group("time") is not None:
            if not netlist.is_primary_input(sig):
                raise ParseError(lineno, f"{sig} is a gate output; its time is computed, not given")
            time = parse(m.group("time"), line=lineno)
        cause_line = int(m.group("cause")) if m.group("cause") else None
        if cause_line is not None and netlist.is_primary_input(sig):
            raise ParseError(lineno, f"{sig} is a primary input and cannot have a cause")
        raw_events.append((lineno, sig, _DIRS[m.group("dir")], time, cause_line))

    used = set()
    for g in netlist.gates:
        used.update(g.params)
        for v in g.params.values():
            used |= v.free_symbols
    for *_, time, _ in raw_events:
        if time is not None:
            used |= time.free_symbols
    fresh = (f"t{k}" for k in range(10**9) if f"t{k}" not in used)

    first_dir: dict = {}
    last_dir: dict = {}
    counts: dict = {}
    events = []
    for index, (lineno, sig, direction, time, cause_line) in enumerate(raw_events):
        if sig in last_dir and last_dir[sig] == direction:
            raise NonAlternatingDirections(sig, lineno)
        if sig not in first_dir:
            first_dir[sig] = direction
            if sig in explicit_init and explicit_init[sig] == (1 if direction == "rising" else 0):
                raise InconsistentInitialState(
                    f"line {lineno}: {sig} is initially {explicit_init[sig]} but its first event is a {direction} edge"
                )
        last_dir[sig] = direction
        counts[sig] = counts.get(sig, 0) + 1
        if netlist.is_primary_input(sig) and time is None:
            time = symbol(next(fresh))
        events.append(TransitionEvent(index, sig, direction, counts[sig], time, None, lineno, cause_line))

    line_to_index = {ev.line: ev.index for ev in events}
    resolved = []
    for ev in events:
        if ev.cause_line is not None:
            if ev.cause_line not in line_to_index:
                raise ParseError(ev.line, f"cause={ev.cause_line} does not refer to an event line")
            ev = replace(ev, cause=line_to_index[ev.cause_line])
        resolved.append(ev)

    init = _resolve_initial_values(netlist, explicit_init, first_dir)
    return Schedule(tuple(resolved), init)


def format_schedule(schedule: Schedule) -> str:
    lines = [f"init {s}={v}" for s, v in schedule.initial_values.items()]
    index_to_line = {ev.index: len(lines) + 1 + k for k, ev in enumerate(schedule.events)}
    for ev in schedule.events:
        text = f"{ev.signal} {'rise' if ev.direction == 'rising' else 'fall'}"
        if ev.time is not None:
            text += f" @ {ev.time}"
        if ev.cause is not None and ev.cause_line is not None:
            text += f" cause={index_to_line[ev.cause]}"
        lines.append(text)
    return "\n".join(lines) + "\n"


def _pin_state(gate: Gate, values: dict) -> tuple:
    return (values[gate.input_A], values[gate.input_B])


def attribute_causes(schedule: Schedule, netlist: Netlist, allow_nonlogical: bool = False) -> Schedule:
    """Attach a causing input event to every gate-output event.

    The cause is the most recent input event of the gate, after the gate's
    previous output transition, at which the gate's Boolean function switched
    to the output event's new value.  Explicit ``cause=`` lines win.
    """
    values = dict(schedule.initial_values)
    since_output: dict = {g.id: [] for g in netlist.gates}  # (index, flipped-to value)
    out = []
    for ev in schedule.events:
        gate = netlist.driving_gate(ev.signal)
        if gate is not None:
            ev = _attribute_one(ev, gate, values, since_output[gate.id], schedule, allow_nonlogical)
            since_output[gate.id] = []
        values[ev.signal] = ev.value
        for reader in netlist.readers.get(ev.signal, ()):
            before = _pin_state(reader, {**values, ev.signal: 1 - ev.value})
            after = _pin_state(reader, values)
            f_before = evaluate_gate(reader.gate_type, *before)
            f_after = evaluate_gate(reader.gate_type, *after)
            flipped = f_after if (f_after is not None and f_after != f_before) else None
            since_output[reader.id].append((ev.index, flipped))
        out.append(ev)
    for ev in out:
        if ev.cause is not None and ev.cause >= ev.index:
            raise ValidationError(f"{ev}: cause must precede the event")
    return Schedule(tuple(out), schedule.initial_values, attributed=True)


def _attribute_one(ev, gate, values, candidates, schedule, allow_nonlogical):
    target = evaluate_gate(gate.gate_type, *_pin_state(gate, values))
    logical = target == ev.value
    if ev.cause is not None:
        cause_ev = schedule.events[ev.cause]
        if ev.cause >= ev.index or cause_ev.signal not in gate.inputs:
            raise ValidationError(
                f"line {ev.line}: cause must be an earlier transition on an input of gate {gate.id}"
            )
        if not logical and not allow_nonlogical:
            raise NonLogicalTransition(
                f"{ev}: {gate.gate_type} with inputs {_pin_state(gate, values)} does not switch to {ev.value}"
            )
        return replace(ev, nonlogical=not logical)
    flips = [idx for idx, flipped in candidates if flipped == ev.value]
    if logical:
        if not flips:
            raise NoFeasibleCause(ev)
        return replace(ev, cause=flips[-1])
    if not allow_nonlogical:
        raise NonLogicalTransition(
            f"{ev}: {gate.gate_type} with inputs {_pin_state(gate, values)} does not switch to {ev.value} "
            "(use --allow-nonlogical to accept it with an opaque delay)"
        )
    pool = flips or [idx for idx, _ in candidates]
    if not pool:
        raise NoFeasibleCause(ev)
    return replace(ev, cause=pool[-1], nonlogical=True)


def derive_case_sequence(schedule: Schedule, netlist: Netlist, gate, lib: Optional[ModelLibrary] = None) -> list:
    """Case label of every input transition of ``gate``, in schedule order.

    Returns a list of ``(case_label, event_index)``.
    """
    if isinstance(gate, str):
        gate = netlist.gate(gate)
    state = (schedule.initial_values[gate.input_A], schedule.initial_values[gate.input_B])
    cases = []
    for ev in schedule.events:
        pins = gate.pins_of(ev.signal)
        if not pins:
            continue
        if len(pins) == 2:
            raise ValidationError(f"gate {gate.id} has both inputs on {ev.signal}; cases are undefined")
        pin = pins[0]
        bit = state[0] if pin == "A" else state[1]
        if bit == ev.value:
            raise InconsistentInitialState(
                f"{ev}: input {pin} of gate {gate.id} is already {bit}"
            )
        label = classify_case(state, pin, lib)
        cases.append((label, ev.index))
        state = (1 - state[0], state[1]) if pin == "A" else (state[0], 1 - state[1])
    return cases


def case_pairs(cases: list) -> list:
    """Consecutive two-step sequences of a case walk."""
    labels = [c for c, _ in cases]
    return [CasePair(x, y) for x, y in zip(labels, labels[1:])]
