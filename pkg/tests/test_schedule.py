import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import FIXTURES, random_instance
from symtime.circuit import evaluate_gate, parse_netlist
from symtime.errors import (
    InconsistentInitialState,
    NoFeasibleCause,
    NonAlternatingDirections,
    NonLogicalTransition,
    ParseError,
    UnknownSignal,
    ValidationError,
)
from symtime.gatemodel import CasePair, ModelLibrary
from symtime.schedule import (
    attribute_causes,
    case_pairs,
    derive_case_sequence,
    format_schedule,
    parse_schedule,
)
from symtime.symcore import symbol

NOR = parse_netlist("input a1\ninput a3\noutput o1\ngate o1 NOR2 A=a1 B=a3 Y=o1\n")


def _walk_schedule():
    return parse_schedule((FIXTURES / "fig2.sched").read_text(), NOR)


def test_parse_walkthrough():
    s = _walk_schedule()
    assert len(s) == 6
    assert [(e.signal, e.direction) for e in s.events] == [
        ("a1", "rising"), ("o1", "falling"), ("a3", "rising"),
        ("a1", "falling"), ("a3", "falling"), ("o1", "rising"),
    ]
    assert [e.time for e in s.events if e.time is not None] == [symbol(f"t{k}") for k in range(4)]
    assert s.initial_values == {"a1": 0, "a3": 0, "o1": 1}
    assert s.event("o1:2").index == 5


def test_parse_listed_order_variant():
    # output fall listed after the second input rise
    text = "a1 rise @ t0\na3 rise @ t1\no1 fall\na1 fall @ t2\na3 fall @ t3\no1 rise\n"
    s = attribute_causes(parse_schedule(text, NOR), NOR)
    assert len(s) == 6
    assert s.event("o1:1").cause == 0


def test_empty_schedule():
    s = parse_schedule("# nothing\n", NOR)
    assert len(s) == 0
    assert attribute_causes(s, NOR).events == ()


def test_fresh_symbols_skip_used_names():
    s = parse_schedule("a1 rise @ t0\na3 rise\na1 fall\n", NOR)
    assert [e.time for e in s.events] == [symbol("t0"), symbol("t1"), symbol("t2")]
    s = parse_schedule("a1 rise\na3 rise @ t0 + 1\n", NOR)
    assert s.events[0].time == symbol("t1")


def test_non_alternating():
    with pytest.raises(NonAlternatingDirections):
        parse_schedule("a1 rise\na1 rise\n", NOR)


@pytest.mark.parametrize(
    "text, exc",
    [
        ("zz rise\n", UnknownSignal),
        ("a1 up\n", ParseError),
        ("o1 fall @ t0\n", ParseError),
        ("a1 rise cause=1\n", ParseError),
        ("a1 rise\ninit a1=0\n", ParseError),
        ("init a1=1\na1 rise\n", InconsistentInitialState),
        ("init q=1\n", UnknownSignal),
        ("a1 rise @ t0 +\n", ParseError),
    ],
)
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_schedule(text, NOR)


def test_attribution_walkthrough():
    s = attribute_causes(_walk_schedule(), NOR)
    assert s.event("o1:1").cause == s.event("a1:1").index
    assert s.event("o1:2").cause == s.event("a3:2").index


def test_attribution_oracle_truth_table():
    """Re-derive the o1 rise cause by walking the NOR truth table."""
    s = _walk_schedule()
    values = {"a1": 0, "a3": 0}
    flips = []
    for ev in s.events:
        if ev.signal in values:
            before = evaluate_gate("NOR2", values["a1"], values["a3"])
            values[ev.signal] = ev.value
            after = evaluate_gate("NOR2", values["a1"], values["a3"])
            if before != after:
                flips.append((ev.index, after))
    last_rise = [i for i, v in flips if v == 1][-1]
    assert attribute_causes(s, NOR).event("o1:2").cause == last_rise


def test_output_before_input_has_no_cause():
    s = parse_schedule("init o1=1\no1 fall\na1 rise\n", NOR)
    with pytest.raises((NoFeasibleCause, NonLogicalTransition)):
        attribute_causes(s, NOR)


def test_no_feasible_cause_when_already_switched():
    s = parse_schedule("init a1=1\ninit o1=1\no1 fall\n", NOR)
    with pytest.raises(NoFeasibleCause):
        attribute_causes(s, NOR)


def test_nonlogical_rejected_then_allowed():
    text = "a1 rise\no1 fall\na3 rise\no1 rise\n"
    s = parse_schedule(text, NOR)
    with pytest.raises(NonLogicalTransition):
        attribute_causes(s, NOR)
    ok = attribute_causes(s, NOR, allow_nonlogical=True)
    assert ok.event("o1:2").nonlogical
    assert ok.event("o1:2").cause == 2


def test_explicit_cause_overrides():
    text = "a1 rise\na3 rise\no1 fall cause=2\n"
    s = attribute_causes(parse_schedule(text, NOR), NOR)
    assert s.event("o1:1").cause == 1
    with pytest.raises(ValidationError):
        attribute_causes(parse_schedule("a1 rise\no1 fall cause=3\na3 rise\n", NOR), NOR)


def test_case_sequence_walkthrough():
    s = _walk_schedule()
    cases = derive_case_sequence(s, NOR, "o1")
    assert [c for c, _ in cases] == ["a", "c", "e", "g"]
    assert case_pairs(cases) == [CasePair("a", "c"), CasePair("c", "e"), CasePair("e", "g")]


def test_case_sequence_single_event():
    s = parse_schedule("a1 rise\n", NOR)
    cases = derive_case_sequence(s, NOR, "o1")
    assert [c for c, _ in cases] == ["a"]
    assert case_pairs(cases) == []


def test_case_sequence_no_events():
    s = parse_schedule("", NOR)
    assert derive_case_sequence(s, NOR, "o1") == []


def test_case_sequence_with_remapped_labels():
    lib = ModelLibrary(edges={
        "a": ((0, 0), "B"), "b": ((0, 0), "A"), "c": ((1, 0), "B"), "d": ((0, 1), "A"),
        "e": ((1, 1), "A"), "f": ((1, 1), "B"), "g": ((0, 1), "B"), "h": ((1, 0), "A"),
    })
    s = parse_schedule("a1 rise\n", NOR)
    assert derive_case_sequence(s, NOR, "o1", lib) == [("b", 0)]


def test_format_round_trip():
    s = _walk_schedule()
    again = parse_schedule(format_schedule(s), NOR)
    assert [(e.signal, e.direction, e.time) for e in again.events] == [
        (e.signal, e.direction, e.time) for e in s.events
    ]
    assert again.initial_values == s.initial_values


def test_schedule_is_immutable():
    s = _walk_schedule()
    with pytest.raises(TypeError):
        s.initial_values["a1"] = 1
    with pytest.raises(AttributeError):
        s.events = ()


# ---------------------------------------------------------------------------
# properties over random instances
# ---------------------------------------------------------------------------

seeds = st.integers(0, 10**9)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_attribution_deterministic_and_causal(seed):
    nt, st_text = random_instance(random.Random(seed))
    net = parse_netlist(nt)
    sched = parse_schedule(st_text, net)
    first = attribute_causes(sched, net)
    assert first == attribute_causes(sched, net)
    for ev in first.events:
        if net.driving_gate(ev.signal) is not None:
            cause = first.events[ev.cause]
            assert cause.index < ev.index
            assert cause.signal in net.driving_gate(ev.signal).inputs


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_case_walk_soundness(seed):
    """Composing the case edges reproduces each gate's input trajectory."""
    nt, st_text = random_instance(random.Random(seed))
    net = parse_netlist(nt)
    sched = parse_schedule(st_text, net)
    lib = ModelLibrary()
    for g in net.gates:
        # brute-force trajectory from the raw event list
        values = dict(sched.initial_values)
        trajectory = [(values[g.input_A], values[g.input_B])]
        for ev in sched.events:
            values[ev.signal] = ev.value
            if ev.signal in g.inputs:
                trajectory.append((values[g.input_A], values[g.input_B]))
        cases = derive_case_sequence(sched, net, g)
        state = trajectory[0]
        replay = [state]
        for label, _ in cases:
            source, _, target = lib.edge(label)
            assert source == state
            state = target
            replay.append(state)
        assert replay == trajectory
        for pair in case_pairs(cases):
            assert lib.valid_pair(pair)
