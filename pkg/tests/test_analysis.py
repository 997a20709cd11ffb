import random
import shutil
import subprocess
from fractions import Fraction

import pytest

from oracles import FIXTURES, exact_central_difference, load_fixture, random_binding, rel_err
from symtime.analysis import (
    check_consistency,
    export_smt,
    load_binding,
    pair_differences,
    parse_binding,
    sensitivity,
    shift_inputs,
    solve_ordering_region,
    sweep,
    sweep_csv,
    sweep_expr,
    text_waveform,
    to_smt,
)
from symtime.circuit import parse_netlist
from symtime.engine import propagate
from symtime.errors import (
    ParseError,
    UnboundSymbol,
    UnknownEvent,
    UnknownSymbol,
    UnsupportedOperator,
    ValidationError,
)
from symtime.gatemodel import CasePair, default_library, lookup_template
from symtime.schedule import parse_schedule
from symtime.symcore import differentiate, evaluate_exact, exp, parse, substitute, symbol

TWO = parse_netlist("input a\ninput b\n")
WALK_BIND = load_binding(FIXTURES / "fig2.bind")


def _two_events(ta, tb):
    sched = parse_schedule(f"a rise @ {ta}\nb rise @ {tb}\n", TWO)
    return propagate(TWO, sched)


def test_two_events_in_order():
    rep = check_consistency(_two_events(1, 2))
    assert rep.consistent and rep.first_violation is None


def test_two_events_out_of_order():
    rep = check_consistency(_two_events(2, 1))
    assert rep.verdict == "violated"
    assert (rep.first_violation.earlier, rep.first_violation.later) == ("a:1", "b:1")
    assert not rep.first_violation.tie


def test_tie_is_violation():
    rep = check_consistency(_two_events(3, 3))
    assert rep.verdict == "violated" and rep.first_violation.tie
    assert "tie" in str(rep.first_violation)


def test_walkthrough_binding_warns_negative_delay(fig2):
    _, sched, sol = fig2
    rep = check_consistency(sol, sched, WALK_BIND)
    # T = 5 - 1 - 0 = 4, delay = -(4 + 1)/2 + 1
    (warning,) = rep.validity_warnings
    assert "(a,c)" in warning and "-3/2" in warning
    assert rep.consistent
    assert list(rep.times.values()) == [0, 1, 5, 7, 9, 10]


def test_walkthrough_delay_value_by_direct_arithmetic(fig2):
    _, _, sol = fig2
    (step,) = sol.steps_for("o1", ("a", "c"))
    C1 = C2 = RA = RB = dmin = Fraction(1)
    T = Fraction(5) - 1 - 0
    assert evaluate_exact(step.delay, WALK_BIND) == -C2 * RB * (T + dmin) / (C1 * (RA + RB)) + dmin


def test_unbound_symbol(fig2):
    _, sched, sol = fig2
    with pytest.raises(UnboundSymbol):
        check_consistency(sol, sched, {"t0": 0})


def test_order_override(fig2):
    _, sched, sol = fig2
    names = [e.name for e in sol.events]
    names[2], names[3] = names[3], names[2]
    rep = check_consistency(sol, sched, WALK_BIND, order=names)
    assert not rep.consistent
    assert (rep.first_violation.earlier, rep.first_violation.later) == ("a1:2", "a3:1")
    with pytest.raises(ValidationError):
        check_consistency(sol, sched, WALK_BIND, order=names[:-1])


def test_strict_physical(fig2):
    _, sched, sol = fig2
    check_consistency(sol, sched, WALK_BIND, strict_physical=True)
    with pytest.raises(ValidationError):
        check_consistency(sol, sched, {**WALK_BIND, "C1": Fraction(-1)}, strict_physical=True)
    # input times may be negative
    check_consistency(sol, sched, {**WALK_BIND, "t0": Fraction(-3)}, strict_physical=True)


def test_sensitivity_examples(fig2):
    _, _, sol = fig2
    assert sensitivity(sol, "o1:1", "t0") == 1
    assert sensitivity(sol, "o1:1", "t3") == 0
    with pytest.raises(UnknownSymbol):
        sensitivity(sol, "o1:1", "nope")
    with pytest.raises(UnknownEvent):
        sensitivity(sol, "x:1", "t0")


def test_sensitivity_of_ac_candidate(fig2):
    _, _, sol = fig2
    (step,) = sol.steps_for("o1", ("a", "c"))
    d = differentiate(step.candidate, "t1")
    assert d == parse("1 - C2*R_nB/(C1*(R_nA + R_nB))")
    rng = random.Random(4)
    for _ in range(5):
        b = random_binding(rng, step.candidate.free_symbols)
        fd = exact_central_difference(step.candidate, b, "t1")
        assert rel_err(fd, evaluate_exact(d, b)) <= Fraction(1, 10**6)


def test_ordering_region(fig2):
    _, sched, sol = fig2
    region = solve_ordering_region(sol, sched)
    assert len(region) == 5
    assert (region[1].earlier, region[1].later) == ("o1:1", "a3:1")
    assert region[1].expr == parse("t1 - d_a - t0")
    assert str(region[1]) == "-d_a - t0 + t1 > 0"
    assert region[0].expr == symbol("d_a")
    assert solve_ordering_region(_two_events("x", "y"))[0].expr == parse("y - x")
    empty = propagate(TWO, parse_schedule("", TWO))
    assert solve_ordering_region(empty) == []


def test_ordering_region_with_free_symbols(fig2):
    _, sched, sol = fig2
    region = solve_ordering_region(sol, sched, free=["t1"], binding=WALK_BIND)
    assert region[1].expr == parse("t1 - 1")


def test_smt_examples():
    text = export_smt([parse("t1 - d_a - t0")])
    assert "(assert (> (- t1 (+ d_a t0)) 0.0))" in text
    assert text.startswith("(set-logic QF_NRA)\n")
    assert text.rstrip().endswith("(check-sat)")
    assert export_smt([]) == "(set-logic QF_NRA)\n(check-sat)\n"
    assert "(declare-const z Real)" in export_smt([], declarations=["z"])


def test_smt_rejects_transcendentals():
    with pytest.raises(UnsupportedOperator):
        export_smt([exp(symbol("x"))])


def test_smt_rationals_and_powers():
    assert to_smt(parse("x/3 - 2*y^2")) == "(- (/ x 3.0) (* 2.0 y y))"
    assert to_smt(parse("1/x^2")) == "(/ 1.0 (* x x))"


def _z3(text):
    out = subprocess.run(["z3", "-in"], input=text, capture_output=True, text=True, timeout=30)
    return out.stdout.strip()


@pytest.mark.skipif(shutil.which("z3") is None, reason="z3 binary not installed")
def test_smt_agrees_with_checker(fig2):
    _, sched, sol = fig2
    region = solve_ordering_region(sol, sched)
    rng = random.Random(8)
    for k in range(8):
        b = random_binding(rng, sol.free_symbols, lo=Fraction(0), hi=Fraction(10))
        verdict = check_consistency(sol, sched, b).consistent
        assert _z3(export_smt(region, binding=b)) == ("sat" if verdict else "unsat")


def test_sweep_ac_template():
    tpl = lookup_template(default_library(), "NOR2", CasePair("a", "c"), "falling")
    ones = {n: 1 for n in ("C1", "C2", "R_nA", "R_nB", "d_min")}
    rows = sweep_expr(tpl.body, "T", [0, Fraction(1, 2), 1], ones)
    assert [t for _, t in rows] == [Fraction(1, 2), Fraction(1, 4), 0]
    assert sweep_csv(rows) == "value,time\n0,1/2\n1/2,1/4\n1,0\n"
    assert sweep_expr(tpl.body, "T", [], ones) == []
    assert [t for _, t in sweep_expr(parse("7"), "T", [1, 2, 3], {})] == [7, 7, 7]


def test_sweep_event(fig2):
    _, _, sol = fig2
    rows = sweep(sol, "o1:1", "d_a", [1, 2], {"t0": 3})
    assert rows == [(1, 4), (2, 5)]
    with pytest.raises(UnboundSymbol):
        sweep(sol, "o1:1", "d_a", [1], {})


def test_parse_binding():
    assert parse_binding("x = 1/2  # half\n\ny=0.25\n") == {"x": Fraction(1, 2), "y": Fraction(1, 4)}
    with pytest.raises(ParseError):
        parse_binding("x = y\n")
    with pytest.raises(ParseError):
        parse_binding("just words\n")


@pytest.mark.parametrize("stem, sched", [("fig2", None), ("c17_nor", "c17"), ("ring3", None)])
def test_translation_invariance(stem, sched):
    _, _, sol = load_fixture(stem, sched)
    before = pair_differences([e.time for e in sol.events])
    shifted = shift_inputs(sol, symbol("c"))
    after = pair_differences([shifted[e.index] for e in sol.events])
    assert before == after
    # each shifted time moved by exactly c
    for e in sol.events:
        assert shifted[e.index] - e.time == symbol("c")


def test_translation_invariance_of_steps(c17):
    _, _, sol = c17
    shift = {n: symbol(n) + symbol("c") for n in sol.input_symbols}
    for s in sol.steps:
        for e in (s.T_expr, s.Delta_expr, s.delay):
            if e is not None:
                assert substitute(e, shift) == e


def test_text_waveform(fig2):
    _, _, sol = fig2
    art = text_waveform(sol)
    lines = art.splitlines()
    assert any(l.startswith("a1") for l in lines)
    assert any(l.startswith("o1") for l in lines)
    assert all(ord(ch) < 128 for ch in art)
