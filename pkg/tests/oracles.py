"""Independent reference computations used by the test suite."""

import random
from fractions import Fraction
from pathlib import Path

import mpmath

from symtime.circuit import evaluate_gate, parse_netlist
from symtime.gatemodel import CasePair, lookup_cold, lookup_template, parse_model
from symtime.schedule import attribute_causes, parse_schedule
from symtime.symcore import Const, Exp, Ln, Power, Product, Sum, Symbol, evaluate_exact

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "symtime" / "fixtures"

mpmath.mp.dps = 50


def mp_eval(e, values):
    """High-precision evaluation by a separate tree walk."""
    if isinstance(e, Const):
        return mpmath.mpf(e.value.numerator) / e.value.denominator
    if isinstance(e, Symbol):
        return mpmath.mpf(values[e.name])
    if isinstance(e, Sum):
        return mpmath.fsum(mp_eval(op, values) for op in e.operands)
    if isinstance(e, Product):
        out = mpmath.mpf(1)
        for op in e.operands:
            out *= mp_eval(op, values)
        return out
    if isinstance(e, Power):
        return mp_eval(e.base, values) ** e.exponent
    if isinstance(e, Exp):
        return mpmath.exp(mp_eval(e.arg, values))
    if isinstance(e, Ln):
        return mpmath.log(mp_eval(e.arg, values))
    raise TypeError(e)


def exact_central_difference(expr, binding, name, h=Fraction(1, 10**6)):
    """Central difference computed in exact rationals."""
    up = evaluate_exact(expr, {**binding, name: Fraction(binding[name]) + h})
    down = evaluate_exact(expr, {**binding, name: Fraction(binding[name]) - h})
    return (up - down) / (2 * h)


def rel_err(approx, exact):
    if exact == 0:
        return abs(approx)
    return abs(approx - exact) / abs(exact)


def load_fixture(stem, sched=None):
    from symtime.engine import propagate

    netlist = parse_netlist((FIXTURES / f"{stem}.ckt").read_text())
    schedule = parse_schedule((FIXTURES / f"{sched or stem}.sched").read_text(), netlist)
    return netlist, schedule, propagate(netlist, schedule)


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------

_FORMS = [
    "-C2*R_nB*(T + d_min)/(C1*(R_nA + R_nB)) + d_min",
    "d_min + k*T",
    "d_min*(1 + DELTA^2)/(1 + T^2)",
    "k/(C1 + T^2) + DELTA/2",
    "d_min - k*DELTA*T/(R_nA + R_nB)",
]


def random_model_text():
    """Templates over most valid case pairs of every gate type.

    Every fourth pair is left out so that opaque fallbacks are exercised.
    """
    edges = {"a": ((0, 0), (1, 0)), "b": ((0, 0), (0, 1)), "c": ((1, 0), (1, 1)), "d": ((0, 1), (1, 1)),
             "e": ((1, 1), (0, 1)), "f": ((1, 1), (1, 0)), "g": ((0, 1), (0, 0)), "h": ((1, 0), (0, 0))}
    pairs = [(x, y) for x in edges for y in edges if edges[x][1] == edges[y][0]]
    lines = []
    for gt in ("NOR2", "NAND2", "C2"):
        lines += [f"gate {gt}", "params C1 C2 R_nA R_nB d_min k"]
        lines.append("cold a falling = d_min + k")
        for i, (x, y) in enumerate(pairs):
            if i % 4 == 3:
                continue
            for j, direction in enumerate(("rising", "falling")):
                lines.append(f"pair ({x},{y}) {direction} = {_FORMS[(i + j) % len(_FORMS)]}")
    return "\n".join(lines) + "\n"


RANDOM_MODEL = parse_model(random_model_text())


def random_instance(rng: random.Random, max_gates=4, max_events=8):
    """A random acyclic netlist and a logically valid schedule (as text)."""
    n_pi = rng.randint(2, 3)
    pis = [f"i{k}" for k in range(n_pi)]
    signals = list(pis)
    gates = []
    for k in range(rng.randint(1, max_gates)):
        a, b = rng.sample(signals, 2)
        gt = rng.choice(["NOR2", "NAND2", "C2"])
        out = f"y{k}"
        gates.append((f"g{k}", gt, a, b, out, rng.random() < 0.5))
        signals.append(out)

    values = {p: rng.randint(0, 1) for p in pis}
    for gid, gt, a, b, out, _ in gates:
        target = evaluate_gate(gt, values[a], values[b])
        values[out] = rng.randint(0, 1) if target is None else target
    init = dict(values)

    events = []
    while len(events) < max_events:
        unstable = []
        for gid, gt, a, b, out, _ in gates:
            target = evaluate_gate(gt, values[a], values[b])
            if target is not None and target != values[out]:
                unstable.append(out)
        if unstable and rng.random() < 0.6:
            sig = rng.choice(unstable)
        else:
            sig = rng.choice(pis)
        values[sig] ^= 1
        events.append((sig, "rise" if values[sig] else "fall"))

    net_lines = [f"input {p}" for p in pis]
    for gid, gt, a, b, out, private in gates:
        net_lines.append(f"gate {gid} {gt} A={a} B={b} Y={out}" + (" private" if private else ""))
    sched_lines = [f"init {s}={v}" for s, v in init.items()]
    sched_lines += [f"{s} {d}" for s, d in events]
    return "\n".join(net_lines) + "\n", "\n".join(sched_lines) + "\n"


def random_binding(rng, names, lo=Fraction(1, 4), hi=Fraction(8)):
    out = {}
    for n in sorted(names):
        num = rng.randint(1, 400)
        out[n] = lo + (hi - lo) * Fraction(num, 400)
    return out


def ordered_binding(rng, schedule, names, lo=Fraction(0), hi=Fraction(10), **kw):
    """Random binding whose input times follow the schedule order.

    Input times are sorted draws from [lo, hi]; other names use random_binding.
    """
    out = random_binding(rng, names, **kw)
    slots = [ev.time.name for ev in schedule.events if isinstance(ev.time, Symbol)]
    draws = sorted(lo + (hi - lo) * Fraction(rng.randint(0, 400), 400) for _ in slots)
    out.update(zip(slots, draws))
    return out


def simulate_numeric(netlist, schedule, lib, binding):
    """Forward simulation on numbers, applying the same template lookups.

    The case walk, T/DELTA bookkeeping and template evaluation are redone
    here with plain rationals; no symbolic composition is involved.
    """
    if not schedule.attributed:
        schedule = attribute_causes(schedule, netlist)
    pin_values = {g.id: [schedule.initial_values[g.input_A], schedule.initial_values[g.input_B]]
                  for g in netlist.gates}
    last_case, last_in_time, last_out_time = {}, {}, {}
    snapshot = {}
    times = {}
    for ev in schedule.events:
        gate = netlist.driving_gate(ev.signal)
        if gate is None:
            times[ev.index] = evaluate_exact(ev.time, binding)
        else:
            case_prev, case, t_c, T, D = snapshot[(gate.id, ev.cause)]
            params = lambda body: {n: evaluate_exact(gate.default_parameter(n), binding)
                                   for n in body.free_symbols if n not in ("T", "DELTA")}
            if gate.id not in last_out_time:
                tpl = lookup_cold(lib, gate.gate_type, case, ev.direction)
            else:
                tpl = lookup_template(lib, gate.gate_type, CasePair(case_prev, case), ev.direction)
            values = params(tpl.body)
            if T is not None:
                values["T"] = T
            if D is not None:
                values["DELTA"] = D
            times[ev.index] = t_c + evaluate_exact(tpl.body, values)
            last_out_time[gate.id] = times[ev.index]
        for g in netlist.gates:
            for pos, pin_sig in enumerate(g.inputs):
                if pin_sig != ev.signal:
                    continue
                before = tuple(pin_values[g.id])
                pin_values[g.id][pos] ^= 1
                case = lib.classify(before, "AB"[pos])
                t_c = times[ev.index]
                T = t_c - last_out_time[g.id] if g.id in last_out_time else None
                D = t_c - last_in_time[g.id] if g.id in last_in_time else None
                snapshot[(g.id, ev.index)] = (last_case.get(g.id), case, t_c, T, D)
                last_case[g.id] = case
                last_in_time[g.id] = t_c
    return times
