"""Numeric instantiation and symbolic analyses of a timing solution."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .engine import TimingSolution
from .errors import ParseError, UnboundSymbol, UnknownSymbol, UnsupportedOperator, ValidationError
from .symcore import (
    Const,
    Exp,
    Expr,
    Ln,
    Power,
    Product,
    Sum,
    Symbol,
    differentiate,
    evaluate_exact,
    parse,
    substitute,
    symbol,
)


@dataclass(frozen=True)
class Violation:
    earlier: str
    later: str
    earlier_time: object
    later_time: object

    @property
    def tie(self) -> bool:
        return self.earlier_time == self.later_time

    def __str__(self):
        kind = "tie" if self.tie else "order violated"
        return f"{kind}: {self.earlier} @ {_num(self.earlier_time)} is not before {self.later} @ {_num(self.later_time)}"


@dataclass
class ConsistencyReport:
    verdict: str  # "consistent" | "violated"
    first_violation: Optional[Violation] = None
    validity_warnings: list = field(default_factory=list)
    times: dict = field(default_factory=dict)  # event name -> value

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"


def _num(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(v)


def _require_bound(exprs: Iterable[Expr], binding: Mapping):
    bound = {k.name if isinstance(k, Symbol) else k for k in binding}
    for e in exprs:
        missing = sorted(e.free_symbols - bound)
        if missing:
            raise UnboundSymbol(missing[0])


def check_physical(solution: TimingSolution, binding: Mapping):
    """Reject non-positive values for anything that is not an input time."""
    inputs = solution.input_symbols
    for k, v in binding.items():
        name = k.name if isinstance(k, Symbol) else k
        if name not in inputs and Fraction(v) <= 0:
            raise ValidationError(f"physical parameter {name} must be > 0, got {_num(Fraction(v))}")


def check_consistency(
    solution: TimingSolution,
    schedule=None,
    binding: Mapping = None,
    order: Optional[Sequence] = None,
    strict_physical: bool = False,
) -> ConsistencyReport:
    """Evaluate every event time and test that they strictly increase.

    ``order`` optionally replaces the schedule order by a permutation of the
    events (indices or names), e.g. to test a swapped candidate ordering.
    """
    binding = binding or {}
    schedule = schedule or solution.schedule
    if strict_physical:
        check_physical(solution, binding)
    exprs = [e.time for e in solution.events]
    exprs += [s.delay for s in solution.steps if s.delay is not None]
    _require_bound(exprs, binding)

    if order is None:
        sequence = [solution.event(ev.index) for ev in schedule.events]
    else:
        sequence = [solution.event(r) for r in order]
        if sorted(e.index for e in sequence) != list(range(len(solution.events))):
            raise ValidationError("order must be a permutation of all events")

    values = {e.index: evaluate_exact(e.time, binding) for e in solution.events}
    report = ConsistencyReport("consistent", times={e.name: values[e.index] for e in sequence})
    for prev, nxt in zip(sequence, sequence[1:]):
        if not values[prev.index] < values[nxt.index]:
            report.verdict = "violated"
            report.first_violation = Violation(prev.name, nxt.name, values[prev.index], values[nxt.index])
            break

    for s in solution.steps:
        if s.delay is None:
            continue
        d = evaluate_exact(s.delay, binding)
        if d <= 0:
            where = solution.event(s.event).name
            what = f"pair {s.pair}" if s.pair else f"cold case {s.case}"
            target = f" -> {solution.event(s.output_event).name}" if s.output_event is not None else ""
            report.validity_warnings.append(
                f"gate {s.gate} at {where}{target}: {what} delay {_num(d)} <= 0 (outside model validity)"
            )
    return report


def sensitivity(solution: TimingSolution, event, wrt) -> Expr:
    """Partial derivative of an event's occurrence time."""
    name = wrt.name if isinstance(wrt, Symbol) else wrt
    if name not in solution.free_symbols:
        raise UnknownSymbol(name)
    return differentiate(solution.time(event), name)


@dataclass(frozen=True)
class Constraint:
    """``expr > 0``, stating that ``earlier`` happens before ``later``."""

    expr: Expr
    earlier: str
    later: str

    def __str__(self):
        return f"{self.expr} > 0"


def solve_ordering_region(
    solution: TimingSolution,
    schedule=None,
    free: Optional[Sequence] = None,
    binding: Optional[Mapping] = None,
) -> list:
    """Constraints ``time(e[k+1]) - time(e[k]) > 0`` for consecutive events.

    When ``binding`` is given, every bound symbol not listed in ``free`` is
    replaced by its value, leaving constraints over the free symbols only.
    """
    schedule = schedule or solution.schedule
    subst = {}
    if binding:
        keep = {s.name if isinstance(s, Symbol) else s for s in (free or ())}
        subst = {k: Const(Fraction(v)) for k, v in binding.items()
                 if (k.name if isinstance(k, Symbol) else k) not in keep}
    out = []
    evs = [solution.event(ev.index) for ev in schedule.events]
    for prev, nxt in zip(evs, evs[1:]):
        diff = nxt.time - prev.time
        if subst:
            diff = substitute(diff, subst)
        out.append(Constraint(diff, prev.name, nxt.name))
    return out


# ---------------------------------------------------------------------------
# SMT-LIB2
# ---------------------------------------------------------------------------

def _smt_rational(v: Fraction) -> str:
    mag = f"{abs(v.numerator)}.0" if v.denominator == 1 else f"(/ {abs(v.numerator)}.0 {v.denominator}.0)"
    return f"(- {mag})" if v < 0 else mag


def _smt_nary(op: str, parts: list) -> str:
    return parts[0] if len(parts) == 1 else f"({op} {' '.join(parts)})"


def to_smt(e: Expr) -> str:
    if isinstance(e, Const):
        return _smt_rational(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, (Exp, Ln)):
        raise UnsupportedOperator(
            f"{type(e).__name__.lower()} cannot be expressed in QF_NRA; constraint {e} rejected"
        )
    if isinstance(e, Sum):
        pos, neg = [], []
        for op in e.operands:
            if isinstance(op, Const) and op.value < 0:
                neg.append(_smt_rational(-op.value))
            elif isinstance(op, Product) and isinstance(op.operands[0], Const) and op.operands[0].value < 0:
                neg.append(to_smt(-op))
            else:
                pos.append(to_smt(op))
        if not neg:
            return _smt_nary("+", pos)
        if not pos:
            return f"(- {_smt_nary('+', neg)})"
        return f"(- {_smt_nary('+', pos)} {_smt_nary('+', neg)})"
    if isinstance(e, Power):
        factor = to_smt(e.base)
        prod = _smt_nary("*", [factor] * abs(e.exponent))
        return prod if e.exponent > 0 else f"(/ 1.0 {prod})"
    if isinstance(e, Product):
        coeff = Fraction(1)
        ops = e.operands
        if isinstance(ops[0], Const):
            coeff, ops = ops[0].value, ops[1:]
        num, den = [], []
        if abs(coeff.numerator) != 1:
            num.append(f"{abs(coeff.numerator)}.0")
        if coeff.denominator != 1:
            den.append(f"{coeff.denominator}.0")
        for op in ops:
            if isinstance(op, Power) and op.exponent < 0:
                den.extend([to_smt(op.base)] * -op.exponent)
            elif isinstance(op, Power):
                num.extend([to_smt(op.base)] * op.exponent)
            else:
                num.append(to_smt(op))
        text = _smt_nary("*", num) if num else "1.0"
        if den:
            text = f"(/ {text} {_smt_nary('*', den)})"
        return f"(- {text})" if coeff < 0 else text
    raise TypeError(e)


def export_smt(
    inequalities: Sequence,
    declarations: Optional[Iterable] = None,
    binding: Optional[Mapping] = None,
) -> str:
    """SMT-LIB2 (QF_NRA) script asserting every ``expr > 0`` constraint.

    ``binding`` adds ``(assert (= sym value))`` lines, turning the script
    into a check of one numeric instantiation.
    """
    exprs = [c.expr if isinstance(c, Constraint) else c for c in inequalities]
    asserts = [f"(assert (> {to_smt(e)} 0.0))" for e in exprs]
    names = set()
    for e in exprs:
        names |= e.free_symbols
    if declarations is not None:
        names |= {d.name if isinstance(d, Symbol) else d for d in declarations}
    binding = {(k.name if isinstance(k, Symbol) else k): Fraction(v) for k, v in (binding or {}).items()}
    names |= set(binding)
    lines = ["(set-logic QF_NRA)"]
    lines += [f"(declare-const {n} Real)" for n in sorted(names)]
    lines += asserts
    lines += [f"(assert (= {n} {_smt_rational(v)}))" for n, v in sorted(binding.items())]
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sweeps and bindings
# ---------------------------------------------------------------------------

def sweep_expr(expr: Expr, wrt, grid: Sequence, base: Mapping) -> list:
    name = wrt.name if isinstance(wrt, Symbol) else wrt
    rows = []
    for value in grid:
        value = Fraction(value) if not isinstance(value, float) else value
        rows.append((value, evaluate_exact(expr, {**base, name: value})))
    return rows


def sweep(solution: TimingSolution, event, wrt, grid: Sequence, base: Mapping) -> list:
    """``(value, time)`` rows of an event time as ``wrt`` runs over ``grid``."""
    return sweep_expr(solution.time(event), wrt, grid, base)


def sweep_csv(rows: Sequence) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["value", "time"])
    for value, time in rows:
        writer.writerow([_num(value) if isinstance(value, Fraction) else value,
                         _num(time) if isinstance(time, Fraction) else time])
    return buf.getvalue()


_BIND_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)\Z")


def parse_binding(text: str) -> dict:
    """``name = value`` per line; values are exact constant expressions."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _BIND_RE.match(line)
        if not m:
            raise ParseError(lineno, f"expected 'name = value', got {line!r}")
        value = parse(m.group(2), line=lineno)
        if not isinstance(value, Const):
            raise ParseError(lineno, f"value of {m.group(1)} must be a number")
        out[m.group(1)] = value.value
    return out


def load_binding(path) -> dict:
    return parse_binding(Path(path).read_text())


def shift_inputs(solution: TimingSolution, shift: Expr) -> dict:
    """Event times with every primary-input time symbol moved by ``shift``."""
    moved = {n: symbol(n) + shift for n in solution.input_symbols}
    return {e.index: substitute(e.time, moved) for e in solution.events}


def pair_differences(times: Sequence) -> list:
    return [b - a for a, b in zip(times, times[1:])]


def text_waveform(solution: TimingSolution, width: int = 4) -> str:
    """ASCII timing diagram with one column block per event, in schedule order."""
    sched = solution.schedule
    signals = list(dict.fromkeys([*solution.netlist.primary_inputs, *(g.output for g in solution.netlist.gates)]))
    label_w = max(len(s) for s in signals) + 1
    rows = []
    header = " " * label_w + "".join(f"{k:<{width}}"[:width] for k in range(len(sched.events)))
    rows.append(header)
    for s in signals:
        level = sched.initial_values.get(s, 0)
        line = []
        for ev in sched.events:
            if ev.signal == s:
                line.append(("/" if ev.value else "\\") + ("-" if ev.value else "_") * (width - 1))
                level = ev.value
            else:
                line.append(("-" if level else "_") * width)
        rows.append(f"{s:<{label_w}}" + "".join(line))
    legend = [f"  {ev.index}: {ev.name} {'rise' if ev.value else 'fall'} @ {solution.time(ev.index)}"
              for ev in sched.events]
    return "\n".join(rows + [""] + legend) + "\n"
