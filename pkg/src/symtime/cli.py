"""Batch command-line front end.

Exit codes: 0 success (or consistent), 1 ordering violated, 2 error.
"""

from __future__ import annotations

import argparse
import re
import shutil
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import analysis
from .circuit import parse_bench, parse_netlist
from .engine import explain, format_report, propagate, to_json
from .errors import TimingError
from .gatemodel import CasePair, default_library, load_model_file, lookup_template
from .schedule import parse_schedule
from .symcore import parse

FIXTURES = ("fig2.ckt", "fig2.sched", "fig2.bind", "c17_nor.ckt", "c17.sched", "c17.bind", "ring3.ckt", "ring3.sched")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    netlist: Optional[Path] = None
    schedule: Optional[Path] = None
    model: Optional[Path] = None
    out: Optional[Path] = None
    output_format: str = "text"
    options: dict = field(default_factory=dict)


def _fixture(name: str) -> Path:
    return Path(str(resources.files("symtime.fixtures").joinpath(name)))


def _resolve(path: str) -> Path:
    """A path on disk, or the name of a bundled fixture."""
    p = Path(path)
    if p.exists():
        return p
    if p.name == str(p) and p.name in FIXTURES:
        return _fixture(p.name)
    raise FileNotFoundError(f"no such file: {path}")


def _load(args):
    netlist_path = _resolve(args.netlist)
    text = netlist_path.read_text()
    netlist = parse_bench(text) if args.bench else parse_netlist(text)
    schedule = parse_schedule(_resolve(args.schedule).read_text(), netlist)
    lib = load_model_file(_resolve(args.model)) if args.model else default_library()
    solution = propagate(netlist, schedule, lib, allow_nonlogical=args.allow_nonlogical)
    return solution, lib


def _binding(args) -> dict:
    binding = {}
    if getattr(args, "binding", None):
        binding.update(analysis.load_binding(_resolve(args.binding)))
    for item in getattr(args, "set", None) or ():
        binding.update(analysis.parse_binding(item))
    return binding


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    solution, _ = _load(args)
    if args.format == "structured":
        text = to_json(solution) + "\n"
    else:
        text = format_report(solution)
        for ev in args.explain or ():
            text += explain(solution, ev) + "\n"
        if args.text_waveform:
            text += "\n" + analysis.text_waveform(solution)
    _emit(text, args.out)
    for d in solution.diagnostics:
        print(f"note: {d}", file=sys.stderr)
    return 0


def cmd_check(args) -> int:
    solution, _ = _load(args)
    order = args.order.split(",") if args.order else None
    report = analysis.check_consistency(
        solution, solution.schedule, _binding(args), order=order, strict_physical=args.strict_physical
    )
    for w in report.validity_warnings:
        print(f"warning: {w}", file=sys.stderr)
    lines = [f"{name} = {analysis._num(v)}" for name, v in report.times.items()]
    if report.consistent:
        lines.append("consistent")
    else:
        lines.append(f"violated: {report.first_violation}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if report.consistent else 1


def cmd_sens(args) -> int:
    solution, _ = _load(args)
    _emit(f"{analysis.sensitivity(solution, args.event, args.wrt)}\n", args.out)
    return 0


_TEMPLATE_RE = re.compile(r"(\w+)\s*\(\s*([a-h])\s*,\s*([a-h])\s*\)\s*(rising|falling)\Z")


def _grid(text: str) -> list:
    values = []
    for item in text.split(","):
        v = parse(item.strip())
        if v.free_symbols:
            raise UsageError(f"grid value {item!r} is not a number")
        values.append(v.value)
    return values


def cmd_sweep(args) -> int:
    base = _binding(args)
    grid = _grid(args.grid)
    if args.template:
        m = _TEMPLATE_RE.match(args.template.strip())
        if not m:
            raise UsageError("--template expects e.g. 'NOR2 (a,c) falling'")
        lib = load_model_file(_resolve(args.model)) if args.model else default_library()
        tpl = lookup_template(lib, m.group(1), CasePair(m.group(2), m.group(3)), m.group(4))
        rows = analysis.sweep_expr(tpl.body, args.wrt, grid, base)
    else:
        if not (args.netlist and args.schedule and args.event):
            raise UsageError("sweep needs NETLIST SCHEDULE --event, or --template")
        solution, _ = _load(args)
        rows = analysis.sweep(solution, args.event, args.wrt, grid, base)
    if args.format == "csv" or args.out:
        _emit(analysis.sweep_csv(rows), args.out)
    else:
        _emit("".join(f"{analysis._num(v)}\t{analysis._num(t)}\n" for v, t in rows), None)
    return 0


def cmd_export_smt(args) -> int:
    solution, _ = _load(args)
    free = args.free.split(",") if args.free else None
    binding = _binding(args)
    if free is not None:
        constraints = analysis.solve_ordering_region(solution, free=free, binding=binding)
        text = analysis.export_smt(constraints)
    else:
        constraints = analysis.solve_ordering_region(solution)
        text = analysis.export_smt(constraints, binding=binding)
    _emit(text, args.out)
    return 0


def cmd_fixtures(args) -> int:
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    for name in FIXTURES:
        shutil.copyfile(_fixture(name), dest / name)
    (dest / "default.model").write_text(resources.files("symtime.data").joinpath("default.model").read_text())
    print(f"copied {len(FIXTURES) + 1} files to {dest}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symtime", description="Symbolic timing analysis of gate-level circuits")
    sub = parser.add_subparsers(dest="command", required=True)

    def inputs(p, required=True):
        nargs = None if required else "?"
        p.add_argument("netlist", nargs=nargs, help="netlist file (or bundled fixture name)")
        p.add_argument("schedule", nargs=nargs, help="schedule file")
        p.add_argument("--model", help="delay model file (default: shipped model)")
        p.add_argument("--bench", action="store_true", help="read the netlist as ISCAS .bench")
        p.add_argument("--allow-nonlogical", action="store_true",
                       help="accept output transitions the gate function does not explain")
        p.add_argument("--out", help="write the result to this file")

    p = sub.add_parser("analyze", help="print closed-form transition times")
    inputs(p)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--explain", action="append", metavar="EVENT", help="derivation of EVENT (e.g. o1:1)")
    p.add_argument("--text-waveform", action="store_true", help="append an ASCII timing diagram")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check", help="check the ordering under a numeric binding")
    inputs(p)
    p.add_argument("binding", help="binding file: 'name = value' lines")
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    p.add_argument("--order", help="comma-separated event names replacing the schedule order")
    p.add_argument("--strict-physical", action="store_true", help="require positive gate parameters")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sens", help="partial derivative of an event time")
    inputs(p)
    p.add_argument("--event", required=True)
    p.add_argument("--wrt", required=True)
    p.set_defaults(func=cmd_sens)

    p = sub.add_parser("sweep", help="evaluate an event time or template over a grid")
    inputs(p, required=False)
    p.add_argument("--event")
    p.add_argument("--template", help="e.g. 'NOR2 (a,c) falling'")
    p.add_argument("--wrt", required=True)
    p.add_argument("--grid", required=True, help="comma-separated values, e.g. 0,1/2,1")
    p.add_argument("--binding")
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-smt", help="write ordering constraints as SMT-LIB2 (QF_NRA)")
    inputs(p)
    p.add_argument("--binding")
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    p.add_argument("--free", help="comma-separated symbols kept free when a binding is given")
    p.set_defaults(func=cmd_export_smt)

    p = sub.add_parser("fixtures", help="copy the bundled example files to a directory")
    p.add_argument("dest")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TimingError, UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
