"""Symbolic timing analysis of gate-level circuits with analytic delay templates."""

from .analysis import check_consistency, export_smt, sensitivity, solve_ordering_region, sweep
from .circuit import parse_bench, parse_netlist, topology
from .engine import TimingSolution, explain, propagate
from .gatemodel import CasePair, classify_case, default_library, instantiate_delay, load_model_file, lookup_template
from .schedule import attribute_causes, derive_case_sequence, parse_schedule
from .symcore import Expr, differentiate, evaluate_exact, parse, substitute, symbol, symbols

__version__ = "0.1.0"

__all__ = [
    "CasePair",
    "Expr",
    "TimingSolution",
    "attribute_causes",
    "check_consistency",
    "classify_case",
    "default_library",
    "derive_case_sequence",
    "differentiate",
    "evaluate_exact",
    "explain",
    "export_smt",
    "instantiate_delay",
    "load_model_file",
    "lookup_template",
    "parse",
    "parse_bench",
    "parse_netlist",
    "parse_schedule",
    "propagate",
    "sensitivity",
    "solve_ordering_region",
    "substitute",
    "sweep",
    "symbol",
    "symbols",
    "topology",
]
