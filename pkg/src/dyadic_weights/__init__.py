"""Dyadic Muckenhoupt and reverse Hoelder weights: constants, summation
conditions, convexity coefficients and Bellman-function verification."""
from .dyadic import ROOT, DyadicInterval, DyadicWeight, average, build_weight, delta, doubling_constant
from .constants import ConstantKind, classical_constant, constant_result, weak_constant
from .convexity import FunctionFamily
from .summation import BuckleyKind, buckley_constant, comparability_report, representation_check
from .bellman import bellman_value, eval_f, eval_g, gamma_of, solve_q0
from .reports import Report, read_report, read_weight, summarize, write_report, write_weight

__version__ = "0.1.0"

__all__ = [
    "BuckleyKind",
    "ConstantKind",
    "DyadicInterval",
    "DyadicWeight",
    "FunctionFamily",
    "ROOT",
    "Report",
    "average",
    "bellman_value",
    "buckley_constant",
    "build_weight",
    "classical_constant",
    "comparability_report",
    "constant_result",
    "delta",
    "doubling_constant",
    "eval_f",
    "eval_g",
    "gamma_of",
    "read_report",
    "read_weight",
    "representation_check",
    "solve_q0",
    "summarize",
    "weak_constant",
    "write_report",
    "write_weight",
]
