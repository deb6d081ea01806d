"""Buckley sums and constants, and their comparison with classical constants.

The sum on ``J`` is ``S_s(J) = (1/|J|) sum_{I in D(J)} (Delta_I w / <w>_I)^2 <w>_I^s |I|``,
over all internal dyadic subintervals of ``J`` including ``J``.  It obeys
``S(J) = t_J + (S(J+) + S(J-))/2`` with ``S(leaf) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import ConstantKind, constant_result, node_values
from .convexity import (DEFAULT_DOUBLING_CAP, FunctionFamily, family_beta, guaranteed_q, jensen_gap,
                        upper_constant)
from .dyadic import DyadicInterval, DyadicWeight, ROOT, block_means, doubling_constant

__all__ = [
    "BuckleyKind",
    "ComparabilityReport",
    "Pair",
    "RepresentationResult",
    "buckley_constant",
    "buckley_sum",
    "comparability_report",
    "family_bounds",
    "fkp_check",
    "normalized_sums",
    "representation_check",
    "sum_tree",
]


@dataclass(frozen=True)
class BuckleyKind:
    tag: str
    p: float | None = None

    def __post_init__(self):
        if self.tag in ("RHpB", "WeakRHpB"):
            if self.p is None or not self.p >= 1:
                raise ValueError(f"{self.tag} needs p >= 1")
        elif self.tag == "ApB":
            if self.p is None or not self.p > 1:
                raise ValueError("ApB needs p > 1")
        elif self.tag == "AinfB":
            if self.p is not None:
                raise ValueError("AinfB takes no p")
        else:
            raise ValueError(f"unknown Buckley kind {self.tag!r}")

    @property
    def exponent(self) -> float:
        if self.tag == "ApB":
            return -1.0 / (self.p - 1.0)
        return 0.0 if self.tag == "AinfB" else float(self.p)

    @property
    def label(self) -> str:
        return f"{self.tag}({self.p:g})" if self.p is not None else self.tag

    @classmethod
    def parse(cls, text: str, p: float | None = None) -> "BuckleyKind":
        tag, _, val = text.strip().partition(":")
        if tag == "AinfB":
            return cls(tag)
        return cls(tag, float(val) if val else p)


def _terms(w: DyadicWeight, s: float) -> list[np.ndarray]:
    """``(Delta_I / <w>_I)^2 <w>_I^s`` on each internal level."""
    out = []
    for j in range(w.depth):
        m = w.levels[j]
        ch = w.levels[j + 1]
        r = (ch[0::2] - ch[1::2]) / m
        out.append(r * r * m**s)
    return out


def sum_tree(w: DyadicWeight, s: float) -> list[np.ndarray]:
    """``S_s`` on every node, as per-level arrays (leaves give 0)."""
    terms = _terms(w, s)
    S = [np.zeros(w.size)]
    for j in range(w.depth - 1, -1, -1):
        below = S[0]
        S.insert(0, terms[j] + 0.5 * (below[0::2] + below[1::2]))
    return S


def buckley_sum(w: DyadicWeight, J: DyadicInterval, s: float) -> float:
    J = w.check(J)
    return float(sum_tree(w, s)[J.level][J.index])


def normalized_sums(w: DyadicWeight, s: float) -> list[np.ndarray]:
    """``S_s(J) / <w>_J^s`` on every node, computed from ``<w>_I / <w>_J`` ratios.

    Exactly invariant under ``w -> c w`` and free of overflow in ``<w>^s``.
    """
    out = []
    for j in range(w.depth + 1):
        acc = np.zeros(1 << j)
        for l in range(j, w.depth):
            m = w.levels[l]
            ch = w.levels[l + 1]
            r = (ch[0::2] - ch[1::2]) / m
            rel = m / np.repeat(w.levels[j], 1 << (l - j))
            acc = acc + block_means(r * r * rel**s, 1 << (l - j))
        out.append(acc)
    return out


def _buckley_levels(w: DyadicWeight, kind: BuckleyKind) -> list[np.ndarray]:
    sums = normalized_sums(w, kind.exponent)
    if kind.tag != "WeakRHpB":
        return sums
    if w.depth < 1:
        raise ValueError("weak Buckley constants need depth >= 1")
    out = [np.empty(0)]
    for j in range(1, w.depth + 1):
        ratio = w.levels[j] / np.repeat(w.levels[j - 1], 2)
        out.append(sums[j] * ratio**kind.p)
    return out


def buckley_constant(w: DyadicWeight, kind: BuckleyKind, *, with_argmax: bool = False):
    """``sup_J S_s(J) / normalizer(J)``; weak kinds normalize by the parent average."""
    best, arg = -math.inf, ROOT
    for j, vals in enumerate(_buckley_levels(w, kind)):
        if vals.size == 0:
            continue
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, arg = float(vals[k]), DyadicInterval(j, k)
    return (best, arg) if with_argmax else best


# ---------------------------------------------------------------------------
# representation of bumped averages
# ---------------------------------------------------------------------------

def family_bounds(family: FunctionFamily, cap: float | None = None) -> tuple[float, float]:
    """``(c, C)`` with ``c gap <= S <= C gap`` for the normalized sum of ``family``.

    ``C = (8/q) / k`` with the a-priori ``q``; ``c = 1 / (beta k)``, where ``k``
    converts the normalized sum into the ``A''``-weighted one.
    """
    k = family.sum_factor
    C = upper_constant(guaranteed_q(family)) / k
    c = 1.0 / (family_beta(family, cap if family.needs_doubling else None) * k)
    return c, C


@dataclass(frozen=True)
class RepresentationResult:
    sum: float
    gap: float
    ratio: float
    lower_ratio: float
    upper_ratio: float
    bound_lower: float
    bound_upper: float
    degenerate: bool
    doubling_exempt: bool
    flag: str | None
    lower_ok: bool
    upper_ok: bool


def representation_check(w: DyadicWeight, family: FunctionFamily, J: DyadicInterval = ROOT, *,
                         cap: float | None = None, tol: float = 1e-10) -> RepresentationResult:
    """Compare the normalized sum with the Jensen gap of ``family`` on ``J``.

    ``lower_ratio = ratio / c`` and ``upper_ratio = ratio / C``, so the bounds
    hold when ``lower_ratio >= 1`` and ``upper_ratio <= 1``.  The lower bound
    of the doubling-restricted families is exempt when ``D(w) > cap``.
    """
    J = w.check(J)
    if not family.convex:
        raise ValueError("representation needs a convex family")
    cap = DEFAULT_DOUBLING_CAP if cap is None else cap
    S = buckley_sum(w, J, family.sum_exponent)
    gap = jensen_gap(w, family, J)
    c, C = family_bounds(family, cap)
    exempt = family.needs_doubling and w.depth > 0 and doubling_constant(w) > cap
    flag = None
    scale = max(1.0, abs(float(family.value(w.levels[J.level][J.index]))))
    if gap <= tol * scale * 1e-3 and S <= tol * 1e-3:
        ratio, degenerate = 1.0, True
        lower_ok = upper_ok = True
    elif gap <= 0:
        ratio, degenerate = math.inf, True
        flag = "zero gap with nonzero sum"
        lower_ok, upper_ok = True, False
    else:
        ratio, degenerate = S / gap, False
        upper_ok = S <= C * gap + tol * scale
        lower_ok = exempt or S >= c * gap - tol * scale
    return RepresentationResult(S, gap, ratio, ratio / c, ratio / C, c, C, degenerate, bool(exempt),
                                flag, bool(lower_ok), bool(upper_ok))


@dataclass(frozen=True)
class FKPResult:
    sum: float
    bound16: float
    bound8: float
    passed: bool
    sharp8_violated: bool


def fkp_check(w: DyadicWeight, J: DyadicInterval = ROOT, *, tol: float = 1e-10) -> FKPResult:
    """``S_0(J) <= 16 (log <w>_J - <log w>_J)``; the constant 8 is reported only."""
    S = buckley_sum(w, J, 0.0)
    gap = jensen_gap(w, FunctionFamily("log"), J)
    return FKPResult(S, 16 * gap, 8 * gap, S <= 16 * gap + tol, S > 8 * gap + tol)


# ---------------------------------------------------------------------------
# comparability of constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pair:
    name: str
    classical: float
    buckley: float
    ratio: float | None
    lower: float | None
    upper: float | None
    lower_ok: bool
    upper_ok: bool
    exempt: bool = False


@dataclass
class ComparabilityReport:
    p: float
    doubling: float | None
    cap: float
    pairs: list[Pair] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(pr.lower_ok and pr.upper_ok for pr in self.pairs)


def _pair(name, classical, buckley, c, C, tol, exempt=False) -> Pair:
    scale = max(1.0, abs(classical))
    ratio = buckley / classical if classical > 0 else None
    lower = None if c is None else c * classical
    upper = None if C is None else C * classical
    lo_ok = exempt or lower is None or buckley >= lower - tol * scale
    up_ok = upper is None or buckley <= upper + tol * scale
    return Pair(name, classical, buckley, ratio, lower, upper, bool(lo_ok), bool(up_ok), exempt)


def comparability_report(w: DyadicWeight, p: float, *, cap: float | None = None,
                         tol: float = 1e-9) -> ComparabilityReport:
    """Classical versus Buckley constants with the constants of :func:`family_bounds`.

    Pairs: ``RHp^p - 1`` / ``RHpB``; ``RH1`` / ``RH1B``; ``Ap^(1/(p-1)) - 1`` / ``ApB``;
    ``log Ainf`` / ``AinfB`` (lower bounds of the last two need doubling);
    weak ``WeakRHp^p`` / ``WeakRHpB`` both ways, and the weak ``p = 1`` pair.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    cap = DEFAULT_DOUBLING_CAP if cap is None else cap
    D = doubling_constant(w) if w.depth > 0 else None
    exempt = D is not None and D > cap
    rep = ComparabilityReport(p, D, cap)

    def val(kind):
        return constant_result(w, kind).value

    c, C = family_bounds(FunctionFamily("power", p))
    rhp = val(ConstantKind("RHp", p))
    rep.pairs.append(_pair("RHp", rhp**p - 1.0, buckley_constant(w, BuckleyKind("RHpB", p)), c, C, tol))
    c, C = family_bounds(FunctionFamily("xlogx"))
    rep.pairs.append(_pair("RH1", val(ConstantKind("RH1")), buckley_constant(w, BuckleyKind("RHpB", 1.0)), c, C, tol))
    c, C = family_bounds(FunctionFamily("negpower", p), cap)
    ap = val(ConstantKind("Ap", p))
    rep.pairs.append(_pair("Ap", ap ** (1.0 / (p - 1.0)) - 1.0, buckley_constant(w, BuckleyKind("ApB", p)),
                           c, C, tol, exempt))
    c, C = family_bounds(FunctionFamily("log"), cap)
    rep.pairs.append(_pair("Ainf", math.log(val(ConstantKind("Ainf"))), buckley_constant(w, BuckleyKind("AinfB")),
                           c, C, tol, exempt))
    if w.depth > 0:
        c, C = family_bounds(FunctionFamily("power", p))
        rhw = val(ConstantKind("WeakRHp", p))
        rhwb = buckley_constant(w, BuckleyKind("WeakRHpB", p))
        # upper: RHWpB <= C RHWp^p; lower: RHWp <= ((1/c) RHWpB + 2^p)^(1/p)
        rep.pairs.append(_pair("WeakRHp", rhw**p, rhwb, None, C, tol))
        bound = (rhwb / c + 2.0**p) ** (1.0 / p)
        rep.pairs.append(Pair("WeakRHp_reverse", rhw, rhwb, None, None, bound, True,
                              rhw <= bound + tol * max(1.0, bound)))
        c, C = family_bounds(FunctionFamily("xlogx"))
        rep.pairs.append(_pair("WeakRH1", val(ConstantKind("WeakRH1")), buckley_constant(w, BuckleyKind("WeakRHpB", 1.0)),
                               c, C, tol))
    return rep
