"""Convex profiles ``A(x)`` and their midpoint and integral conditions.

The four families are ``x^p``, ``x log x``, ``x^(-1/(p-1))`` and ``+-log x``.
For each one we compute

* ``q``: the integral constant ``inf [int (1-|t|) A''(x+eps t) dt] / A''(x)``,
* ``alpha = q/2``: the coefficient for which ``A(x) - avg + alpha t^2 A''(x) <= 0``
  follows from the Taylor identity with integral remainder,
* ``beta``: the smallest coefficient with ``A(x) - avg + beta t^2 A''(x) >= 0``,
  on all ``t < x`` or, for the last two families, on ``t <= (C-1)/C x``.

Weight-level checks compare the square-function sum
``(1/|J|) sum (Delta_I w)^2 A''(<w>_I) |I|`` with the Jensen gap
``<A(w)>_J - A(<w>_J)``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .dyadic import DyadicInterval, DyadicWeight, doubling_constant, pyramid, transformed_average

__all__ = [
    "CoefficientReport",
    "DEFAULT_DOUBLING_CAP",
    "EPS_GRID",
    "FunctionFamily",
    "LowerBoundResult",
    "MonotonicityResult",
    "NodeSweep",
    "UpperBoundResult",
    "X_GRID",
    "alpha_from_q",
    "BetaResult",
    "beta_formula",
    "beta_closed_form",
    "beta_from_profile",
    "coefficients",
    "family_beta",
    "guaranteed_q",
    "integral_q",
    "jensen_gap",
    "jensen_gap_levels",
    "midpoint_deficit",
    "psi",
    "square_sum",
    "square_sum_levels",
    "sweep_lower_bound",
    "sweep_upper_bound",
    "ratio_profile",
    "profile_monotonicity",
    "upper_constant",
    "verify_lower_bound",
    "verify_upper_bound",
]

X_GRID = np.logspace(-2, 2, 31)
EPS_GRID = np.logspace(-3, 1, 31)
#: cap ``C`` used for the doubling-restricted families when none is given
DEFAULT_DOUBLING_CAP = 16.0


@dataclass(frozen=True)
class FunctionFamily:
    """``power`` (``x^p``), ``xlogx``, ``negpower`` (``x^(-1/(p-1))``) or ``log`` (``sign * log x``)."""

    tag: str
    p: float | None = None
    sign: int = -1

    def __post_init__(self):
        if self.tag in ("power", "negpower"):
            if self.p is None or not self.p > 1:
                raise ValueError(f"{self.tag} needs p > 1")
        elif self.tag in ("xlogx", "log"):
            if self.p is not None:
                raise ValueError(f"{self.tag} takes no p")
        else:
            raise ValueError(f"unknown family {self.tag!r}")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def parse(cls, text: str) -> "FunctionFamily":
        """``power:3``, ``xlogx``, ``negpower:2``, ``log`` (= ``-log x``), ``+log``."""
        tag, _, val = text.strip().partition(":")
        if tag == "+log":
            return cls("log", sign=1)
        return cls(tag, float(val)) if val else cls(tag)

    @property
    def label(self) -> str:
        if self.tag == "log":
            return "-log" if self.sign < 0 else "+log"
        return f"{self.tag}:{self.p:g}" if self.p is not None else self.tag

    @property
    def convex(self) -> bool:
        return not (self.tag == "log" and self.sign > 0)

    @property
    def monotone_second_derivative(self) -> bool:
        return True

    @property
    def needs_doubling(self) -> bool:
        """Lower bound only holds with the cap ``t <= (C-1)/C x``."""
        return self.tag in ("negpower", "log")

    @property
    def sum_exponent(self) -> float:
        """Power ``s`` of ``<w>_I`` in the normalized sum."""
        if self.tag == "power":
            return self.p
        if self.tag == "negpower":
            return -1.0 / (self.p - 1.0)
        return 1.0 if self.tag == "xlogx" else 0.0

    @property
    def sum_factor(self) -> float:
        """``A''(x) x^(2-s)``: the raw sum is this factor times the normalized one."""
        if self.tag == "power":
            return self.p * (self.p - 1.0)
        if self.tag == "negpower":
            return self.p / (self.p - 1.0) ** 2
        if self.tag == "xlogx":
            return 1.0
        return -float(self.sign)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == "power":
            return x**self.p
        if self.tag == "xlogx":
            return x * np.log(x)
        if self.tag == "negpower":
            return x ** (-1.0 / (self.p - 1.0))
        return self.sign * np.log(x)

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == "power":
            return self.p * (self.p - 1.0) * x ** (self.p - 2.0)
        if self.tag == "xlogx":
            return 1.0 / x
        if self.tag == "negpower":
            k = 1.0 / (self.p - 1.0)
            return k * (k + 1.0) * x ** (-k - 2.0)
        return -self.sign / x**2


def _check_domain(x, t):
    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    if np.any(x <= 0) or np.any(x - np.abs(t) <= 0):
        raise ValueError("need x > 0 and x - |t| > 0")
    return x, t


def midpoint_deficit(family: FunctionFamily, x, t, coef: float):
    """``A(x) - (A(x-t) + A(x+t))/2 + coef t^2 A''(x)``."""
    x, t = _check_domain(x, t)
    if family.tag == "power" and family.p == 2.0:
        # exact: A(x) - avg = -t^2
        out = -(t * t) + coef * t * t * 2.0
    else:
        out = family.value(x) - 0.5 * (family.value(x - t) + family.value(x + t)) + coef * t * t * family.second_derivative(x)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# integral condition
# ---------------------------------------------------------------------------

def _integral_ratio(family: FunctionFamily, x: float, eps: float) -> float:
    d2 = family.second_derivative
    ax = float(d2(x))

    def f(t):
        return (1.0 - abs(t)) * float(d2(x + eps * t)) / ax

    opts = dict(epsabs=1e-12, epsrel=1e-11, limit=200)
    left, el = integrate.quad(f, -1.0, 0.0, **opts)
    right, er = integrate.quad(f, 0.0, 1.0, **opts)
    if el + er > 1e-10 * max(1.0, left + right):
        raise ArithmeticError(f"quadrature did not converge at x={x}, eps={eps}")
    return left + right


def integral_q(family: FunctionFamily, x_grid: Sequence[float] = X_GRID,
               eps_grid: Sequence[float] = EPS_GRID, *, max_fraction: float = 0.99) -> float:
    """Grid infimum of the integral condition.

    Pairs with ``eps >= max_fraction * x`` are skipped so that ``x + eps t``
    stays inside ``(0, inf)``.
    """
    if not family.convex:
        raise ValueError("integral condition needs a convex family")
    best = math.inf
    for x in x_grid:
        for e in eps_grid:
            if e >= max_fraction * x:
                continue
            best = min(best, _integral_ratio(family, float(x), float(e)))
    if not math.isfinite(best):
        raise ValueError("no admissible (x, eps) pair on the grid")
    return best


def guaranteed_q(family: FunctionFamily) -> float:
    """Lower bound for ``q`` valid for every ``(x, eps)``: 1 for ``x^2``, else 1/2."""
    if family.tag == "power" and family.p == 2.0:
        return 1.0
    if family.monotone_second_derivative:
        return 0.5
    raise ValueError("no a-priori q for this family")


def alpha_from_q(q: float) -> float:
    """Coefficient in ``A(x) - avg <= -alpha t^2 A''(x)`` implied by the integral condition."""
    return 0.5 * q


def upper_constant(q: float) -> float:
    """Constant of the upper square-function bound: ``8/q``."""
    return 8.0 / q


# ---------------------------------------------------------------------------
# beta
# ---------------------------------------------------------------------------

def ratio_profile(v, p: float):
    """``f(v) = v^-2 (1 - ((1-v)^-k + (1+v)^-k)/2)``, ``k = 1/(p-1)``."""
    v = np.asarray(v, dtype=float)
    k = 1.0 / (p - 1.0)
    # 1 - avg written with expm1 to avoid cancellation for small v
    num = -0.5 * (np.expm1(-k * np.log1p(-v)) + np.expm1(-k * np.log1p(v)))
    return num / (v * v)


def psi(v, p: float):
    """``v^3 f'(v)`` in the closed form used to show ``f`` is decreasing."""
    v = np.asarray(v, dtype=float)
    pp = p / (p - 1.0)
    a, b = (1.0 + v), (1.0 - v)
    return ((pp + 1.0) / 2.0 * (a ** (1.0 - pp) + b ** (1.0 - pp))
            - (a ** (-pp) + b ** (-pp)) / (2.0 * (p - 1.0)) - 2.0)


def beta_from_profile(p: float, C: float) -> float:
    """``beta = ((p-1)/p') * gamma`` with ``gamma = -f((C-1)/C)``."""
    if not (p > 1 and C > 1):
        raise ValueError("need p > 1 and C > 1")
    pp = p / (p - 1.0)
    return (p - 1.0) / pp * float(-ratio_profile((C - 1.0) / C, p))


def beta_closed_form(p: float, C: float) -> float:
    """Closed-form expression for ``beta`` in terms of ``p`` and ``C``."""
    if not (p > 1 and C > 1):
        raise ValueError("need p > 1 and C > 1")
    pp = p / (p - 1.0)
    k = 1.0 / (p - 1.0)
    r2 = (C / (C - 1.0)) ** 2
    return (p - 1.0) / pp * (r2 * (((2 * C - 1) / C) ** (-k) + (1.0 / C) ** (-k)) / 2.0 - r2)


@dataclass(frozen=True)
class BetaResult:
    beta: float
    closed_form: float
    discrepancy: float
    flagged: bool


def beta_formula(p: float, C: float, *, tol: float = 1e-8) -> BetaResult:
    """``beta`` for ``x^(-1/(p-1))`` with cap ``(C-1)/C``; the profile route is authoritative."""
    b = beta_from_profile(p, C)
    pr = beta_closed_form(p, C)
    disc = abs(b - pr) / max(1.0, abs(b))
    # the closed form subtracts two terms of size (C/(C-1))^2; allow for that rounding
    k = 1.0 / (p - 1.0)
    big = (C / (C - 1.0)) ** 2 * max(1.0, C**k) * (p - 1.0) ** 2 / p
    rounding = 8.0 * np.finfo(float).eps * big / max(1.0, abs(b))
    return BetaResult(b, pr, disc, disc > tol + rounding)


def _power_ratio(u, p: float):
    """``[((u+1)^p + (u-1)^p)/2 - u^p] / (p(p-1) u^(p-2))`` for ``u = x/t >= 1``."""
    u = np.asarray(u, dtype=float)
    v = 1.0 / u
    # divide through by u^p: [((1+v)^p + (1-v)^p)/2 - 1] / (p(p-1) v^2)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = 0.5 * (np.expm1(p * np.log1p(v)) + np.expm1(p * np.log1p(-v)))
    num = np.where(v < 1.0, num, 0.5 * 2.0**p - 1.0)
    return num / (p * (p - 1.0) * v * v)


def _xlogx_ratio(v):
    """``[((1+v) log(1+v) + (1-v) log(1-v))/2] / v^2`` for ``v = t/x in (0, 1]``."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = np.where(v < 1.0, (1.0 - v) * np.log1p(-np.minimum(v, 1 - 1e-300)), 0.0)
    return 0.5 * ((1.0 + v) * np.log1p(v) + lm) / (v * v)


def _sup_on_unit(fun, *, n: int = 2001) -> float:
    """Sup of ``fun`` on ``v in (0, 1]``: grid, bounded refinement, and the ``v -> 0`` limit 1/2."""
    v = np.linspace(1e-4, 1.0, n)
    vals = fun(v)
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo, hi = v[max(i - 1, 0)], v[min(i + 1, n - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda s: -float(fun(np.array([s]))[0]), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return max(best, 0.5)


@functools.lru_cache(maxsize=256)
def family_beta(family: FunctionFamily, cap: float | None = None) -> float:
    """Smallest ``beta`` with nonnegative deficit.

    ``power`` and ``xlogx``: over all ``t < x``.  ``negpower`` and ``log``:
    over ``t <= (cap-1)/cap x`` (``cap`` defaults to ``DEFAULT_DOUBLING_CAP``).
    """
    if family.tag == "power":
        if family.p == 2.0:
            return 0.5
        return _sup_on_unit(lambda v: _power_ratio(1.0 / v, family.p))
    if family.tag == "xlogx":
        return _sup_on_unit(_xlogx_ratio)
    C = DEFAULT_DOUBLING_CAP if cap is None else cap
    if not C > 1:
        raise ValueError("cap must exceed 1")
    vs = (C - 1.0) / C
    if family.tag == "negpower":
        return beta_from_profile(family.p, C)
    if family.sign > 0:
        raise ValueError("+log is concave; no lower bound")
    return float(-math.log1p(-vs * vs) / (2.0 * vs * vs))


@dataclass(frozen=True)
class CoefficientReport:
    alpha: float
    beta: float
    q: float
    domain_cap: float | None


def coefficients(family: FunctionFamily, cap: float | None = None,
                 x_grid: Sequence[float] = X_GRID, eps_grid: Sequence[float] = EPS_GRID) -> CoefficientReport:
    q = integral_q(family, x_grid, eps_grid)
    dc = (DEFAULT_DOUBLING_CAP if cap is None else cap) if family.needs_doubling else None
    return CoefficientReport(alpha_from_q(q), family_beta(family, dc), q, dc)


@dataclass(frozen=True)
class MonotonicityResult:
    passed: bool
    max_violation: float


def profile_monotonicity(p: float, v_grid: Sequence[float]) -> MonotonicityResult:
    """``f`` strictly decreasing on the grid; ``max_violation`` is the largest slope."""
    v = np.sort(np.asarray(v_grid, dtype=float))
    if np.any(v <= 0) or np.any(v >= 1):
        raise ValueError("grid must lie strictly inside (0, 1)")
    fv = ratio_profile(v, p)
    slopes = np.diff(fv) / np.diff(v)
    worst = float(slopes.max()) if slopes.size else -math.inf
    return MonotonicityResult(worst < 1e-12, worst)


# ---------------------------------------------------------------------------
# weight-level bounds
# ---------------------------------------------------------------------------

def square_sum(w: DyadicWeight, family: FunctionFamily, J: DyadicInterval) -> float:
    """``(1/|J|) sum_{I in D(J)} (Delta_I w)^2 A''(<w>_I) |I|``."""
    J = w.check(J)
    total = 0.0
    for l in range(w.depth - 1, J.level - 1, -1):
        width = 1 << (l - J.level)
        m = w.levels[l][J.index * width:(J.index + 1) * width]
        ch = w.levels[l + 1][2 * J.index * width:2 * (J.index + 1) * width]
        d = ch[0::2] - ch[1::2]
        terms = d * d * family.second_derivative(m)
        # pairwise mean keeps the tree order
        while terms.size > 1:
            terms = 0.5 * (terms[0::2] + terms[1::2])
        total += float(terms[0])
    return total


def jensen_gap(w: DyadicWeight, family: FunctionFamily, J: DyadicInterval) -> float:
    J = w.check(J)
    m = w.levels[J.level][J.index]
    return transformed_average(w, J, family.value) - float(family.value(m))


def _scale(w: DyadicWeight, family: FunctionFamily, J: DyadicInterval) -> float:
    vals = np.abs(family.value(w.leaves[w.leaf_slice(J)]))
    return max(1.0, float(vals.max()))


@dataclass(frozen=True)
class UpperBoundResult:
    lhs: float
    rhs: float
    C_used: float
    passed: bool


def verify_upper_bound(w: DyadicWeight, family: FunctionFamily, J: DyadicInterval,
                       q: float | None = None, *, tol: float = 1e-10) -> UpperBoundResult:
    """``square sum <= (8/q) * gap``; ``q`` defaults to :func:`guaranteed_q`."""
    if not family.convex:
        raise ValueError("upper bound needs a convex family")
    q = guaranteed_q(family) if q is None else q
    C = upper_constant(q)
    lhs = square_sum(w, family, J)
    rhs = C * jensen_gap(w, family, J)
    return UpperBoundResult(lhs, rhs, C, lhs <= rhs + tol * _scale(w, family, J))


@dataclass(frozen=True)
class LowerBoundResult:
    lhs: float
    rhs: float
    beta: float
    doubling_ok: bool
    applicable: bool
    passed: bool


def verify_lower_bound(w: DyadicWeight, family: FunctionFamily, J: DyadicInterval,
                       beta: float | None = None, *, cap: float | None = None,
                       tol: float = 1e-10) -> LowerBoundResult:
    """``square sum >= gap / beta``.

    For the doubling-restricted families the check applies only when the
    weight's doubling constant is at most ``cap`` (the ``C`` behind ``beta``);
    otherwise the result is marked not applicable and counts as passed.
    """
    if not family.convex:
        raise ValueError("lower bound needs a convex family")
    ok = True
    if family.needs_doubling:
        cap = DEFAULT_DOUBLING_CAP if cap is None else cap
        ok = w.depth == 0 or doubling_constant(w) <= cap
    if beta is None:
        beta = family_beta(family, cap)
    lhs = square_sum(w, family, J)
    rhs = jensen_gap(w, family, J) / beta
    passed = (lhs >= rhs - tol * _scale(w, family, J)) if ok else True
    return LowerBoundResult(lhs, rhs, beta, ok, ok, passed)


# ---------------------------------------------------------------------------
# all nodes at once
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeSweep:
    """Worst node of a weight for one bound; ``margin < 0`` means a violation."""

    passed: bool
    applicable: bool
    margin: float
    worst: DyadicInterval
    constant: float


def square_sum_levels(w: DyadicWeight, family: FunctionFamily) -> list[np.ndarray]:
    """:func:`square_sum` on every node, as per-level arrays (leaves give 0)."""
    S = np.zeros(w.size)
    out = [S]
    for j in range(w.depth - 1, -1, -1):
        ch = w.levels[j + 1]
        d = ch[0::2] - ch[1::2]
        S = d * d * family.second_derivative(w.levels[j]) + 0.5 * (S[0::2] + S[1::2])
        out.insert(0, S)
    return out


def jensen_gap_levels(w: DyadicWeight, family: FunctionFamily) -> list[np.ndarray]:
    avg = pyramid(family.value(w.leaves))
    return [a - family.value(m) for a, m in zip(avg, w.levels)]


def _scale_levels(w: DyadicWeight, family: FunctionFamily) -> list[np.ndarray]:
    a = np.abs(family.value(w.leaves))
    out = [a]
    while a.size > 1:
        a = np.maximum(a[0::2], a[1::2])
        out.insert(0, a)
    return [np.maximum(1.0, x) for x in out]


def _worst(margins: list[np.ndarray]) -> tuple[float, DyadicInterval]:
    # leaves carry no information (sum and gap both vanish)
    best, arg = math.inf, DyadicInterval(0, 0)
    for j, m in enumerate(margins[:-1] if len(margins) > 1 else margins):
        k = int(np.argmin(m))
        if m[k] < best:
            best, arg = float(m[k]), DyadicInterval(j, k)
    return best, arg


def sweep_upper_bound(w: DyadicWeight, family: FunctionFamily, q: float | None = None, *,
                      tol: float = 1e-10) -> NodeSweep:
    """:func:`verify_upper_bound` on every node; margin is ``C gap - sum`` over the scale."""
    if not family.convex:
        raise ValueError("upper bound needs a convex family")
    C = upper_constant(guaranteed_q(family) if q is None else q)
    S, G, sc = square_sum_levels(w, family), jensen_gap_levels(w, family), _scale_levels(w, family)
    margin, arg = _worst([(C * g - s) / x for s, g, x in zip(S, G, sc)])
    return NodeSweep(margin >= -tol, True, margin, arg, C)


def sweep_lower_bound(w: DyadicWeight, family: FunctionFamily, beta: float | None = None, *,
                      cap: float | None = None, tol: float = 1e-10) -> NodeSweep:
    """:func:`verify_lower_bound` on every node; margin is ``sum - gap/beta`` over the scale."""
    if not family.convex:
        raise ValueError("lower bound needs a convex family")
    ok = True
    if family.needs_doubling:
        cap = DEFAULT_DOUBLING_CAP if cap is None else cap
        ok = w.depth == 0 or doubling_constant(w) <= cap
    if beta is None:
        beta = family_beta(family, cap)
    S, G, sc = square_sum_levels(w, family), jensen_gap_levels(w, family), _scale_levels(w, family)
    margin, arg = _worst([(s - g / beta) / x for s, g, x in zip(S, G, sc)])
    return NodeSweep(margin >= -tol or not ok, ok, margin, arg, beta)
