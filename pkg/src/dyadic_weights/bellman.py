"""Bellman function for the A_inf -> L log L estimate and its dyadic enlargement.

Points are ``z = (x, y)`` with ``x = <w>`` and ``y = <log w>``.  The bracket
``[z] = x * exp(-y)`` lies in ``[1, Q]`` on the domain ``Omega_Q``; the lower
boundary ``Gamma`` is ``[z] = 1`` and the upper one ``Gamma_Q`` is ``[z] = Q``.

Everything is built on the pair

    f(t) = t - log t - 1,        g = inverse of f restricted to (0, 1],

so that ``gamma(Q) = g(log Q)`` and the tangent point data of a point ``z`` is
``v = gamma * x / g(alpha)`` with ``alpha = log Q - log [z]``.  The function

    B_Q(x, y) = x log v + (x - v) / gamma

is locally concave on ``Omega_Q``; the dyadic statement replaces ``Q`` by a
larger ``Q0`` found by :func:`solve_q0`.

All scalar routines accept numpy arrays and broadcast.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "BellmanPoint",
    "BellmanTriple",
    "DomainError",
    "DomainQ",
    "DyadicBoundResult",
    "Q0Result",
    "RootBracketError",
    "ScanResult",
    "SegmentBracket",
    "TangentData",
    "bellman_value",
    "bracket",
    "canonical_points",
    "delta_boundary",
    "delta_boundary_closed_form",
    "delta_general",
    "dyadic_bound_check",
    "eval_f",
    "eval_g",
    "gamma_of",
    "local_concavity_check",
    "midpoint_deficit",
    "midpoint_deficit_arrays",
    "monte_carlo_concavity",
    "q0_closed_form_residual",
    "sample_triples",
    "segment_bracket_arrays",
    "segment_max_bracket",
    "solve_q0",
    "tangent_data",
    "reduced_delta_scan",
    "vertex_delta",
    "vertex_range",
]

#: slack allowed on the bracket when deciding domain membership
BRACKET_SLACK = 1e-12


class DomainError(ValueError):
    """A point or parameter lies outside the domain of a Bellman routine."""


class RootBracketError(RuntimeError):
    """No sign change was found while bracketing a root."""

    def __init__(self, message: str, lo: float, hi: float):
        super().__init__(f"{message} (bracket [{lo!r}, {hi!r}])")
        self.lo = lo
        self.hi = hi


# ---------------------------------------------------------------------------
# implicit functions
# ---------------------------------------------------------------------------

def eval_f(t):
    """``f(t) = t - log t - 1`` for ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("f is defined for t > 0 only")
    out = (t - 1.0) - np.log(t)
    return out if out.ndim else float(out)


def eval_g(alpha, *, tol: float = 1e-13, max_iter: int = 100):
    """Inverse of ``f`` on ``(0, 1]``: the root ``t <= 1`` of ``f(t) = alpha``.

    Solved in ``s = log t`` where the equation reads ``expm1(s) - s = alpha``;
    this keeps full relative precision near the double root at ``alpha = 0``.
    The root is bracketed in ``[-1 - alpha, -alpha]`` and Newton steps leaving
    the bracket are replaced by bisection, since ``f'(1) = 0`` makes plain
    Newton stall next to ``alpha = 0``.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(np.isnan(a)) or np.any(a < 0):
        raise DomainError("g is defined for alpha >= 0 only")
    scalar = a.ndim == 0
    a = np.atleast_1d(a)

    lo = -1.0 - a
    hi = -a
    # small alpha: t ~ 1 - sqrt(2 alpha); large alpha: t ~ exp(-1 - alpha)
    s = np.where(a < 1.0, np.log1p(-np.minimum(np.sqrt(2.0 * a), 0.99)), -1.0 - a + np.exp(-1.0 - a))
    s = np.clip(s, lo, hi)
    active = a > 0
    for _ in range(max_iter):
        if not active.any():
            break
        em1 = np.expm1(s)
        resid = em1 - s - a
        # F is decreasing on s < 0: resid > 0 means the root lies to the right
        lo = np.where(active & (resid > 0), s, lo)
        hi = np.where(active & (resid < 0), s, hi)
        deriv = em1
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(deriv != 0.0, resid / deriv, np.inf)
        cand = s - step
        bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        moved = np.abs(cand - s)
        s = np.where(active, cand, s)
        done = (np.abs(resid) <= tol * np.maximum(1.0, a)) & (moved <= 1e-15 * np.maximum(1.0, np.abs(s)))
        done |= (hi - lo) <= 4e-16 * np.maximum(1.0, np.abs(s))
        active &= ~done
    t = np.where(a > 0, np.exp(s), 1.0)
    return float(t[0]) if scalar else t


def gamma_of(Q):
    """Smaller root ``gamma <= 1`` of ``gamma - log gamma - 1 = log Q``."""
    q = np.asarray(Q, dtype=float)
    if np.any(np.isnan(q)) or np.any(q < 1.0):
        raise DomainError("gamma(Q) requires Q >= 1")
    return eval_g(np.log(q))


@dataclass(frozen=True)
class DomainQ:
    """Parameters of ``Omega_Q``: ``Q`` and ``gamma(Q)``."""

    Q: float
    gamma: float

    @classmethod
    def of(cls, Q: float) -> "DomainQ":
        return cls(float(Q), float(gamma_of(Q)))


# ---------------------------------------------------------------------------
# points and tangent data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BellmanPoint:
    """``x = <w>`` and ``y = <log w>``."""

    x: float
    y: float

    @property
    def bracket(self) -> float:
        return self.x * math.exp(-self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class BellmanTriple:
    """Dyadic triple: ``z`` is the midpoint of ``z_minus`` and ``z_plus``."""

    z_minus: BellmanPoint
    z: BellmanPoint
    z_plus: BellmanPoint

    @classmethod
    def from_ends(cls, z_minus: BellmanPoint, z_plus: BellmanPoint) -> "BellmanTriple":
        mid = BellmanPoint(0.5 * (z_minus.x + z_plus.x), 0.5 * (z_minus.y + z_plus.y))
        return cls(z_minus, mid, z_plus)

    def is_consistent(self, tol: float = 1e-12) -> bool:
        dx = abs(2 * self.z.x - self.z_plus.x - self.z_minus.x)
        dy = abs(2 * self.z.y - self.z_plus.y - self.z_minus.y)
        return dx <= tol * max(1.0, abs(self.z.x)) and dy <= tol * max(1.0, abs(self.z.y))


@dataclass(frozen=True)
class TangentData:
    """``alpha``: vertical distance to ``Gamma_Q``; ``v``: abscissa where the
    tangent through ``z`` meets ``Gamma``; ``a``: abscissa of tangency on
    ``Gamma_Q``.  ``v <= x <= a`` and ``v = gamma * a``."""

    alpha: float
    v: float
    a: float


def bracket(x, y):
    """``[z] = x * exp(-y)``."""
    return np.asarray(x, dtype=float) * np.exp(-np.asarray(y, dtype=float))


def _log_bracket(x, y):
    return np.log(np.asarray(x, dtype=float)) - np.asarray(y, dtype=float)


def _alpha(x, y, Q, *, check_q: float | None = None):
    """Vertical distance to ``Gamma_Q``; validates membership in ``Omega_check_q``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(~np.isfinite(x)):
        raise DomainError("x must be positive and finite")
    lb = _log_bracket(x, y)
    upper = math.log(check_q if check_q is not None else Q)
    if np.any(lb < -BRACKET_SLACK) or np.any(lb > upper + BRACKET_SLACK):
        raise DomainError(f"point outside Omega_{check_q if check_q is not None else Q}: bracket must be in [1, Q]")
    return np.clip(math.log(Q) - lb, 0.0, None)


def _tangent_v(x, y, Q, gamma):
    alpha = _alpha(x, y, Q)
    return gamma * np.asarray(x, dtype=float) / eval_g(alpha), alpha


def tangent_data(z: BellmanPoint, Q: float) -> TangentData:
    """Tangent-line data of ``z`` relative to ``Gamma_Q``."""
    if Q < 1:
        raise DomainError("Q must be >= 1")
    gamma = float(gamma_of(Q))
    v, alpha = _tangent_v(z.x, z.y, Q, gamma)
    v = float(v)
    return TangentData(alpha=float(alpha), v=v, a=v / gamma)


def bellman_value(x, y, Q: float):
    """``B_Q(x, y) = x log v + (x - v) / gamma`` on ``Omega_Q``.

    ``x`` and ``y`` may be arrays.  Raises :class:`DomainError` for points
    whose bracket leaves ``[1, Q]`` by more than ``BRACKET_SLACK``.
    """
    if Q < 1:
        raise DomainError("Q must be >= 1")
    gamma = float(gamma_of(Q))
    x = np.asarray(x, dtype=float)
    v, _ = _tangent_v(x, y, Q, gamma)
    out = x * np.log(v) + (x - v) / gamma
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# boundary triples
# ---------------------------------------------------------------------------

def _boundary_triple(case: str, Q: float) -> tuple[np.ndarray, np.ndarray]:
    """Canonical boundary triple for ``case``; returns (xs, ys) ordered (z-, z, z+)."""
    if case in ("A", "B"):
        r = math.sqrt(1.0 - 1.0 / Q)
        one_minus_r = (1.0 / Q) / (1.0 + r)
    elif case == "C":
        r = math.sqrt(1.0 - 1.0 / Q**2)
        one_minus_r = (1.0 / Q**2) / (1.0 + r)
    else:
        raise ValueError(f"unknown boundary case {case!r}")
    logq = math.log(Q)
    xs = np.array([one_minus_r, 1.0, 1.0 + r])
    if case == "A":
        ys = [math.log(one_minus_r) - logq, -logq, math.log1p(r)]
    elif case == "B":
        ys = [math.log(one_minus_r), -logq, math.log1p(r) - logq]
    else:
        ys = [math.log(one_minus_r), -logq, math.log1p(r)]
    return xs, np.array(ys)


def _triple_delta(xs, ys, Q0: float) -> float:
    b = bellman_value(xs, ys, Q0)
    return float(2.0 * b[1] - b[0] - b[2])


def delta_boundary(case: Literal["A", "B", "C"], Q: float, Q0: float | None = None) -> float:
    """``2 B0(z) - B0(z+) - B0(z-)`` for the canonical boundary triple of ``case``.

    A: ``z- in Gamma_Q``, ``z+ in Gamma``; B: ``z- in Gamma``, ``z+ in Gamma_Q``;
    C: both ends on ``Gamma``.  The centre is ``(1, -log Q)`` on ``Gamma_Q``.
    ``B0`` is the Bellman function of the enlarged domain ``Omega_Q0``.
    """
    if Q < 1:
        raise DomainError("Q must be >= 1")
    Q0 = Q if Q0 is None else Q0
    if Q0 < Q:
        raise DomainError(f"Q0 = {Q0} must be >= Q = {Q}")
    if Q == 1.0:
        return 0.0
    xs, _ = _boundary_triple(case, Q)
    xm, xp = float(xs[0]), float(xs[2])
    # On Gamma, B0 = x log x.  On Gamma_Q all points share alpha = log(Q0/Q), so
    # B0 = x (log x + K).  Summing the triple removes the terms linear in x, which
    # are of size Q0 and would otherwise cancel in floating point.
    gam = float(gamma_of(Q0))
    g0 = float(eval_g(math.log(Q0 / Q)))
    K = math.log(gam) - math.log(g0) + (g0 - gam) / (gam * g0)
    ends = xm * math.log(xm) + xp * math.log(xp)
    if case == "A":
        return K * xp - ends
    if case == "B":
        return K * xm - ends
    return 2.0 * K - ends


def delta_boundary_closed_form(case: Literal["A", "B", "C"], Q: float) -> float:
    """Closed forms of the boundary deltas at ``Q0 = Q`` (reference only)."""
    g = float(gamma_of(Q))
    if case == "C":
        r = math.sqrt(1.0 - 1.0 / Q**2)
        omr = (1.0 / Q**2) / (1.0 + r)
        return 2 * math.log(g) + 2 * (1 - g) / g - omr * math.log(omr) - (1 + r) * math.log1p(r)
    r = math.sqrt(1.0 - 1.0 / Q)
    omr = (1.0 / Q) / (1.0 + r)
    if case == "A":
        return (1 + r) * (g + 1 / g - 2) + 2 * r * math.log(omr)
    if case == "B":
        return omr * math.log(g) + omr / g - omr - omr * math.log(omr) - (1 + r) * math.log1p(r)
    raise ValueError(f"unknown boundary case {case!r}")


# ---------------------------------------------------------------------------
# Q0
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Q0Result:
    Q: float
    Q0: float
    mode: str
    residual: float
    bracket: tuple[float, float]
    iterations: int


def _bisect(fun, lo: float, hi: float, *, rtol: float, max_iter: int = 400):
    """Bisection for an increasing ``fun`` with ``fun(lo) <= 0 < fun(hi)``."""
    it = 0
    while it < max_iter and hi - lo > rtol * max(abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fun(mid) > 0:
            hi = mid
        else:
            lo = mid
        it += 1
    return lo, hi, it


def q0_closed_form_residual(gamma0: float, Q: float) -> float:
    """Left side of the closed-form Q0 equation, as a function of ``gamma0``."""
    r = math.sqrt(1.0 - 1.0 / Q)
    omr = (1.0 / Q) / (1.0 + r)
    return (omr * math.log(gamma0) + omr / gamma0 - omr
            - omr * math.log(omr) - (1 + r) * math.log1p(r))


def solve_q0(Q: float, mode: Literal["direct", "closed_form"] = "direct", *,
             rtol: float = 1e-15, expand: float = 2.0, max_expand: int = 200) -> Q0Result:
    """Enlarged domain parameter ``Q0 >= Q``.

    ``direct``: root of the case-B boundary delta evaluated with ``B_{Q0}``.
    ``closed_form``: root in ``gamma0`` of the closed-form equation, mapped back through
    ``Q0 = exp(f(gamma0))``.  Both use bisection (in ``log Q0`` respectively
    ``log gamma0``) to relative width ``rtol``.
    """
    if not Q > 1:
        raise DomainError("solve_q0 requires Q > 1")
    if mode == "direct":
        def fun(logq0: float) -> float:
            return delta_boundary("B", Q, max(Q, math.exp(logq0)))

        lo = math.log(Q)
        if fun(lo) > 0:
            return Q0Result(Q, Q, mode, fun(lo), (Q, Q), 0)
        hi = lo + math.log(expand)
        k = 0
        while fun(hi) <= 0:
            lo, hi = hi, hi + math.log(expand)
            k += 1
            if k > max_expand:
                raise RootBracketError("no sign change for the case-B delta", Q, math.exp(hi))
        lo, hi, it = _bisect(fun, lo, hi, rtol=rtol)
        q0 = math.exp(hi)
        return Q0Result(Q, q0, mode, delta_boundary("B", Q, q0), (math.exp(lo), q0), it)
    if mode == "closed_form":
        g_hi = float(gamma_of(Q))
        # residual decreases in gamma0: bisect on -log gamma0 with an increasing map
        def fun(u: float) -> float:
            return q0_closed_form_residual(math.exp(-u), Q)

        lo = -math.log(g_hi)
        if fun(lo) > 0:
            return Q0Result(Q, Q, mode, fun(lo), (Q, Q), 0)
        hi = lo + 1.0
        k = 0
        while fun(hi) <= 0:
            lo, hi = hi, hi + 1.0
            k += 1
            if k > max_expand:
                raise RootBracketError("no sign change for the closed-form Q0 equation", lo, hi)
        lo, hi, it = _bisect(fun, lo, hi, rtol=rtol)
        gamma0 = math.exp(-hi)
        q0 = math.exp(float(eval_f(gamma0)))
        return Q0Result(Q, q0, mode, q0_closed_form_residual(gamma0, Q),
                        (math.exp(float(eval_f(math.exp(-lo)))), q0), it)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# midpoint concavity
# ---------------------------------------------------------------------------

def _check_in_domain(x, y, Q: float, what: str) -> None:
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(~np.isfinite(x)) or np.any(~np.isfinite(np.asarray(y, dtype=float))):
        raise DomainError(f"{what}: coordinates must be finite with x > 0")
    lb = _log_bracket(x, y)
    if np.any(lb < -BRACKET_SLACK) or np.any(lb > math.log(Q) + BRACKET_SLACK):
        raise DomainError(f"{what}: bracket outside [1, {Q}]")


def midpoint_deficit_arrays(xm, ym, xp, yp, Q: float, Q0: float):
    """Vectorized ``2 B0(z) - B0(z+) - B0(z-)`` with ``z`` the midpoint.

    All three points must lie in ``Omega_Q``; they are evaluated with ``B_Q0``.
    """
    if Q0 < Q:
        raise DomainError(f"Q0 = {Q0} must be >= Q = {Q}")
    xm, ym, xp, yp = (np.asarray(a, dtype=float) for a in (xm, ym, xp, yp))
    x, y = 0.5 * (xm + xp), 0.5 * (ym + yp)
    _check_in_domain(xm, ym, Q, "z_minus")
    _check_in_domain(xp, yp, Q, "z_plus")
    _check_in_domain(x, y, Q, "z")
    return 2.0 * bellman_value(x, y, Q0) - bellman_value(xp, yp, Q0) - bellman_value(xm, ym, Q0)


def midpoint_deficit(triple: BellmanTriple, Q: float, Q0: float) -> float:
    """``2 B_{Q0}(z) - B_{Q0}(z+) - B_{Q0}(z-)`` for a triple inside ``Omega_Q``."""
    if not triple.is_consistent():
        raise DomainError("triple is not a midpoint triple")
    zm, zp = triple.z_minus, triple.z_plus
    return float(midpoint_deficit_arrays(zm.x, zm.y, zp.x, zp.y, Q, Q0))


def sample_triples(Q: float, n: int, rng: np.random.Generator, *, log_x_range: float = 3.0):
    """Rejection-sample ``n`` midpoint triples with all three points in ``Omega_Q``.

    The centre is drawn uniformly in ``(log x, log bracket)``; the horizontal
    half-width ``s = dx / x`` is drawn either uniformly on ``[0, 1)`` or as
    ``1 - 10^{-U}`` to reach the thin region near ``x- = 0``.  Given ``s``, the
    set of admissible ``dy`` for the two ends is an interval, sampled uniformly
    and occasionally at its endpoints (boundary triples).
    Returns ``(xm, ym, xp, yp)`` arrays.
    """
    logq = math.log(Q)
    out = [np.empty(0)] * 4
    have = 0
    while have < n:
        m = 2 * (n - have) + 16
        lx = rng.uniform(-log_x_range, log_x_range, m)
        b = rng.uniform(0.0, logq, m)
        # the last centres are forced onto the boundaries
        edge = rng.random(m)
        b = np.where(edge < 0.05, 0.0, np.where(edge < 0.10, logq, b))
        x = np.exp(lx)
        y = lx - b
        s = np.where(rng.random(m) < 0.5, rng.random(m), -np.expm1(-np.log(10.0) * rng.uniform(0, 12, m)))
        s = np.clip(s, 0.0, 1.0 - 1e-15)
        lp, lm = np.log1p(s), np.log1p(-s)
        lo = np.maximum(b + lp - logq, -b - lm)
        hi = np.minimum(b + lp, logq - b - lm)
        ok = lo <= hi
        u = rng.random(m)
        pick = rng.random(m)
        u = np.where(pick < 0.1, 0.0, np.where(pick < 0.2, 1.0, u))
        dy = lo + u * (hi - lo)
        xm, xp = x * (1 - s), x * (1 + s)
        ym, yp = y - dy, y + dy
        ok &= xm > 0
        # guard against round-off pushing a point just outside the domain
        for xx, yy in ((xm, ym), (xp, yp)):
            lb = np.log(np.where(xx > 0, xx, 1.0)) - yy
            ok &= (lb >= -BRACKET_SLACK / 4) & (lb <= logq + BRACKET_SLACK / 4)
        xc, yc = 0.5 * (xm + xp), 0.5 * (ym + yp)
        lbc = np.log(xc) - yc
        ok &= (lbc >= -BRACKET_SLACK / 4) & (lbc <= logq + BRACKET_SLACK / 4)
        take = np.flatnonzero(ok)[: n - have]
        out = [np.concatenate([o, a[take]]) for o, a in zip(out, (xm, ym, xp, yp))]
        have += take.size
    return tuple(out)


def monte_carlo_concavity(Q: float, samples: int, seed: int, *, Q0: float | None = None,
                          mode: str = "direct") -> dict:
    """Minimum midpoint deficit over random triples of ``Omega_Q``.

    ``Q0`` defaults to ``solve_q0(Q, mode)``.  Evaluated in chunks so memory
    stays bounded; the reduction order is fixed.
    """
    if Q0 is None:
        Q0 = solve_q0(Q, mode).Q0
    rng = np.random.default_rng(seed)
    worst = math.inf
    worst_triple = None
    done = 0
    chunk = 50_000
    while done < samples:
        k = min(chunk, samples - done)
        xm, ym, xp, yp = sample_triples(Q, k, rng)
        d = midpoint_deficit_arrays(xm, ym, xp, yp, Q, Q0)
        # normalize by the local scale so the tolerance is homogeneous in x
        i = int(np.argmin(d))
        if d[i] < worst:
            worst = float(d[i])
            worst_triple = (float(xm[i]), float(ym[i]), float(xp[i]), float(yp[i]))
        done += k
    return {"Q": Q, "Q0": Q0, "samples": samples, "seed": seed,
            "min_deficit": worst, "worst_triple": worst_triple}


# ---------------------------------------------------------------------------
# segment geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentBracket:
    """Extremes of the bracket along the segment ``[z-, z+]``.

    ``t_star`` is the interior stationary point of ``log phi`` (a maximum,
    since ``log phi`` is concave) or ``None`` when it falls outside ``(0, 1)``.
    """

    max_value: float
    min_value: float
    t_star: float | None


def segment_bracket_arrays(xm, ym, xp, yp):
    """Vectorized ``(max, min)`` of ``phi(t) = x(t) exp(-y(t))`` on ``t in [0, 1]``."""
    xm, ym, xp, yp = (np.asarray(a, dtype=float) for a in (xm, ym, xp, yp))
    e0 = xm * np.exp(-ym)
    e1 = xp * np.exp(-yp)
    dx, dy = xp - xm, yp - ym
    with np.errstate(divide="ignore", invalid="ignore"):
        ts = 1.0 / dy - xm / dx
    inside = (dx != 0) & (dy != 0) & np.isfinite(ts) & (ts > 0) & (ts < 1)
    ts = np.where(inside, ts, 0.0)
    mid = (xm + ts * dx) * np.exp(-(ym + ts * dy))
    hi = np.maximum(e0, e1)
    hi = np.where(inside, np.maximum(hi, mid), hi)
    return hi, np.minimum(e0, e1)


def segment_max_bracket(z_minus: BellmanPoint, z_plus: BellmanPoint) -> SegmentBracket:
    """Maximum of the bracket along the segment joining two points.

    Candidates are the two endpoints and the stationary point
    ``t* = 1/(y+ - y-) - x-/(x+ - x-)`` when it lies in ``(0, 1)``.  Segments
    with ``x+ = x-`` or ``y+ = y-`` give a monotone ``phi`` and only the
    endpoints are used.
    """
    if z_minus == z_plus:
        raise DomainError("segment endpoints coincide")
    dx, dy = z_plus.x - z_minus.x, z_plus.y - z_minus.y
    cands = [z_minus.bracket, z_plus.bracket]
    t_star = None
    if dx != 0 and dy != 0:
        t = 1.0 / dy - z_minus.x / dx
        if 0.0 < t < 1.0:
            t_star = t
            cands.append((z_minus.x + t * dx) * math.exp(-(z_minus.y + t * dy)))
    return SegmentBracket(max(cands), min(cands[:2]), t_star)


def canonical_points(case: Literal["A", "B"], Q: float) -> tuple[BellmanPoint, BellmanPoint]:
    """Endpoints ``(z-, z+)`` of the canonical boundary triple of case A or B."""
    xs, ys = _boundary_triple(case, Q)
    return BellmanPoint(float(xs[0]), float(ys[0])), BellmanPoint(float(xs[2]), float(ys[2]))


def local_concavity_check(Q: float, samples: int, seed: int) -> dict:
    """Midpoint concavity of ``B_Q`` itself on segments lying inside ``Omega_Q``."""
    rng = np.random.default_rng(seed)
    worst, kept, drawn = math.inf, 0, 0
    logq = math.log(Q)
    while kept < samples and drawn < 200 * samples:
        xm, ym, xp, yp = sample_triples(Q, min(50_000, 2 * (samples - kept)), rng)
        drawn += xm.size
        hi, lo = segment_bracket_arrays(xm, ym, xp, yp)
        # scale the y-step down so that many segments stay inside the domain
        ok = (np.log(hi) <= logq + BRACKET_SLACK) & (np.log(lo) >= -BRACKET_SLACK)
        ok = np.flatnonzero(ok)[: samples - kept]
        if ok.size == 0:
            continue
        d = midpoint_deficit_arrays(xm[ok], ym[ok], xp[ok], yp[ok], Q, Q)
        worst = min(worst, float(d.min()))
        kept += ok.size
    return {"Q": Q, "samples": kept, "seed": seed, "min_deficit": worst}


# ---------------------------------------------------------------------------
# the reduced delta and its vertices
# ---------------------------------------------------------------------------

def _implied_alpha(x_plus, alpha_plus, alpha_minus):
    x_plus = np.asarray(x_plus, dtype=float)
    return 0.5 * (np.asarray(alpha_plus, dtype=float) + np.asarray(alpha_minus, dtype=float)
                  + np.log(x_plus) + np.log(2.0 - x_plus))


def delta_general(x_plus, alpha_plus, alpha_minus, Q0: float):
    """Reduced midpoint defect of a triple centred at ``x = 1``.

    ``x_plus in [1, 2)`` is the abscissa of ``z+`` (``x- = 2 - x+``) and
    ``alpha_pm`` the distances of ``z_pm`` below ``Gamma_Q0``, so the centre
    distance ``alpha`` is fixed by the midpoint relation.  ``Q0`` only bounds
    the admissible ``alpha_pm <= log Q0``.
    """
    x_plus = np.asarray(x_plus, dtype=float)
    ap = np.asarray(alpha_plus, dtype=float)
    am = np.asarray(alpha_minus, dtype=float)
    if np.any(x_plus < 1.0) or np.any(x_plus >= 2.0):
        raise DomainError("x_plus must lie in [1, 2)")
    lq0 = math.log(Q0) + BRACKET_SLACK
    if np.any(ap < 0) or np.any(am < 0) or np.any(ap > lq0) or np.any(am > lq0):
        raise DomainError("alpha_plus, alpha_minus must lie in [0, log Q0]")
    a = _implied_alpha(x_plus, ap, am)
    if np.any(a < -BRACKET_SLACK):
        raise DomainError("implied alpha is negative")
    a = np.clip(a, 0.0, None)
    xm = 2.0 - x_plus
    g, gp, gm = eval_g(a), eval_g(ap), eval_g(am)
    out = (-2.0 * np.log(g) - x_plus * (np.log(x_plus) - np.log(gp)) - xm * (np.log(xm) - np.log(gm))
           - 2.0 / g + x_plus / gp + xm / gm)
    return out if out.ndim else float(out)


def vertex_range(vertex: Literal["M", "N"], Q: float) -> tuple[float, float]:
    """Admissible ``x+`` interval of a vertex."""
    if vertex == "M":
        return 1.0, 1.0 + math.sqrt(1.0 - 1.0 / Q**2)
    if vertex == "N":
        return 1.0, 1.0 + math.sqrt(1.0 - 1.0 / Q)
    raise ValueError(f"unknown vertex {vertex!r}")


def _vertex_alphas(vertex: str, Q: float, Q0: float) -> tuple[float, float]:
    if vertex == "M":
        return math.log(Q0), math.log(Q0)
    if vertex == "N":
        return math.log(Q0 / Q), math.log(Q0)
    raise ValueError(f"unknown vertex {vertex!r}")


def vertex_delta(vertex: Literal["M", "N"], x_plus, Q: float, Q0: float):
    """``delta_general`` along one of the vertices M or N."""
    if Q0 < Q:
        raise DomainError(f"Q0 = {Q0} must be >= Q = {Q}")
    lo, hi = vertex_range(vertex, Q)
    xp = np.asarray(x_plus, dtype=float)
    if np.any(xp < lo) or np.any(xp > hi * (1 + 1e-15)):
        raise DomainError(f"x_plus outside [{lo}, {hi}] for vertex {vertex}")
    xp = np.minimum(xp, hi)
    ap, am = _vertex_alphas(vertex, Q, Q0)
    return delta_general(xp, ap, am, Q0)


@dataclass(frozen=True)
class ScanResult:
    Q: float
    Q0: float
    alpha: float
    grid_min: float
    grid_argmin: tuple[float, float, float]
    vertex_values: dict
    match: bool
    points: int


def reduced_delta_scan(Q: float, Q0: float, alpha: float, grid_resolution: int = 201,
                      *, tol: float = 1e-6) -> ScanResult:
    """Grid minimum of the reduced delta over the feasible set at fixed ``alpha``.

    Feasible: ``alpha_pm in [log(Q0/Q), log Q0]`` and ``alpha_+ + alpha_- >= 2 alpha``;
    ``x+ = 1 + sqrt(1 - P)`` with ``P = exp(2 alpha - alpha_+ - alpha_-)``.
    Vertex M (both ``alpha_pm = log Q0``) is always feasible; vertex N
    (``alpha_+ = log(Q0/Q)``, ``alpha_- = log Q0``) only when
    ``alpha <= log Q0 - log(Q)/2``.
    """
    lo, hi = math.log(Q0 / Q), math.log(Q0)
    if not lo - 1e-12 <= alpha <= hi + 1e-12:
        raise DomainError(f"alpha must lie in [{lo}, {hi}]")
    grid = np.linspace(lo, hi, grid_resolution)
    ap, am = np.meshgrid(grid, grid, indexing="ij")
    ap, am = ap.ravel(), am.ravel()
    keep = ap + am >= 2.0 * alpha
    ap, am = ap[keep], am[keep]
    if ap.size == 0:
        raise DomainError("empty feasible grid")
    P = np.exp(np.minimum(2.0 * alpha - ap - am, 0.0))
    xp = 1.0 + np.sqrt(-np.expm1(np.log(P)))
    xp = np.minimum(xp, np.nextafter(2.0, 0.0))
    d = delta_general(xp, ap, am, Q0)
    i = int(np.argmin(d))

    def vertex(apv: float, amv: float) -> float:
        Pv = math.exp(min(2.0 * alpha - apv - amv, 0.0))
        return float(delta_general(1.0 + math.sqrt(-math.expm1(math.log(Pv))), apv, amv, Q0))

    vals = {"M": vertex(hi, hi)}
    if alpha <= hi - 0.5 * math.log(Q) + 1e-12:
        vals["N"] = vertex(lo, hi)
    gmin = float(d[i])
    return ScanResult(Q, Q0, alpha, gmin, (float(xp[i]), float(ap[i]), float(am[i])), vals,
                      gmin >= min(0.0, *vals.values()) - tol, int(d.size))


# ---------------------------------------------------------------------------
# weight-level bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DyadicBoundResult:
    lhs: float
    rhs: float
    Q: float
    Q0: float
    ainf: float
    applicable: bool
    passed: bool


def dyadic_bound_check(w, Q: float, *, Q0: float | None = None, tol: float = 1e-10) -> DyadicBoundResult:
    """``B_Q0(<w>, <log w>) >= <w log w>`` on the root of a dyadic weight with ``A_inf <= Q``.

    Not applicable (and not failed) when the dyadic ``A_inf`` constant exceeds ``Q``.
    """
    from .constants import ConstantKind, classical_constant
    from .dyadic import ROOT, transformed_average

    ainf = classical_constant(w, ConstantKind("Ainf"))
    if Q0 is None:
        Q0 = solve_q0(Q).Q0 if Q > 1 else 1.0
    x = float(w.levels[0][0])
    y = transformed_average(w, ROOT, np.log)
    rhs = transformed_average(w, ROOT, lambda t: t * np.log(t))
    if ainf > Q * (1 + BRACKET_SLACK):
        return DyadicBoundResult(math.nan, rhs, Q, Q0, ainf, False, True)
    lhs = float(bellman_value(x, min(y, math.log(x)), Q0))
    scale = max(1.0, abs(rhs), abs(lhs))
    return DyadicBoundResult(lhs, rhs, Q, Q0, ainf, True, lhs >= rhs - tol * scale)
