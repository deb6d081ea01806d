"""Weight families, truncation, and a search oracle for the Bellman supremum."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .dyadic import DyadicWeight, build_weight, pyramid

__all__ = [
    "ExtremalResult",
    "GeneratorSpec",
    "cascade",
    "constant",
    "custom",
    "extremal_search",
    "generate",
    "nondoubling_rh",
    "power_like",
    "truncate",
    "two_value",
    "weight_corpus",
]

KINDS = ("constant", "two_value", "power_like", "cascade", "nondoubling_rh", "custom")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    depth: int = 1
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator {self.kind!r}")
        if self.kind != "custom" and (not isinstance(self.depth, (int, np.integer)) or self.depth < 0):
            raise ValueError("depth must be a nonnegative integer")
        if self.kind == "cascade" and self.seed is None:
            raise ValueError("cascade needs a seed")


def constant(c: float = 1.0, depth: int = 0) -> DyadicWeight:
    return build_weight(np.full(1 << depth, float(c)))


def two_value(a: float, b: float, depth: int = 1, split: int | None = None) -> DyadicWeight:
    """``a`` on the first ``split`` leaves, ``b`` on the rest (default: half and half)."""
    n = 1 << depth
    split = n // 2 if split is None else split
    if not 0 <= split <= n:
        raise ValueError("split out of range")
    leaves = np.full(n, float(b))
    leaves[:split] = a
    return build_weight(leaves)


def power_like(exponent: float, depth: int) -> DyadicWeight:
    """Cell averages of ``x^exponent`` on ``[0, 1)``; ``exponent > -1``."""
    if not exponent > -1:
        raise ValueError("exponent must exceed -1")
    n = 1 << depth
    b = exponent + 1.0
    i = np.arange(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        # (i+1)^b - i^b = i^b expm1(b log1p(1/i)) without cancellation
        diff = np.where(i > 0, np.exp(b * np.log(np.maximum(i, 1.0))) * np.expm1(b * np.log1p(1.0 / np.maximum(i, 1.0))), 1.0)
    leaves = diff / b * float(n) ** (-exponent)
    return build_weight(leaves)


def cascade(eps_max: float, depth: int, seed: int) -> DyadicWeight:
    """Random multiplicative cascade with mean 1.

    Each node splits its average ``m`` into ``m (1 + s eps)`` and ``m (1 - s eps)``,
    with ``eps ~ U[0, eps_max]`` and a fair random sign ``s``.
    """
    if not 0 <= eps_max < 1:
        raise ValueError("eps_max must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    m = np.ones(1)
    for _ in range(depth):
        eps = rng.uniform(0.0, eps_max, m.size) * rng.choice((-1.0, 1.0), m.size)
        m = np.stack([m * (1 + eps), m * (1 - eps)], axis=1).ravel()
    return build_weight(m)


def nondoubling_rh(depth: int, decay: float = 1e-3) -> DyadicWeight:
    """Geometric decay towards the right endpoint.

    The block ``[1 - 2^-j, 1 - 2^-(j+1))`` carries ``decay^j`` and the last leaf
    ``decay^depth``.  The ratio of a right-edge node's average to that of its
    right child is at least ``(1 + decay) / (2 decay)``, so the doubling
    constant grows without bound as ``decay -> 0``, while the mass sits on
    the left and the reverse Hoelder constants stay bounded.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not 0 < decay < 1:
        raise ValueError("decay must lie in (0, 1)")
    n = 1 << depth
    leaves = np.empty(n)
    for j in range(depth):
        leaves[n - (n >> j): n - (n >> (j + 1))] = decay**j
    leaves[-1] = decay**depth
    return build_weight(leaves)


def custom(leaves: Sequence[float]) -> DyadicWeight:
    return build_weight(leaves)


def generate(spec: GeneratorSpec) -> DyadicWeight:
    """Pure function of ``spec``."""
    p = dict(spec.params)
    if spec.kind == "constant":
        return constant(p.get("c", 1.0), spec.depth)
    if spec.kind == "two_value":
        return two_value(p["a"], p["b"], max(spec.depth, 1), p.get("split"))
    if spec.kind == "power_like":
        return power_like(p["exponent"], spec.depth)
    if spec.kind == "cascade":
        return cascade(p.get("eps_max", 0.5), spec.depth, spec.seed)
    if spec.kind == "nondoubling_rh":
        return nondoubling_rh(spec.depth, p.get("decay", 1e-3))
    return custom(p["leaves"])


def truncate(w: DyadicWeight, n: float) -> DyadicWeight:
    """Leafwise clamp to ``[1, n]``."""
    if not n > 1:
        raise ValueError("n must exceed 1")
    return DyadicWeight(np.clip(w.leaves, 1.0, n), w.root_length)


def weight_corpus(count: int, seed: int, *, max_depth: int = 10) -> list[DyadicWeight]:
    """Deterministic mix of cascades, two-value, power-like weights and truncations."""
    rng = np.random.default_rng(seed)
    out: list[DyadicWeight] = []
    while len(out) < count:
        r = int(rng.integers(0, 10))
        depth = int(rng.integers(1, max_depth + 1))
        if r < 5:
            w = cascade(float(rng.uniform(0.05, 0.95)), depth, int(rng.integers(0, 2**31)))
        elif r < 7:
            n = 1 << depth
            w = two_value(float(np.exp(rng.uniform(-4, 4))), float(np.exp(rng.uniform(-4, 4))), depth,
                          int(rng.integers(0, n + 1)))
        elif r < 9:
            w = power_like(float(rng.uniform(-0.95, 4.0)), depth)
        else:
            base = cascade(float(rng.uniform(0.3, 0.95)), depth, int(rng.integers(0, 2**31)))
            w = truncate(base.scaled(float(np.exp(rng.uniform(-1, 2)))), float(np.exp(rng.uniform(0.1, 3))))
        out.append(w)
    return out


# ---------------------------------------------------------------------------
# extremal search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtremalResult:
    best_value: float
    best_weight: np.ndarray | None
    restarts: int
    feasible: int


def _log_brackets(l: np.ndarray) -> np.ndarray:
    """``log <w>_I - <log w>_I`` on every dyadic node of the piece tree."""
    with np.errstate(over="ignore", divide="ignore", under="ignore"):
        lv = pyramid(np.exp(l))
        ll = pyramid(l)
        return np.concatenate([np.log(lv[j]) - ll[j] for j in range(len(lv))])


def _project(d: np.ndarray, x: float, y: float) -> np.ndarray | None:
    """``l = y + b d`` (``d`` centred) with ``<exp l> = x``; ``None`` if unreachable."""
    d = d - d.mean()
    target = math.log(x) - y
    if target <= 1e-15 or np.ptp(d) == 0:
        return np.full(d.size, y) if target <= 1e-15 else None
    d = d / np.ptp(d)

    def h(b):
        z = b * d
        zm = z.max()
        return zm + math.log(np.mean(np.exp(z - zm))) - target

    hi = 1.0
    while h(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            return None
    b = optimize.brentq(h, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return y + b * d


def extremal_search(x: float, y: float, Q: float, pieces: int = 8, budget: int = 20, *,
                    seed: int = 0, refine_steps: int = 200, polish: bool = True,
                    moment_tol: float = 1e-8, init: Sequence[np.ndarray] = ()) -> ExtremalResult:
    """Largest ``<w log w>`` found over ``pieces``-step weights with the given moments.

    Feasible weights satisfy ``<w> = x``, ``<log w> = y`` and have bracket at
    most ``Q`` on every dyadic subinterval of the piece partition.  Each of
    ``budget`` restarts draws a random direction, projects it onto the two
    moment constraints, then improves it by random single-coordinate moves
    (re-projected) and finally, if ``polish``, a constrained SLSQP step.
    ``init`` weights on coarser partitions are repeated up to ``pieces`` and
    used as extra starts; they stay feasible, so the result never falls below
    theirs.  The best feasible value is a certified lower bound for the supremum.
    """
    if pieces < 2 or pieces & (pieces - 1):
        raise ValueError("pieces must be a power of two >= 2")
    if not (x > 0 and 1 - 1e-12 <= x * math.exp(-y) <= Q * (1 + 1e-12)):
        raise ValueError("need 1 <= x exp(-y) <= Q")
    logq = math.log(Q)
    if math.log(x) - y <= 1e-15:
        # on the lower boundary only the constant weight has these moments
        return ExtremalResult(x * math.log(x), np.full(pieces, x), 0, 1)

    def feasible(l):
        return (l is not None and abs(l.mean() - y) <= moment_tol
                and abs(np.exp(l).mean() - x) <= moment_tol * max(1.0, x)
                and np.all(_log_brackets(l) <= logq + 1e-12))

    def value(l):
        return float(np.mean(np.exp(l) * l))

    rng = np.random.default_rng(seed)
    best, best_l, nfeas = -math.inf, None, 0
    cons = [{"type": "eq", "fun": lambda l: np.mean(l) - y},
            {"type": "eq", "fun": lambda l: np.log(np.mean(np.exp(l))) - math.log(x)},
            {"type": "ineq", "fun": lambda l: logq - _log_brackets(l)}]
    starts = [np.repeat(np.log(np.asarray(w0, dtype=float)), pieces // len(w0)) - y for w0 in init]
    for r in range(budget + len(starts)):
        if r < len(starts):
            d = starts[r]
        elif r == len(starts):
            # half/half two-value weight: every proper subinterval is constant, always feasible
            d = np.repeat([1.0, -1.0], pieces // 2)
        else:
            d = rng.normal(size=pieces) * rng.uniform(0.2, 3.0)
            if rng.random() < 0.5:
                d[rng.integers(0, pieces)] += rng.uniform(1, 6)
        l = _project(d, x, y)
        if not feasible(l):
            continue
        cur = value(l)
        step = 0.5
        for _ in range(refine_steps):
            d2 = l - y
            d2[rng.integers(0, pieces)] += rng.normal() * step
            cand = _project(d2, x, y)
            if cand is not None and feasible(cand) and value(cand) > cur:
                l, cur = cand, value(cand)
            else:
                step = max(step * 0.97, 1e-4)
        if polish:
            with np.errstate(over="ignore", invalid="ignore"):
                res = optimize.minimize(lambda v: -np.mean(np.exp(v) * v), l, constraints=cons,
                                        method="SLSQP", options={"maxiter": 300, "ftol": 1e-14})
            if feasible(res.x) and value(res.x) > cur:
                l, cur = res.x, value(res.x)
        nfeas += 1
        if cur > best:
            best, best_l = cur, l
    if best_l is None:
        raise ValueError("no feasible weight found for these moments")
    return ExtremalResult(best, np.exp(best_l), budget + len(starts), nfeas)
