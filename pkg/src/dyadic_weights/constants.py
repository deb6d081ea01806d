"""Muckenhoupt, reverse Hoelder and weak reverse Hoelder constants of dyadic weights.

Every per-node quantity is computed from the normalized weight
``u = w / <w>_J`` on the node, so all constants are exactly invariant under
``w -> c w`` up to rounding of the normalization itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dyadic import DyadicInterval, DyadicWeight, ROOT, block_means, maximal_all_levels

__all__ = [
    "CLASSICAL",
    "ConstantKind",
    "ConstantResult",
    "Sandwich",
    "WEAK",
    "classical_constant",
    "constant_result",
    "iwaniec_verde_sandwich",
    "iwaniec_verde_terms",
    "luxemburg_norm",
    "node_values",
    "phi_linear",
    "phi_llogl",
    "rh1_limit_probe",
    "rh1_via_maximal",
    "stein_sandwich",
    "stein_terms",
    "weak_constant",
]

CLASSICAL = ("Ap", "Ainf", "RHp", "RH1")
WEAK = ("WeakRHp", "WeakRH1", "WeakRH1viaLuxemburg")
_WITH_P = ("Ap", "RHp", "WeakRHp")
_ALL = CLASSICAL + ("RH1viaMaximal", "RH1viaLuxemburg") + WEAK


@dataclass(frozen=True)
class ConstantKind:
    tag: str
    p: float | None = None

    def __post_init__(self):
        if self.tag not in _ALL:
            raise ValueError(f"unknown constant kind {self.tag!r}")
        if self.tag in _WITH_P:
            if self.p is None or not self.p > 1 or not math.isfinite(self.p):
                raise ValueError(f"{self.tag} needs a finite p > 1")
        elif self.p is not None:
            raise ValueError(f"{self.tag} takes no p")

    @property
    def label(self) -> str:
        return f"{self.tag}({self.p:g})" if self.p is not None else self.tag

    @classmethod
    def parse(cls, text: str, p: float | None = None) -> "ConstantKind":
        """``"Ap:2"``, ``"RH1"``; a bare p-kind takes the supplied default ``p``."""
        tag, _, val = text.strip().partition(":")
        if tag in _WITH_P:
            return cls(tag, float(val) if val else p)
        if val:
            raise ValueError(f"{tag} takes no p")
        return cls(tag)


@dataclass(frozen=True)
class ConstantResult:
    kind: ConstantKind
    value: float
    argmax: DyadicInterval


def phi_linear(t):
    return t


def phi_llogl(t):
    """``t log(e + t)``."""
    return t * np.log(math.e + t)


def _normalized(w: DyadicWeight, j: int) -> np.ndarray:
    """Leaves divided by their level-``j`` ancestor's average."""
    return w.leaves / np.repeat(w.levels[j], 1 << (w.depth - j))


def _finite(a: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise OverflowError(f"{what} overflowed on this weight")
    return a


def _level_values(w: DyadicWeight, tag: str, p: float | None, j: int) -> np.ndarray:
    u = _normalized(w, j)
    width = 1 << (w.depth - j)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if tag == "Ap":
            m = block_means(u ** (-1.0 / (p - 1.0)), width)
            out = m ** (p - 1.0)
        elif tag == "Ainf":
            out = np.exp(-block_means(np.log(u), width))
        elif tag == "RHp":
            out = block_means(u**p, width) ** (1.0 / p)
        elif tag == "RH1":
            out = block_means(u * np.log(u), width)
        else:
            raise ValueError(tag)
    return _finite(out, tag)


def _weak_level_values(w: DyadicWeight, tag: str, p: float | None, j: int) -> np.ndarray:
    ratio = w.levels[j] / np.repeat(w.levels[j - 1], 2)
    if tag == "WeakRHp":
        return ratio * _level_values(w, "RHp", p, j)
    if tag == "WeakRH1":
        return ratio * _level_values(w, "RH1", None, j)
    if tag == "WeakRH1viaLuxemburg":
        return ratio * _luxemburg_level(w, j, phi_llogl)
    raise ValueError(tag)


def node_values(w: DyadicWeight, kind: ConstantKind) -> list[np.ndarray]:
    """Per-level arrays of the node expression whose sup defines the constant.

    Weak kinds give an empty array at level 0 (the root has no parent).
    """
    t = kind.tag
    if t in CLASSICAL:
        return [_level_values(w, t, kind.p, j) for j in range(w.depth + 1)]
    if t == "RH1viaMaximal":
        return [_maximal_ratio_level(w, j) for j in range(w.depth + 1)]
    if t == "RH1viaLuxemburg":
        return [_luxemburg_level(w, j, phi_llogl) for j in range(w.depth + 1)]
    if t in WEAK:
        if w.depth < 1:
            raise ValueError("weak constants need depth >= 1")
        return [np.empty(0)] + [_weak_level_values(w, t, kind.p, j) for j in range(1, w.depth + 1)]
    raise ValueError(t)


def _sup(levels: list[np.ndarray]) -> tuple[float, DyadicInterval]:
    # first node in (level, index) order wins ties
    best, arg = -math.inf, ROOT
    for j, vals in enumerate(levels):
        if vals.size == 0:
            continue
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, arg = float(vals[k]), DyadicInterval(j, k)
    return best, arg


def constant_result(w: DyadicWeight, kind: ConstantKind) -> ConstantResult:
    value, arg = _sup(node_values(w, kind))
    return ConstantResult(kind, value, arg)


def classical_constant(w: DyadicWeight, kind: ConstantKind) -> float:
    """Sup over all nodes of ``Ap``, ``Ainf``, ``RHp`` or ``RH1`` expressions."""
    if kind.tag not in CLASSICAL:
        raise ValueError(f"{kind.tag} is not a classical kind")
    return constant_result(w, kind).value


def weak_constant(w: DyadicWeight, kind: ConstantKind) -> float:
    """Sup over non-root nodes, normalized by the parent average."""
    if kind.tag not in WEAK:
        raise ValueError(f"{kind.tag} is not a weak kind")
    return constant_result(w, kind).value


# ---------------------------------------------------------------------------
# maximal function and Orlicz norms
# ---------------------------------------------------------------------------

def _maximal_ratio_level(w: DyadicWeight, j: int) -> np.ndarray:
    M = maximal_all_levels(w, j)
    return block_means(M, 1 << (w.depth - j)) / w.levels[j]


def rh1_via_maximal(w: DyadicWeight) -> float:
    """``sup_I <M^d(w chi_I)>_I / <w>_I``."""
    return constant_result(w, ConstantKind("RH1viaMaximal")).value


def _luxemburg_rows(u: np.ndarray, Phi: Callable, rtol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Luxemburg norm of each row of ``u`` (rows averaged uniformly)."""
    width = u.shape[1]

    def avg(lam):
        with np.errstate(over="ignore"):
            return block_means(Phi(u / lam[:, None]).ravel(), width)

    lo = u.min(axis=1) / 2.0
    hi = u.max(axis=1) * 2.0
    for _ in range(max_iter):
        bad = avg(hi) > 1.0
        if not bad.any():
            break
        hi = np.where(bad, hi * 4.0, hi)
    for _ in range(max_iter):
        bad = avg(lo) <= 1.0
        if not bad.any():
            break
        lo = np.where(bad, lo / 4.0, lo)
    a_hi, a_lo = avg(hi), avg(lo)
    if np.any(a_hi > 1.0) or np.any(a_lo <= 1.0):
        i = int(np.argmax((a_hi > 1.0) | (a_lo <= 1.0)))
        raise RuntimeError(f"Luxemburg bracket failure: [{lo[i]!r}, {hi[i]!r}]")
    for _ in range(max_iter):
        if np.all(hi - lo <= rtol * hi):
            break
        mid = np.sqrt(lo * hi)
        over = avg(mid) > 1.0
        lo = np.where(over, mid, lo)
        hi = np.where(over, hi, mid)
    return np.sqrt(lo * hi)


def _luxemburg_level(w: DyadicWeight, j: int, Phi: Callable) -> np.ndarray:
    return w.levels[j] * _luxemburg_rows(_normalized(w, j).reshape(1 << j, -1), Phi)


def luxemburg_norm(w: DyadicWeight, I: DyadicInterval, Phi: Callable = phi_llogl, *, rtol: float = 1e-12) -> float:
    """``inf{lam > 0 : <Phi(w / lam)>_I <= 1}`` by bisection in ``log lam``."""
    I = w.check(I)
    vals = w.leaves[w.leaf_slice(I)]
    return float(_luxemburg_rows(vals[None, :], Phi, rtol)[0])


def rh1_limit_probe(w: DyadicWeight, I: DyadicInterval, p: float) -> float:
    """``p' log(<w^p>_I^(1/p) / <w>_I)``; tends to the RH1 expression as ``p -> 1+``."""
    if not 1.0 < p <= 2.0:
        raise ValueError("p must lie in (1, 2]")
    I = w.check(I)
    u = w.leaves[w.leaf_slice(I)] / w.levels[I.level][I.index]
    # <u^p> - 1 = <u (u^(p-1) - 1)> since <u> = 1; avoids cancellation near p = 1
    excess = block_means(u * np.expm1((p - 1.0) * np.log(u)), u.size)[0]
    return float(math.log1p(excess) / (p - 1.0))


def stein_terms(w: DyadicWeight) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-node ``<M^d(w chi_I)>_I`` and ``<w log(e + w/<w>_I)>_I``."""
    maxavg, llog = [], []
    for j in range(w.depth + 1):
        width = 1 << (w.depth - j)
        maxavg.append(block_means(maximal_all_levels(w, j), width))
        u = _normalized(w, j)
        llog.append(w.levels[j] * block_means(u * np.log(math.e + u), width))
    return maxavg, llog


def iwaniec_verde_terms(w: DyadicWeight) -> dict[str, list[np.ndarray]]:
    """Per-node Luxemburg ``L log L`` norm and both normalizations of the integral.

    ``average``: ``<w log(e + w/<w>_I)>_I``; ``integral``: the same times ``|I|``.
    """
    norm, avg, integral = [], [], []
    for j in range(w.depth + 1):
        width = 1 << (w.depth - j)
        u = _normalized(w, j)
        a = w.levels[j] * block_means(u * np.log(math.e + u), width)
        norm.append(_luxemburg_level(w, j, phi_llogl))
        avg.append(a)
        integral.append(a * w.root_length / (1 << j))
    return {"norm": norm, "average": avg, "integral": integral}


@dataclass(frozen=True)
class Sandwich:
    """``lo_factor * a <= b <= hi_factor * a`` on every node; margins are relative to ``a``."""

    lower_margin: float
    upper_margin: float
    lower_arg: DyadicInterval
    upper_arg: DyadicInterval

    def passed(self, tol: float = 1e-10) -> bool:
        return self.lower_margin >= -tol and self.upper_margin >= -tol


def _sandwich(a_levels, b_levels, lo_factor: float, hi_factor: float) -> Sandwich:
    lo = [(b - lo_factor * a) / a for a, b in zip(a_levels, b_levels)]
    hi = [(hi_factor * a - b) / a for a, b in zip(a_levels, b_levels)]
    lo_v, lo_arg = _sup([-x for x in lo])
    hi_v, hi_arg = _sup([-x for x in hi])
    return Sandwich(-lo_v, -hi_v, lo_arg, hi_arg)


def stein_sandwich(w: DyadicWeight) -> Sandwich:
    """``<M^d(w chi_I)>_I / 3 <= <w log(e + w/<w>_I)>_I <= 2 <M^d(w chi_I)>_I``."""
    maxavg, llog = stein_terms(w)
    return _sandwich(maxavg, llog, 1.0 / 3.0, 2.0)


def iwaniec_verde_sandwich(w: DyadicWeight, normalization: str = "average") -> Sandwich:
    """``||w||_{L log L, I} <= T(I) <= 2 ||w||_{L log L, I}`` with ``T`` the chosen normalization."""
    if normalization not in ("average", "integral"):
        raise ValueError("normalization must be 'average' or 'integral'")
    t = iwaniec_verde_terms(w)
    return _sandwich(t["norm"], t[normalization], 1.0, 2.0)
