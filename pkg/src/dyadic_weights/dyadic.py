"""Dyadic tree of a step weight: node averages, differences, doubling, maximal function.

Node ``(j, k)`` covers leaves ``[k 2^(N-j), (k+1) 2^(N-j))``.  Its children are
``(j+1, 2k)`` (left, the ``+`` child) and ``(j+1, 2k+1)`` (right, ``-``).
All block averages are reduced pairwise in tree order so results do not
depend on how the work is scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

__all__ = [
    "DyadicInterval",
    "DyadicWeight",
    "ROOT",
    "average",
    "block_means",
    "build_weight",
    "delta",
    "doubling_constant",
    "dyadic_maximal",
    "maximal_all_levels",
    "pyramid",
    "transformed_average",
]


class DyadicInterval(NamedTuple):
    level: int
    index: int

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return DyadicInterval(self.level + 1, 2 * self.index), DyadicInterval(self.level + 1, 2 * self.index + 1)

    def parent(self) -> "DyadicInterval":
        if self.level == 0:
            raise ValueError("the root has no parent")
        return DyadicInterval(self.level - 1, self.index // 2)

    def is_valid(self) -> bool:
        return self.level >= 0 and 0 <= self.index < (1 << self.level)


ROOT = DyadicInterval(0, 0)


def block_means(values: np.ndarray, width: int) -> np.ndarray:
    """Means over consecutive blocks of ``width`` (a power of two), reduced pairwise.

    ``values`` may carry leading axes; the reduction runs over the last one.
    """
    a = np.asarray(values, dtype=float)
    a = a.reshape(a.shape[:-1] + (a.shape[-1] // width, width))
    while a.shape[-1] > 1:
        a = 0.5 * (a[..., 0::2] + a[..., 1::2])
    return a[..., 0]


def pyramid(values: np.ndarray) -> list[np.ndarray]:
    """All levels of averages: ``out[N]`` is ``values`` and ``out[j]`` has ``2^j`` entries."""
    a = np.asarray(values, dtype=float)
    n = a.shape[-1]
    depth = n.bit_length() - 1
    out = [a]
    for _ in range(depth):
        a = 0.5 * (a[..., 0::2] + a[..., 1::2])
        out.append(a)
    return out[::-1]


def _check_leaves(leaves) -> np.ndarray:
    arr = np.array(leaves, dtype=float).ravel()
    n = arr.size
    if n == 0 or n & (n - 1):
        raise ValueError(f"number of leaves must be a power of two, got {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("leaf values must be finite")
    if np.any(arr <= 0):
        raise ValueError("leaf values must be strictly positive")
    return arr


@dataclass(frozen=True, eq=False)
class DyadicWeight:
    """Positive step function on the ``2^depth`` leaves of a dyadic tree.

    Immutable: the leaf array and the cached averages are read-only.
    """

    leaves: np.ndarray
    root_length: float = 1.0
    levels: tuple = field(init=False, repr=False)

    def __post_init__(self):
        arr = _check_leaves(self.leaves)
        if not (self.root_length > 0 and math.isfinite(self.root_length)):
            raise ValueError("root_length must be positive and finite")
        arr.setflags(write=False)
        object.__setattr__(self, "leaves", arr)
        levels = pyramid(arr)
        for lv in levels:
            lv.setflags(write=False)
        object.__setattr__(self, "levels", tuple(levels))

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def size(self) -> int:
        return self.leaves.size

    def __eq__(self, other) -> bool:
        return (isinstance(other, DyadicWeight) and self.root_length == other.root_length
                and np.array_equal(self.leaves, other.leaves))

    def __hash__(self) -> int:
        return hash((self.root_length, self.leaves.tobytes()))

    def check(self, I: DyadicInterval) -> DyadicInterval:
        I = DyadicInterval(*I)
        if not I.is_valid() or I.level > self.depth:
            raise ValueError(f"interval {tuple(I)} is outside a tree of depth {self.depth}")
        return I

    def leaf_slice(self, I: DyadicInterval) -> slice:
        I = DyadicInterval(*I)
        w = 1 << (self.depth - I.level)
        return slice(I.index * w, (I.index + 1) * w)

    def nodes(self, *, internal: bool = False) -> Iterator[DyadicInterval]:
        top = self.depth if internal else self.depth + 1
        for j in range(top):
            for k in range(1 << j):
                yield DyadicInterval(j, k)

    def scaled(self, c: float) -> "DyadicWeight":
        return DyadicWeight(c * self.leaves, self.root_length)


def build_weight(leaves: Sequence[float], root_length: float = 1.0) -> DyadicWeight:
    """Validate leaves and build the averages cache."""
    return DyadicWeight(np.asarray(leaves, dtype=float), float(root_length))


def average(w: DyadicWeight, I: DyadicInterval) -> float:
    I = w.check(I)
    return float(w.levels[I.level][I.index])


def delta(w: DyadicWeight, I: DyadicInterval) -> float:
    """``<w>_left - <w>_right``."""
    I = w.check(I)
    if I.level == w.depth:
        raise ValueError("delta is undefined on a leaf")
    lv = w.levels[I.level + 1]
    return float(lv[2 * I.index] - lv[2 * I.index + 1])


def transformed_average(w: DyadicWeight, I: DyadicInterval, profile: Callable[[np.ndarray], np.ndarray]) -> float:
    """Exact average of ``profile(w)`` over ``I``."""
    I = w.check(I)
    with np.errstate(all="ignore"):
        vals = np.asarray(profile(w.leaves[w.leaf_slice(I)]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("profile is not finite on the leaf values")
    return float(block_means(vals, vals.size)[0]) if vals.ndim else float(vals)


def doubling_constant(w: DyadicWeight) -> float:
    """``sup <w>_parent / <w>_child`` over non-root nodes."""
    if w.depth < 1:
        raise ValueError("doubling constant needs depth >= 1")
    best = 1.0
    for j in range(1, w.depth + 1):
        ratio = np.repeat(w.levels[j - 1], 2) / w.levels[j]
        best = max(best, float(ratio.max()))
    return best


def maximal_all_levels(w: DyadicWeight, top: int) -> np.ndarray:
    """Dyadic maximal function localized to each node of level ``top``.

    Returns one leaf-length array: entry ``i`` is the largest average over the
    nodes between leaf ``i`` and its level-``top`` ancestor.
    """
    cur = w.levels[top]
    for j in range(top + 1, w.depth + 1):
        cur = np.maximum(np.repeat(cur, 2), w.levels[j])
    return cur


def dyadic_maximal(w: DyadicWeight, I: DyadicInterval = ROOT) -> np.ndarray:
    """``M^d(w chi_I)`` at each leaf under ``I``."""
    I = w.check(I)
    return maximal_all_levels(w, I.level)[w.leaf_slice(I)].copy()
