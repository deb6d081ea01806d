import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadic_weights.bellman import bellman_value, solve_q0
from dyadic_weights.constants import ConstantKind, classical_constant
from dyadic_weights.dyadic import doubling_constant, pyramid
from dyadic_weights.generators import (
    GeneratorSpec,
    cascade,
    constant,
    extremal_search,
    generate,
    nondoubling_rh,
    power_like,
    truncate,
    two_value,
    weight_corpus,
)

AINF = ConstantKind("Ainf")


def test_constant_and_two_value():
    assert np.all(constant(2.0, 3).leaves == 2.0)
    w = two_value(1.0, 5.0, depth=2, split=1)
    assert w.leaves.tolist() == [1.0, 5.0, 5.0, 5.0]
    with pytest.raises(ValueError):
        two_value(1.0, 2.0, depth=1, split=3)


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5, 2.0, 3.7])
def test_power_like_cell_averages(a):
    depth = 4
    n = 1 << depth
    w = power_like(a, depth)
    mp.mp.dps = 30
    for i in range(n):
        ref = n * mp.quad(lambda t: t**a, [mp.mpf(i) / n, mp.mpf(i + 1) / n])
        assert math.isclose(w.leaves[i], float(ref), rel_tol=1e-12)


def test_power_like_rejects_nonintegrable():
    with pytest.raises(ValueError):
        power_like(-1.0, 3)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.95), st.integers(0, 8), st.integers(0, 2**31))
def test_cascade_mean_one_and_splits(eps, depth, seed):
    w = cascade(eps, depth, seed)
    assert math.isclose(w.levels[0][0], 1.0, rel_tol=1e-12)
    for j in range(depth):
        m = w.levels[j]
        kids = w.levels[j + 1].reshape(-1, 2)
        rel = np.abs(kids[:, 0] / m - 1.0)
        assert np.all(rel <= eps + 1e-12)
        np.testing.assert_allclose(kids[:, 0] + kids[:, 1], 2 * m, rtol=1e-12)


def test_cascade_deterministic():
    assert cascade(0.5, 6, 7) == cascade(0.5, 6, 7)
    assert cascade(0.5, 6, 7) != cascade(0.5, 6, 8)
    with pytest.raises(ValueError):
        cascade(1.0, 3, 0)


@pytest.mark.parametrize("decay", [0.5, 0.1, 1e-2, 1e-3])
def test_nondoubling_growth(decay):
    w = nondoubling_rh(10, decay)
    assert doubling_constant(w) >= (1 + decay) / (2 * decay) * (1 - 1e-12)
    # mass sits on the left half, so RH2 stays moderate
    assert classical_constant(w, ConstantKind("RHp", 2.0)) < 1.5


def test_truncate_clamps():
    w = cascade(0.9, 6, 3).scaled(3.0)
    t = truncate(w, 4.0)
    assert t.leaves.min() >= 1.0 and t.leaves.max() <= 4.0
    with pytest.raises(ValueError):
        truncate(w, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.3, 0.95), st.integers(1, 7), st.integers(0, 10**6), st.floats(-1, 2), st.floats(0.05, 3))
def test_truncate_does_not_raise_ainf(eps, depth, seed, logc, logn):
    w = cascade(eps, depth, seed).scaled(math.exp(logc))
    before = classical_constant(w, AINF)
    after = classical_constant(truncate(w, math.exp(logn)), AINF)
    assert after <= before * (1 + 1e-12)


def test_corpus_deterministic():
    a = weight_corpus(30, seed=5, max_depth=6)
    b = weight_corpus(30, seed=5, max_depth=6)
    assert len(a) == 30 and a == b
    assert all(1 <= w.depth <= 6 for w in a)


def test_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec("bogus")
    with pytest.raises(ValueError):
        GeneratorSpec("constant", depth=-1)
    with pytest.raises(ValueError):
        GeneratorSpec("cascade", depth=3)


def test_generate_pure():
    spec = GeneratorSpec("cascade", depth=5, seed=11, params={"eps_max": 0.7})
    assert generate(spec) == generate(spec) == cascade(0.7, 5, 11)
    assert generate(GeneratorSpec("two_value", 2, params={"a": 1.0, "b": 3.0})) == two_value(1.0, 3.0, 2)
    assert generate(GeneratorSpec("custom", params={"leaves": [1.0, 2.0]})).leaves.tolist() == [1.0, 2.0]


# --- extremal search --------------------------------------------------------

def _brackets_ok(w, Q):
    lv, ll = pyramid(w), pyramid(np.log(w))
    return all(np.all(np.log(a) - b <= math.log(Q) + 1e-10) for a, b in zip(lv, ll))


@pytest.mark.parametrize("x, y", [(1.5, 0.1), (1.2, 0.0), (3.0, 0.9)])
def test_extremal_below_bellman(x, y):
    Q = 2.0
    r = extremal_search(x, y, Q, pieces=8, budget=6, seed=1, refine_steps=60)
    B = bellman_value(x, y, solve_q0(Q).Q0)
    assert r.best_value <= B + 1e-10
    w = r.best_weight
    assert math.isclose(w.mean(), x, rel_tol=1e-7) and abs(np.log(w).mean() - y) <= 1e-7
    assert _brackets_ok(w, Q)
    assert math.isclose(r.best_value, float(np.mean(w * np.log(w))), rel_tol=1e-9)


def test_extremal_warm_start_not_worse():
    x, y, Q = 1.5, 0.1, 2.0
    coarse = extremal_search(x, y, Q, pieces=4, budget=5, seed=0, refine_steps=60)
    fine = extremal_search(x, y, Q, pieces=8, budget=2, seed=3, refine_steps=30, init=[coarse.best_weight])
    assert fine.best_value >= coarse.best_value - 1e-9


def test_extremal_constant_case():
    r = extremal_search(2.0, math.log(2.0), 3.0, pieces=4)
    assert np.allclose(r.best_weight, 2.0) and math.isclose(r.best_value, 2 * math.log(2.0))


def test_extremal_validation():
    with pytest.raises(ValueError):
        extremal_search(1.5, 0.1, 2.0, pieces=6)
    with pytest.raises(ValueError):
        extremal_search(1.5, 1.0, 2.0)  # bracket below 1
    with pytest.raises(ValueError):
        extremal_search(10.0, 0.0, 2.0)  # bracket above Q
