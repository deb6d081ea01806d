import math

import numpy as np
import pytest
from hypothesis import given, settings

from dyadic_weights.dyadic import (
    ROOT,
    DyadicInterval,
    average,
    block_means,
    build_weight,
    delta,
    doubling_constant,
    dyadic_maximal,
    pyramid,
    transformed_average,
)
from dyadic_weights.convexity import FunctionFamily, jensen_gap, square_sum

from .strategies import deep_weights, weights


def _slice_mean(leaves, I, depth):
    # independent route: plain slicing and numpy mean
    n = 1 << (depth - I.level)
    return float(np.mean(leaves[I.index * n:(I.index + 1) * n]))


@pytest.mark.parametrize("leaves", [[], [1.0, 2.0, 3.0], [1.0, -1.0], [0.0, 1.0], [1.0, float("nan")],
                                    [1.0, float("inf")]])
def test_invalid_leaves(leaves):
    with pytest.raises(ValueError):
        build_weight(leaves)


def test_invalid_root_length():
    with pytest.raises(ValueError):
        build_weight([1.0, 2.0], root_length=0.0)


def test_w13_basics(w13):
    assert w13.depth == 1
    assert average(w13, ROOT) == 2.0
    assert delta(w13, ROOT) == -2.0
    assert doubling_constant(w13) == 2.0
    np.testing.assert_array_equal(dyadic_maximal(w13), [2.0, 3.0])


def test_delta_on_leaf_raises(w13):
    with pytest.raises(ValueError):
        delta(w13, (1, 0))


@pytest.mark.parametrize("I", [(2, 0), (1, 2), (-1, 0)])
def test_out_of_tree(w13, I):
    with pytest.raises(ValueError):
        average(w13, I)


def test_interval_navigation():
    I = DyadicInterval(3, 5)
    left, right = I.children()
    assert left == (4, 10) and right == (4, 11)
    assert left.parent() == I and right.parent() == I
    with pytest.raises(ValueError):
        ROOT.parent()


def test_immutable(w13):
    with pytest.raises(ValueError):
        w13.leaves[0] = 5.0
    with pytest.raises(ValueError):
        w13.levels[0][0] = 5.0


def test_equality_and_hash():
    a = build_weight([1.0, 2.0, 3.0, 4.0])
    b = build_weight(np.array([1.0, 2.0, 3.0, 4.0]))
    assert a == b and hash(a) == hash(b)
    assert a != a.scaled(2.0)


def test_nodes_enumeration():
    w = build_weight(np.arange(1.0, 9.0))
    assert len(list(w.nodes())) == 15
    assert len(list(w.nodes(internal=True))) == 7


def test_block_means_pairwise_order():
    # pairwise reduction in tree order, independent of leading axes
    a = np.arange(1.0, 17.0)
    np.testing.assert_array_equal(block_means(a[None, :], 4)[0], block_means(a, 4))
    np.testing.assert_allclose(block_means(a, 4), [2.5, 6.5, 10.5, 14.5], rtol=0, atol=0)


def test_doubling_needs_depth():
    with pytest.raises(ValueError):
        doubling_constant(build_weight([2.0]))


def test_transformed_average_rejects_nonfinite(w13):
    with pytest.raises(ValueError):
        transformed_average(w13, ROOT, lambda t: np.log(t - 1.0))


@settings(max_examples=60, deadline=None)
@given(weights())
def test_averages_match_slices(w):
    for I in w.nodes():
        assert math.isclose(average(w, I), _slice_mean(w.leaves, I, w.depth), rel_tol=1e-12)


@settings(max_examples=60, deadline=None)
@given(deep_weights())
def test_parent_is_mean_of_children(w):
    for I in w.nodes(internal=True):
        l, r = I.children()
        assert math.isclose(average(w, I), 0.5 * (average(w, l) + average(w, r)), rel_tol=1e-13)
        assert math.isclose(delta(w, I), average(w, l) - average(w, r),
                            rel_tol=1e-12, abs_tol=1e-12 * average(w, I))


@settings(max_examples=60, deadline=None)
@given(deep_weights())
def test_martingale_energy_identity(w):
    # variance = 1/4 sum of Delta^2 |I|/|J|, so the x^2 square sum equals 8 * gap
    fam = FunctionFamily("power", 2.0)
    leaves = w.leaves
    var = float(np.mean(leaves**2) - np.mean(leaves) ** 2)
    energy = 0.0
    for I in w.nodes(internal=True):
        energy += delta(w, I) ** 2 * 2.0**-I.level
    scale = float(np.mean(leaves**2))
    assert abs(var - energy / 4.0) <= 1e-11 * scale
    assert abs(square_sum(w, fam, ROOT) - 8.0 * jensen_gap(w, fam, ROOT)) <= 1e-10 * scale


@settings(max_examples=40, deadline=None)
@given(deep_weights())
def test_maximal_function_bruteforce(w):
    M = dyadic_maximal(w)
    for i in range(w.size):
        best = max(_slice_mean(w.leaves, DyadicInterval(j, i >> (w.depth - j)), w.depth) for j in range(w.depth + 1))
        assert math.isclose(M[i], best, rel_tol=1e-12)
    assert np.all(M >= w.leaves * (1 - 1e-12))


@settings(max_examples=40, deadline=None)
@given(deep_weights())
def test_doubling_bruteforce(w):
    D = max(average(w, I.parent()) / average(w, I) for I in w.nodes() if I.level > 0)
    assert math.isclose(doubling_constant(w), D, rel_tol=1e-12)
    assert 1.0 <= doubling_constant(w)


def test_pyramid_levels():
    levels = pyramid(np.array([1.0, 3.0, 5.0, 7.0]))
    assert [lv.tolist() for lv in levels] == [[4.0], [2.0, 6.0], [1.0, 3.0, 5.0, 7.0]]
