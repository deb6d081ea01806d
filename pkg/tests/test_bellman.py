import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadic_weights import bellman as bm
from dyadic_weights.constants import ConstantKind, classical_constant

mp.mp.dps = 40

# direct-mode roots from an independent 40-digit bisection (lambertw-based B)
Q0_ORACLE = {
    1.01: 1.0104169209383551,
    2.0: 2.0244067154783124,
    10.0: 10.185863719731613,
    100.0: 101.98420755164944,
    1e4: 10199.770296424874,
    1e6: 1019978.3761351844,
}


def g_oracle(a):
    return -mp.lambertw(-mp.e ** (-1 - mp.mpf(a)), 0).real


def B_oracle(x, y, Q):
    x, y, Q = mp.mpf(x), mp.mpf(y), mp.mpf(Q)
    gam = g_oracle(mp.log(Q))
    v = gam * x / g_oracle(mp.log(Q) - (mp.log(x) - y))
    return x * mp.log(v) + (x - v) / gam


# --- f, g, gamma -------------------------------------------------------------

def test_g_inverts_f():
    t = np.linspace(1e-3, 1.0, 200)
    assert np.max(np.abs(bm.eval_g(bm.eval_f(t)) - t)) < 1e-10
    a = np.linspace(0.0, 50.0, 200)
    assert np.max(np.abs(bm.eval_f(bm.eval_g(a)) - a)) < 1e-10


@pytest.mark.parametrize("a", [1e-12, 1e-8, 1e-4, 0.01, 0.5, 1.0, 3.0, 10.0, 50.0, 300.0, 700.0])
def test_g_against_lambertw(a):
    assert math.isclose(bm.eval_g(a), float(g_oracle(a)), rel_tol=1e-12)


def test_g_special_values():
    assert bm.eval_g(0.0) == 1.0
    assert abs(bm.gamma_of(1.0) - 1.0) <= 1e-12
    assert isinstance(bm.eval_g(2.0), float)
    with pytest.raises(bm.DomainError):
        bm.eval_g(-1e-3)
    with pytest.raises(bm.DomainError):
        bm.eval_f(0.0)
    with pytest.raises(bm.DomainError):
        bm.gamma_of(0.5)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 600.0))
def test_g_root_property(a):
    t = bm.eval_g(a)
    assert 0 < t <= 1
    # residual of expm1(s) - s = a in s = log t
    s = math.log(t)
    assert abs(math.expm1(s) - s - a) <= 1e-12 * max(1.0, a)


# --- the Bellman function ---------------------------------------------------

@pytest.mark.parametrize("Q", [1.5, 2.0, 10.0, 100.0])
def test_lower_boundary(Q):
    x = np.linspace(0.1, 10.0, 101)
    assert np.max(np.abs(bm.bellman_value(x, np.log(x), Q) - x * np.log(x))) < 1e-10


@pytest.mark.parametrize("Q", [1.5, 10.0])
def test_upper_boundary(Q):
    x = np.linspace(0.5, 4.0, 9)
    gam = float(bm.gamma_of(Q))
    got = bm.bellman_value(x, np.log(x) - math.log(Q), Q)
    np.testing.assert_allclose(got, x * np.log(gam * x) + x * (1 - gam) / gam, rtol=1e-12)


@pytest.mark.parametrize("x, b, Q", [(1.0, 1.3, 2.0), (2.5, 1.01, 1.5), (0.3, 7.0, 10.0), (5.0, 90.0, 100.0)])
def test_value_against_oracle(x, b, Q):
    y = math.log(x) - math.log(b)
    assert math.isclose(bm.bellman_value(x, y, Q), float(B_oracle(x, y, Q)), rel_tol=1e-11, abs_tol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.0, 1.0), st.floats(1.01, 100.0), st.floats(-3.0, 3.0))
def test_homogeneity(x, frac, Q, logc):
    # B(cx, y + log c) = c B(x, y) + c x log c
    y = math.log(x) - frac * math.log(Q)
    c = math.exp(logc)
    lhs = bm.bellman_value(c * x, y + logc, Q)
    rhs = c * bm.bellman_value(x, y, Q) + c * x * logc
    assert math.isclose(lhs, rhs, rel_tol=1e-9, abs_tol=1e-9 * c * x * (1 + abs(logc)))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.0, 1.0), st.floats(1.01, 100.0))
def test_value_above_jensen(x, frac, Q):
    y = math.log(x) - frac * math.log(Q)
    assert bm.bellman_value(x, y, Q) >= x * math.log(x) - 1e-12 * max(1.0, abs(x * math.log(x)))


def test_value_domain():
    with pytest.raises(bm.DomainError):
        bm.bellman_value(1.0, 1.0, 2.0)  # bracket below 1
    with pytest.raises(bm.DomainError):
        bm.bellman_value(1.0, -1.0, 2.0)  # bracket above Q
    with pytest.raises(bm.DomainError):
        bm.bellman_value(-1.0, 0.0, 2.0)


def test_tangent_data():
    td = bm.tangent_data(bm.BellmanPoint(2.0, 0.3), 3.0)
    assert td.v <= 2.0 <= td.a
    assert math.isclose(td.v, float(bm.gamma_of(3.0)) * td.a, rel_tol=1e-15)


def test_triple_construction():
    t = bm.BellmanTriple.from_ends(bm.BellmanPoint(1.0, -0.1), bm.BellmanPoint(3.0, 0.9))
    assert t.is_consistent() and t.z == bm.BellmanPoint(2.0, 0.4)


# --- boundary deltas and Q0 ---------------------------------------------------

QGRID = np.logspace(0, 6, 200)


def test_boundary_signs():
    for Q in QGRID:
        assert bm.delta_boundary("A", Q, Q) >= -1e-12
        assert bm.delta_boundary("B", Q, Q) <= 1e-12
        assert bm.delta_boundary("C", Q, Q) >= -1e-12


@pytest.mark.parametrize("case", ["A", "B", "C"])
def test_boundary_closed_forms(case):
    for Q in (1.5, 2.0, 10.0, 1e3, 1e5):
        d = bm.delta_boundary(case, Q)
        assert math.isclose(d, bm.delta_boundary_closed_form(case, Q), rel_tol=1e-9, abs_tol=1e-12)


@pytest.mark.parametrize("case", ["A", "B", "C"])
def test_boundary_monotone_in_q0(case):
    for Q in (1.5, 2.0, 10.0, 100.0, 1e4):
        d = [bm.delta_boundary(case, Q, Q * f) for f in np.linspace(1.0, 1.05, 11)]
        assert np.all(np.diff(d) > 0)


@pytest.mark.parametrize("case", ["A", "B", "C"])
def test_boundary_reduced_matches_three_evaluations(case):
    # second route: three separate Bellman evaluations; their rounding grows like Q0
    from dyadic_weights.bellman import _boundary_triple, _triple_delta

    for Q in (1.01, 1.5, 2.0, 10.0, 100.0, 1e4, 1e6):
        for Q0 in (Q, Q * 1.01, bm.solve_q0(Q).Q0):
            xs, ys = _boundary_triple(case, Q)
            ref = _triple_delta(xs, ys, Q0)
            assert abs(bm.delta_boundary(case, Q, Q0) - ref) <= 1e-14 * math.e * Q0 * 100


def test_boundary_q0_below_q_rejected():
    with pytest.raises(bm.DomainError):
        bm.delta_boundary("A", 2.0, 1.5)


@pytest.mark.parametrize("Q", sorted(Q0_ORACLE))
def test_q0_against_oracle(Q):
    r = bm.solve_q0(Q)
    assert r.Q0 > Q
    assert math.isclose(r.Q0, Q0_ORACLE[Q], rel_tol=1e-12)
    assert abs(r.residual) < 1e-12


def test_q0_ratio_bounded():
    ratios = [bm.solve_q0(Q).Q0 / Q for Q in Q0_ORACLE]
    assert max(ratios) < 1.021 and min(ratios) > 1.0


@pytest.mark.parametrize("Q", [1.01, 2.0, 10.0, 100.0, 1e4])
def test_q0_closed_form_mode(Q):
    d = bm.solve_q0(Q, "direct")
    c = bm.solve_q0(Q, "closed_form")
    assert Q < c.Q0 < d.Q0
    assert abs(c.residual) < 1e-12
    assert abs(bm.q0_closed_form_residual(float(bm.gamma_of(c.Q0)), Q)) < 1e-9


def test_q0_errors():
    with pytest.raises(bm.DomainError):
        bm.solve_q0(1.0)
    with pytest.raises(ValueError):
        bm.solve_q0(2.0, "guess")


# --- midpoint concavity -------------------------------------------------------

def test_sampled_triples_inside_domain(rng):
    Q = 5.0
    xm, ym, xp, yp = bm.sample_triples(Q, 2000, rng)
    for x, y in ((xm, ym), (xp, yp), (0.5 * (xm + xp), 0.5 * (ym + yp))):
        b = bm.bracket(x, y)
        assert np.all(b >= 1 - 1e-12) and np.all(b <= Q * (1 + 1e-12))


@pytest.mark.parametrize("Q", [1.5, 10.0, 1e4])
def test_concavity_with_enlarged_domain(Q):
    r = bm.monte_carlo_concavity(Q, 20_000, seed=7)
    assert r["min_deficit"] >= -1e-9


@pytest.mark.parametrize("Q", [2.0, 10.0])
def test_enlargement_is_needed(Q):
    assert bm.monte_carlo_concavity(Q, 20_000, seed=7, Q0=Q)["min_deficit"] < -1e-3


def test_closed_form_root_insufficient():
    # the closed-form root is slightly smaller than the direct one and loses concavity
    r = bm.monte_carlo_concavity(2.0, 50_000, seed=1, mode="closed_form")
    assert r["min_deficit"] < -1e-3


def test_local_concavity():
    for Q in (1.5, 10.0):
        assert bm.local_concavity_check(Q, 20_000, seed=3)["min_deficit"] >= -1e-9


def test_midpoint_deficit_rejects_outside():
    t = bm.BellmanTriple.from_ends(bm.BellmanPoint(1.0, 0.0), bm.BellmanPoint(1.0, -5.0))
    with pytest.raises(bm.DomainError):
        bm.midpoint_deficit(t, 2.0, 2.1)


def test_monte_carlo_deterministic():
    a = bm.monte_carlo_concavity(3.0, 5000, seed=11)
    b = bm.monte_carlo_concavity(3.0, 5000, seed=11)
    assert a == b


# --- segment geometry ---------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(-2.0, 2.0), st.floats(0.2, 5.0), st.floats(-2.0, 2.0))
def test_segment_bracket_bruteforce(x1, y1, x2, y2):
    if abs(x1 - x2) + abs(y1 - y2) < 1e-6:
        return
    r = bm.segment_max_bracket(bm.BellmanPoint(x1, y1), bm.BellmanPoint(x2, y2))
    t = np.linspace(0, 1, 20001)
    b = bm.bracket(x1 + t * (x2 - x1), y1 + t * (y2 - y1))
    assert r.max_value >= b.max() * (1 - 1e-12)
    assert r.max_value <= b.max() * (1 + 1e-6)
    assert math.isclose(r.min_value, b.min(), rel_tol=1e-12)


def test_segment_identical_ends():
    p = bm.BellmanPoint(1.0, 0.0)
    with pytest.raises(ValueError):
        bm.segment_max_bracket(p, p)


def test_canonical_points_leave_domain():
    # the B-case segment pokes above Gamma_Q, which is why Q0 > Q is needed
    Q = 10.0
    zm, zp = bm.canonical_points("B", Q)
    assert bm.segment_max_bracket(zm, zp).max_value > Q


# --- reduced delta and vertices ----------------------------------------------

@pytest.mark.parametrize("Q", [1.5, 2.0, 10.0, 100.0, 1e4, 1e6])
def test_vertex_n_vanishes_at_endpoint(Q):
    Q0 = bm.solve_q0(Q).Q0
    r = math.sqrt(1 - 1 / Q)
    assert abs(bm.vertex_delta("N", 1 + r, Q, Q0)) <= 1e-8


@pytest.mark.parametrize("Q", [1.5, 10.0, 1e4])
def test_vertex_m_endpoints(Q):
    Q0 = bm.solve_q0(Q).Q0
    lo, hi = bm.vertex_range("M", Q)
    assert abs(bm.vertex_delta("M", lo, Q, Q0)) <= 1e-12
    x = np.linspace(lo, hi, 501)
    d = bm.vertex_delta("M", x, Q, Q0)
    assert d[-1] >= 0 and np.all(d >= -1e-12)


@pytest.mark.parametrize("Q", [1.5, 10.0, 1e4])
def test_vertex_m_slope_sign(Q):
    # the derivative in x+ is positive along M (records the sign, see ledger)
    Q0 = bm.solve_q0(Q).Q0
    lo, hi = bm.vertex_range("M", Q)
    x = np.linspace(lo, hi, 501)
    assert np.all(np.diff(bm.vertex_delta("M", x, Q, Q0)) >= -1e-12)


@pytest.mark.parametrize("Q, frac", [(1.5, 0.2), (2.0, 0.5), (10.0, 0.1), (10.0, 0.9), (1e4, 0.5)])
def test_reduced_scan_matches_vertices(Q, frac):
    Q0 = bm.solve_q0(Q).Q0
    lo, hi = math.log(Q0 / Q), math.log(Q0)
    r = bm.reduced_delta_scan(Q, Q0, lo + frac * (hi - lo), grid_resolution=101)
    assert r.match and "M" in r.vertex_values


def test_delta_general_domain():
    with pytest.raises(bm.DomainError):
        bm.delta_general(2.5, 0.1, 0.1, 2.0)
    with pytest.raises(bm.DomainError):
        bm.delta_general(1.5, 1.0, 0.1, 2.0)
    with pytest.raises(bm.DomainError):
        bm.reduced_delta_scan(2.0, 2.1, 5.0)


def test_delta_general_centre():
    # x+ = 1 with equal distances is a degenerate triple
    assert abs(bm.delta_general(1.0, 0.3, 0.3, 2.0)) < 1e-14


# --- weight-level bound -------------------------------------------------------

def test_dyadic_bound_on_corpus(corpus):
    for w in corpus[:30]:
        a = classical_constant(w, ConstantKind("Ainf"))
        if a <= 1 + 1e-9:
            continue
        r = bm.dyadic_bound_check(w, a)
        assert r.applicable and r.passed


def test_dyadic_bound_not_applicable(w13):
    r = bm.dyadic_bound_check(w13, 1.1)
    assert not r.applicable and r.passed
