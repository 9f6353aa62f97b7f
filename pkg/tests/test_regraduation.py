import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PAIR, ws
from regrad.analysis import RULES, CombinatorRule
from regrad.errors import DomainEscape, NonMonotone, NotAssociative, SingularSystem
from regrad.regraduation import (
    XiTable,
    build_constraints,
    regraduate_combinator,
    sign_family_states,
    solve_constraints,
    verify_additivity,
)
from regrad.theory import Sampler, Theory, sample_batch, states_from_rows

Q = Theory.quadratic()
L = Theory.linear()


def eq_values(cs):
    # each equation as (joint, first, second) amplitude values
    return [tuple(complex(cs.points[i]) for i in row) for row in cs.equations]


def test_quadratic_sign_family_equations():
    for al in (0.5, 1.0, 2.0):
        cs = build_constraints(Q, [ws(al, al), ws(al, -al)], PAIR)
        a2 = al * al
        assert eq_values(cs) == [(4 * a2, a2, a2), (0, a2, a2)]


def test_linear_equation():
    cs = build_constraints(L, [ws(1, 2)], PAIR)
    assert eq_values(cs) == [(3, 1, 2)]


def test_merge_tolerance_identifies_close_points():
    cs = build_constraints(L, [ws(1, 2), ws(1 + 1e-12, 2)], PAIR)
    assert len(cs.points) == 3


def test_quadratic_is_trivial():
    states = sign_family_states(PAIR, [0.5, 1.0, 2.0])
    res = solve_constraints(build_constraints(Q, states, PAIR), anchor=1.0)
    assert res.status == "Trivial"
    assert res.constrained_residual > 1e-3
    assert res.unconstrained_sup <= 1e-8
    # hand derivation: xi(0) = 2 xi(a) forces xi(a) = xi(0)/2 for every a; then xi(4a) = 2 xi(a) = xi(0),
    # and 4*0.25 = 1 closes the chain, so all unknowns are equal and xi(0) = 2 xi(0) = 0
    assert np.all(res.xi.values == 0)


def test_linear_grid_states_found_and_proportional():
    s = Sampler("grid", points=(-2, -1, 0, 1, 2), seed=3)
    states = states_from_rows(PAIR, sample_batch(3, 0, PAIR, s, 50))
    res = solve_constraints(build_constraints(L, states, PAIR), anchor=1.0)
    assert res.found
    pts = res.xi.knots
    nz = np.abs(pts) > 0
    ratio = res.xi.values[nz] / pts[nz].real
    assert np.ptp(ratio) <= 1e-9 and ratio[0] == pytest.approx(1.0)


def test_single_state_is_underdetermined():
    with pytest.raises(SingularSystem):
        solve_constraints(build_constraints(L, [ws(1, 2)], PAIR), anchor=1.0)


def _check_identity(xi, S, pts, tol):
    # brute force: xi(S(x, y)) == xi(x) + xi(y) on every point pair that stays in range
    lo, hi = xi.domain
    worst = 0.0
    for x in pts:
        for y in pts:
            z = S(x, y)
            if lo <= z <= hi:
                worst = max(worst, abs(xi(z) - xi(x) - xi(y)))
    assert worst <= tol
    return worst


def test_sum_gives_linear_xi():
    res = regraduate_combinator(RULES["sum"], (0.5, 2.0), m=301)
    assert res.found and res.additivity_residual <= 1e-8
    t = res.xi.knots
    np.testing.assert_allclose(res.xi.values, t / 2.0, atol=1e-8)


def test_product_gives_log():
    res = regraduate_combinator(RULES["product"], (0.5, 2.0), m=1601)
    assert res.found
    t = res.xi.knots
    np.testing.assert_allclose(res.xi.values, np.log(t) / np.log(2.0), atol=1e-5)
    _check_identity(res.xi, RULES["product"], np.linspace(0.7, 1.4, 15), 1e-5)


def test_sum_plus_product_gives_log1p():
    res = regraduate_combinator(RULES["sum_plus_product"], (0.1, 1.0), m=1601)
    assert res.found
    t = res.xi.knots
    np.testing.assert_allclose(res.xi.values, np.log1p(t) / np.log(2.0), atol=1e-5)
    _check_identity(res.xi, RULES["sum_plus_product"], np.linspace(0.1, 0.4, 10), 1e-5)


def test_non_associative_and_non_monotone():
    with pytest.raises(NotAssociative) as e:
        regraduate_combinator(RULES["sum_plus_square"], (0.0, 1.0), m=101)
    assert e.value.report.max_residual > 0.1
    diff = CombinatorRule("diff", "x-y", lambda x, y: x - y)
    with pytest.raises((NonMonotone, NotAssociative)):
        regraduate_combinator(diff, (0.0, 1.0), m=101)
    with pytest.raises(NonMonotone):
        regraduate_combinator(CombinatorRule("max", "max", np.maximum), (0.0, 1.0), m=101)


def test_xi_table_domain():
    xi = XiTable("interval", np.array([0.0, 1.0]), np.array([0.0, 2.0]))
    assert xi(0.25) == pytest.approx(0.5)
    with pytest.raises(DomainEscape):
        xi(1.5)
    pts = XiTable("points", np.array([1.0, 2.0 + 0j]), np.array([3.0, 4.0]), 1e-10)
    assert pts(2.0) == 4.0
    with pytest.raises(DomainEscape):
        pts(2.5)


def test_verify_additivity_examples():
    st_ = [ws(1, 2), ws(0.5, 0.25)]
    exact = verify_additivity(lambda z: 3 * np.asarray(z), L, st_, PAIR)
    assert exact.max == 0.0
    bad = verify_additivity(lambda z: np.abs(np.asarray(z)) ** 2, L, [ws(1, 2)], PAIR)
    assert bad.max == pytest.approx(4.0)      # 9 - 1 - 4
    assert verify_additivity(lambda z: 0 * np.asarray(z), Q, st_, PAIR).max_relative == 0.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0))
def test_rescaling_xi_rescales_residual(c):
    res = regraduate_combinator(RULES["sum"], (0.5, 2.0), m=301)
    states = [ws(x, y) for x in (0.5, 0.75) for y in (0.5, 1.0)]
    a = verify_additivity(res.xi, L, states, PAIR)
    b = verify_additivity(res.xi.scaled(c), L, states, PAIR)
    assert b.max == pytest.approx(c * a.max, abs=1e-12)
    assert b.max_relative == pytest.approx(a.max_relative, abs=1e-12)


@pytest.mark.parametrize("rule, domain, m", [("sum", (0.5, 2.0), 301),
                                             ("product", (0.5, 2.0), 1601),
                                             ("sum_plus_product", (0.1, 1.0), 1601)])
def test_found_xi_is_monotone_and_holds_on_fresh_points(rule, domain, m):
    S = RULES[rule]
    res = regraduate_combinator(S, domain, m=m)
    d = np.diff(res.xi.values)
    assert np.all(d > 0) or np.all(d < 0)
    rng = np.random.default_rng(0)
    lo, hi = domain
    x = rng.uniform(lo, hi, 2000)
    y = rng.uniform(lo, hi, 2000)
    z = np.asarray(S(x, y))
    keep = (z >= lo) & (z <= hi)
    r = np.abs(res.xi(z[keep]) - res.xi(x[keep]) - res.xi(y[keep]))
    # interpolation between knots adds O(h^2) error; allow 10x the feasibility tolerance
    assert keep.sum() > 100 and r.max() <= 10 * 1e-6
