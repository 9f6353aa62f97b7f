import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ws
from regrad.errors import BadDistribution, TableMiss, TooManySlits, UnknownSlit
from regrad.setup_algebra import Configuration
from regrad.theory import (
    Sampler,
    Theory,
    WaveState,
    detector_amplitude,
    full_assignment,
    phi,
    phi_batch,
    project_closed,
    sample_batch,
    sample_wavestate,
)

A = Configuration.of(["a"])
B = Configuration.of(["a'"])
AB = Configuration.of(["a", "a'"])
Q, L = Theory.quadratic(), Theory.linear()

finite = st.floats(-10, 10, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def test_project_closed():
    s = ws(2 + 1j, 3 - 1j)
    assert project_closed(s, A).amps == (2 + 1j, 0)
    assert project_closed(s, AB) == s
    assert project_closed(project_closed(s, B), B) == project_closed(s, B)
    with pytest.raises(UnknownSlit):
        project_closed(s, Configuration.of(["z"]))


def test_detector_amplitude_examples():
    assert detector_amplitude(Q, ws(1, 1)) == 4
    assert detector_amplitude(Q, ws(1, -1)) == 0
    assert detector_amplitude(L, ws(1 + 2j, -3j)) == 1 - 1j


@given(cplx, cplx)
def test_quadratic_phi_reproduces_the_assignment(al, al1):
    s = ws(al, al1)
    assert phi(Q, s, A) == al * al
    assert phi(Q, s, B) == al1 * al1
    assert phi(Q, s, AB) == (al + al1) * (al + al1)
    assert phi(L, s, AB) == al + al1


@given(cplx, cplx)
def test_power_aliases(al, al1):
    s = ws(al, al1)
    for c in (A, B, AB):
        assert phi(Theory.power(1), s, c) == phi(L, s, c)
        assert phi(Theory.power(2), s, c) == phi(Q, s, c)


@given(st.lists(cplx, min_size=2, max_size=6), st.data())
def test_linear_additivity_on_disjoint_configs(amps, data):
    slits = [f"s{i}" for i in range(len(amps))]
    s = WaveState(tuple(slits), tuple(amps))
    side = data.draw(st.lists(st.booleans(), min_size=len(amps), max_size=len(amps)))
    left = [x for x, b in zip(slits, side) if b]
    right = [x for x, b in zip(slits, side) if not b]
    if not left or not right:
        return
    whole = phi(L, s, Configuration.of(slits))
    parts = phi(L, s, Configuration.of(left)) + phi(L, s, Configuration.of(right))
    assert abs(whole - parts) <= 1e-12 * max(1.0, sum(abs(x) for x in amps))


@given(cplx, cplx, cplx, st.sampled_from(["linear", "quadratic", "p3"]))
def test_closed_slit_coefficient_is_irrelevant(al, al1, other, kind):
    th = Theory.power(3) if kind == "p3" else Theory(kind, p=2 if kind == "quadratic" else 1)
    assert phi(th, ws(al, al1), A) == phi(th, ws(al, other), A)


def test_full_assignment():
    vals = full_assignment(Q, ws(2, 3))
    assert vals == {A: 4, B: 9, AB: 25}
    s = WaveState(("x", "y", "z"), (1, 2, 4))
    lin = full_assignment(L, s)
    assert len(lin) == 7
    assert all(v == sum(s.coeff(k) for k in c) for c, v in lin.items())
    big = WaveState(tuple(f"s{i}" for i in range(13)), (1,) * 13)
    with pytest.raises(TooManySlits):
        full_assignment(L, big)


def test_user_table_lookup_and_miss():
    th = Theory.user_table([(["a"], [2], 2), (["a'"], [3], 3), (["a", "a'"], [2, 3], 11)])
    s = ws(2, 3)
    assert (phi(th, s, A), phi(th, s, B), phi(th, s, AB)) == (2, 3, 11)
    with pytest.raises(TableMiss):
        phi(th, ws(2, 4), AB)


def test_phi_batch_matches_scalar():
    rows = sample_batch(3, 0, ("a", "a'"), Sampler("complex-gaussian"), 200)
    for th in (L, Q, Theory.power(5)):
        for c in (A, B, AB):
            batch = phi_batch(th, ("a", "a'"), rows, c)
            scalar = [phi(th, WaveState(("a", "a'"), tuple(r)), c) for r in rows]
            np.testing.assert_allclose(batch, scalar, rtol=1e-14, atol=0)


def test_sampling_is_deterministic_and_partition_free():
    d = Sampler("complex-gaussian", sigma=2.0)
    assert sample_wavestate(7, ("a", "b"), d) == sample_wavestate(7, ("a", "b"), d)
    full = sample_batch(5, 1, ("a", "b"), d, 40)
    parts = np.vstack([sample_batch(5, 1, ("a", "b"), d, 15), sample_batch(5, 1, ("a", "b"), d, 25, start=15)])
    assert np.array_equal(full, parts)
    assert sample_wavestate((5, 1, 17), ("a", "b"), d).amps == tuple(full[17])


def test_real_uniform_range():
    rows = sample_batch(1, 0, ("a", "b", "c"), Sampler("real-uniform", lo=-1, hi=1), 500)
    assert np.all(rows.imag == 0)
    assert np.all((rows.real >= -1) & (rows.real <= 1))


def test_complex_gaussian_mean_modulus():
    # |c| is Rayleigh with scale sigma/sqrt(2): mean sigma*sqrt(pi)/2, variance (4-pi)/4 sigma^2
    sigma, n = 1.5, 10_000
    rows = sample_batch(2024, 0, ("a",), Sampler("complex-gaussian", sigma=sigma), n)
    mean = np.abs(rows[:, 0]).mean()
    expected = sigma * math.sqrt(math.pi) / 2
    sd = sigma * math.sqrt((4 - math.pi) / 4)
    assert abs(mean - expected) <= 5 * sd / math.sqrt(n)


def test_grid_sampler_draws_from_points():
    rows = sample_batch(0, 0, ("a", "b"), Sampler("grid", points=(1, -1, 2j)), 300)
    assert set(rows.ravel()) <= {1, -1, 2j}


@pytest.mark.parametrize("kw", [dict(kind="cauchy"), dict(kind="grid"), dict(kind="real-uniform", lo=1, hi=0),
                                dict(kind="complex-gaussian", sigma=0)])
def test_bad_distribution(kw):
    with pytest.raises(BadDistribution):
        Sampler(**kw)
    with pytest.raises(BadDistribution):
        sample_wavestate(0, ("a",), {"kind": "normal"})
