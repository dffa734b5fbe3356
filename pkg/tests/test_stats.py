import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps
from scipy.integrate import quad

from fplab.seeding import make_rng
from fplab.stats import (
    ecdf,
    gamma_half_cdf,
    gamma_half_pdf,
    ks_bruteforce,
    ks_discrete_vs_continuous,
    ks_distance,
    least_squares,
    rayleigh_cdf,
    sb_rayleigh_cdf,
    sb_rayleigh_mean,
    sb_rayleigh_tail,
)


def test_ks_matches_bruteforce_exactly():
    x = make_rng(1).random(1000) ** 2
    x[::7] = x[3]  # ties
    cdf = lambda v: np.sqrt(np.clip(v, 0, 1))
    assert ks_distance(x, cdf) == ks_bruteforce(x, lambda v: float(cdf(np.asarray(v))))


def test_ks_matches_scipy():
    x = make_rng(2).standard_normal(1000)
    assert ks_distance(x, sps.norm.cdf) == pytest.approx(sps.kstest(x, "norm").statistic, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=1, max_size=60))
def test_ks_bruteforce_property(vals):
    x = np.asarray(vals, dtype=float) / 20
    assert ks_distance(x, lambda v: np.asarray(v)) == pytest.approx(
        ks_bruteforce(x, float), abs=1e-15)


def test_weighted_ecdf_equals_repetition():
    xs, F = ecdf([3.0, 1.0, 2.0], weights=[1, 2, 1])
    ys, G = ecdf([3.0, 1.0, 1.0, 2.0])
    assert xs.tolist() == ys.tolist() and F == pytest.approx(G)


def test_gamma_half_cdf_quadrature():
    for x in (1e-4, 0.1, 0.5, 1.0, 3.0, 10.0):
        ref = quad(lambda y: math.exp(-y) / math.sqrt(math.pi * y), 0, x, epsabs=1e-13, epsrel=1e-13)[0]
        assert float(gamma_half_cdf(x)) == pytest.approx(ref, abs=1e-10)
    assert float(gamma_half_cdf(2.0)) == pytest.approx(sps.gamma(0.5).cdf(2.0), abs=1e-12)
    assert float(gamma_half_pdf(-1.0)) == 0.0


def test_sb_rayleigh_quadrature():
    for s in (1 / math.sqrt(2), 1.3):
        def dens(y):
            # size-biased Rayleigh: y * rayleigh density / mean
            return y * (y / s ** 2) * math.exp(-y * y / (2 * s * s)) / (s * math.sqrt(math.pi / 2))

        for x in (0.0, 0.2, 0.7, 1.5, 3.0):
            ref = quad(dens, x, np.inf, epsabs=1e-13, epsrel=1e-13)[0]
            assert float(sb_rayleigh_tail(x, s)) == pytest.approx(ref, abs=1e-10)
        mean = quad(lambda y: y * dens(y), 0, np.inf, epsabs=1e-13)[0]
        assert sb_rayleigh_mean(s) == pytest.approx(mean, rel=1e-10)
    assert float(sb_rayleigh_cdf(0.0)) == 0.0


def test_rayleigh_cdf():
    assert float(rayleigh_cdf(1.0, 2.0)) == pytest.approx(sps.rayleigh(scale=2.0).cdf(1.0))


def test_discrete_ks():
    assert ks_discrete_vs_continuous([0.5, 1.0], [0.5, 0.5], lambda x: np.clip(x, 0, 1)) == 0.5


def test_least_squares():
    x = np.arange(10.0)
    f = least_squares(x, 3 + 2 * x)
    assert f.slope == pytest.approx(2) and f.intercept == pytest.approx(3)
    assert f.slope_se == pytest.approx(0, abs=1e-12)
    r = sps.linregress(x, 3 + 2 * x + np.sin(x))
    g = least_squares(x, 3 + 2 * x + np.sin(x))
    assert g.slope == pytest.approx(r.slope) and g.slope_se == pytest.approx(r.stderr)


def test_streams_independent_and_reproducible():
    a = make_rng(5, 0).random(4)
    assert np.array_equal(a, make_rng(5, 0).random(4))
    assert not np.array_equal(a, make_rng(5, 1).random(4))
