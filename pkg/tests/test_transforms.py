import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from fplab.errors import EmptySpectrum, OutOfDomain, OutOfRange, SpectrumError
from fplab.spectrum import borel_spectrum, laplace_V, make_spectrum, monodisperse
from fplab.transforms import (
    adaptive_simpson,
    build_bundle,
    core_E,
    core_E_derivative,
    eval_F0_G0,
    invert_w_to_x,
    lambert_w,
    phi_window_bounds,
)

from conftest import finite_spectra


def x_by_bisection(spec, w):
    # bracketed root of sum k v e^{-kx} = 1/w, the textbook recipe
    k, v = spec.ks.astype(float), spec.vs
    g = lambda x: np.sum(k * v * np.exp(-k * x)) - 1.0 / w
    lo, hi = -1.0, 1.0
    while g(lo) < 0:
        lo *= 2
    while g(hi) > 0:
        hi *= 2
    return optimize.brentq(g, lo, hi, xtol=1e-15, rtol=1e-15)


class TestBundle:
    def test_gel_times(self, mono, poly):
        assert mono.gel_time == 1.0
        assert build_bundle(monodisperse(2.0)).gel_time == 0.5
        assert poly.gel_time == 1.0

    def test_empty(self):
        with pytest.raises(EmptySpectrum):
            build_bundle(make_spectrum([]))

    def test_truncated_rejected(self):
        with pytest.raises(SpectrumError):
            build_bundle(borel_spectrum(1.0, 10))


class TestInvert:
    def test_examples(self, mono):
        assert invert_w_to_x(mono, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert invert_w_to_x(mono, math.e) == pytest.approx(1.0, rel=1e-14)
        assert invert_w_to_x(mono, 0.5) == pytest.approx(-math.log(2), rel=1e-14)

    @pytest.mark.parametrize("w", [0.0, -1.0, float("inf")])
    def test_out_of_range(self, mono, w):
        with pytest.raises(OutOfRange):
            invert_w_to_x(mono, w)

    @settings(max_examples=50)
    @given(finite_spectra(), st.floats(0.2, 20.0))
    def test_matches_bisection(self, s, scale):
        b = build_bundle(s)
        w = scale * b.gel_time
        assert invert_w_to_x(b, w) == pytest.approx(x_by_bisection(s, w), rel=1e-12, abs=1e-13)

    @given(finite_spectra())
    def test_gel_point(self, s):
        b = build_bundle(s)
        assert invert_w_to_x(b, b.gel_time) == pytest.approx(0.0, abs=1e-13)


class TestCore:
    def test_mono_examples(self, mono):
        assert core_E(mono, 2.0) == pytest.approx(0.25, rel=1e-14)
        assert core_E(mono, 1.0) == pytest.approx(1.0, rel=1e-14)

    def test_mono_closed_form(self, mono):
        ws = np.linspace(1, 10, 91)
        np.testing.assert_allclose(mono.core_arrays(ws)[1], 1 / ws ** 2, rtol=1e-10)

    def test_poly_bound(self, poly):
        e = core_E(poly, 2.0)
        assert 1 / 1.5 * 0.25 <= e <= 0.25
        x = x_by_bisection(poly.spec0, 2.0)
        s1 = 0.5 * math.exp(-x) + 0.5 * math.exp(-2 * x)
        s2 = 0.5 * math.exp(-x) + 1.0 * math.exp(-2 * x)
        assert e == pytest.approx(s1 ** 3 / s2, rel=1e-12)

    def test_F0_G0_mono(self, mono):
        assert eval_F0_G0(mono, 1.0) == pytest.approx((0.0, 0.0), abs=1e-15)
        F, G = eval_F0_G0(mono, 2.0)
        assert F == pytest.approx(0.5, rel=1e-14)
        assert G == pytest.approx(1 - math.log(2), rel=1e-13)
        quad = integrate.quad(lambda y: (2 - y) / y ** 2, 1, 2, epsabs=1e-14)[0]
        assert G == pytest.approx(quad, rel=1e-12)
        x = invert_w_to_x(mono, 2.0)
        assert F == pytest.approx(mono.m0_0 - laplace_V(mono.spec0, x), rel=1e-14)

    @settings(max_examples=40)
    @given(finite_spectra(), st.floats(1.0, 8.0))
    def test_e_bounds(self, s, scale):
        b = build_bundle(s)
        w = scale * b.gel_time
        val = w * w * core_E(b, w)
        assert b.m1_0 / b.m2_0 * (1 - 1e-12) <= val <= 1 + 1e-12

    @settings(max_examples=30)
    @given(finite_spectra(), st.floats(1.0, 6.0))
    def test_lipschitz(self, s, scale):
        b = build_bundle(s)
        w, h = scale * b.gel_time, 1e-4
        assert abs(core_E(b, w + h) - core_E(b, w)) / h <= b.lipschitz_D

    @settings(max_examples=30)
    @given(finite_spectra(), st.floats(1.05, 6.0))
    def test_derivative_chain(self, s, scale):
        b = build_bundle(s)
        w, h = scale * b.gel_time, 1e-5 * b.gel_time
        Fp, Gp = eval_F0_G0(b, w + h)
        Fm, Gm = eval_F0_G0(b, w - h)
        assert (Fp - Fm) / (2 * h) == pytest.approx(core_E(b, w), rel=1e-6)
        assert (Gp - Gm) / (2 * h) == pytest.approx(eval_F0_G0(b, w)[0], rel=1e-6, abs=1e-10)
        dE = (core_E(b, w + h) - core_E(b, w - h)) / (2 * h)
        assert core_E_derivative(b, w) == pytest.approx(dE, rel=1e-5, abs=1e-9)

    def test_G_convex_F_increasing(self, poly):
        ws = np.linspace(1, 5, 200)
        _, _, F, G = poly.core_arrays(ws)
        assert np.all(np.diff(F) > 0)
        assert np.all(np.diff(G, 2) > 0)


class TestWindowBounds:
    def test_mono(self, mono):
        b = phi_window_bounds(mono, 1.0, 2.0)
        assert (b.phi_inf, b.phi_sup) == pytest.approx((0.25, 1.0), rel=1e-12)

    def test_degenerate(self, poly):
        b = phi_window_bounds(poly, 1.7, 1.7)
        assert b.phi_inf == b.phi_sup == core_E(poly, 1.7)

    def test_poly(self, poly):
        b = phi_window_bounds(poly, 1.0, 1.5)
        assert poly.m1_0 / poly.m2_0 / 2.25 <= b.phi_inf <= b.phi_sup <= 1.0

    def test_out_of_range(self, mono):
        with pytest.raises(OutOfRange):
            phi_window_bounds(mono, 0.5, 1.0)
        with pytest.raises(OutOfRange):
            phi_window_bounds(mono, 2.0, 1.0)

    @settings(max_examples=25, deadline=None)
    @given(finite_spectra(max_size=6), st.floats(1.0, 3.0), st.floats(0.0, 3.0))
    def test_against_dense_scan(self, s, a, width):
        b = build_bundle(s)
        w1, w2 = a * b.gel_time, (a + width) * b.gel_time
        r = phi_window_bounds(b, w1, w2)
        dense = b.core_arrays(np.linspace(w1, w2, 20001))[1]
        assert r.phi_inf <= dense.min() + 1e-15 and r.phi_sup >= dense.max() - 1e-15
        assert r.phi_inf >= dense.min() - 1e-9 and r.phi_sup <= dense.max() + 1e-9
        assert r.phi_sup - r.phi_inf <= b.lipschitz_D * (w2 - w1) + 1e-15


class TestLambert:
    def test_examples(self):
        assert lambert_w(0.0) == 0.0
        assert lambert_w(math.e) == pytest.approx(1.0, rel=1e-15)
        assert lambert_w(-math.exp(-1)) == -1.0
        assert lambert_w(-math.exp(-1), "lower") == -1.0

    def test_domain(self):
        with pytest.raises(OutOfDomain):
            lambert_w(-0.5)
        with pytest.raises(OutOfDomain):
            lambert_w(0.1, "lower")

    @pytest.mark.parametrize("branch, lo, hi", [("principal", -math.exp(-1), 1e6),
                                                ("lower", -math.exp(-1), -1e-12)])
    def test_identity_grid(self, branch, lo, hi):
        zs = np.concatenate([np.linspace(lo, min(hi, 10), 60), np.geomspace(10, hi, 40)]) \
            if branch == "principal" else -np.geomspace(-lo, -hi, 100)
        for z in zs:
            if branch == "lower" and z >= 0:
                continue
            w = lambert_w(z, branch)
            assert w * math.exp(w) == pytest.approx(z, rel=1e-12, abs=1e-300)
            ref = scipy.special.lambertw(z, 0 if branch == "principal" else -1).real
            if np.isfinite(ref):  # scipy returns nan at the rounded branch point
                assert w == pytest.approx(ref, rel=1e-7, abs=1e-9)

    @pytest.mark.parametrize("x", np.linspace(0.1, 2.0, 12))
    def test_borel_bridge(self, x):
        v = laplace_V(borel_spectrum(1.0, 100_000), x)
        assert -lambert_w(-math.exp(-(x + 1))) == pytest.approx(v, abs=1e-4)


class TestSimpson:
    def test_polynomial_and_smooth(self):
        assert adaptive_simpson(lambda x: x ** 3, 0, 2) == pytest.approx(4.0, rel=1e-14)
        assert adaptive_simpson(math.sin, 0, math.pi) == pytest.approx(2.0, abs=1e-10)
        assert adaptive_simpson(math.exp, 1, 1) == 0.0
