import json
import math
import os

import numpy as np
import pytest

from fplab.errors import InsufficientEvents, OutOfRange, PreGelTime
from fplab.experiments import (
    ExperimentReport,
    beta_alpha_scan,
    beta_of_alpha,
    critical_integral_quadrature,
    critical_spectrum,
    extremum_check,
    gamma_limit_check,
    rayleigh_limit_check,
    sim_vs_solver_check,
    tail_and_selfsimilarity_check,
)
from fplab.gillespie import Regime
from fplab.spectrum import borel_spectrum, make_spectrum, monodisperse
from fplab.stats import sb_rayleigh_mean
from fplab.transforms import build_bundle


class TestReport:
    def make(self, checks, exploratory=False):
        return ExperimentReport("demo", {"a": 1}, {"x": 0.5, "n": 3}, {"x": 1.0}, checks,
                                seeds=[1], samples={"s": {"i": [1, 2], "v": [0.25, 0.5]}},
                                exploratory=exploratory)

    def test_verdict(self):
        assert self.make({"a": True, "b": True}).verdict is True
        assert self.make({"a": True, "b": False}).verdict is False
        assert self.make({"a": False}, exploratory=True).verdict is None
        assert self.make({"a": False}).summary().startswith("[FAIL] demo")

    def test_write(self, tmp_path):
        r = self.make({"a": True})
        files = r.write(str(tmp_path))
        data = json.loads((tmp_path / "demo.json").read_text())
        for key in ("name", "params", "stats", "verdict", "seeds", "artifact_files"):
            assert key in data
        assert data["verdict"] is True and data["artifact_files"] == ["demo_s.csv"]
        assert (tmp_path / "demo_s.csv").read_text() == "i,v\n1,0.25\n2,0.5\n"
        assert len(files) == 2 and all(os.path.exists(f) for f in files)


def test_beta_of_alpha():
    assert beta_of_alpha(1 / 3) == pytest.approx(2 / 3)
    assert beta_of_alpha(0.2) == pytest.approx(0.4)
    assert beta_of_alpha(0.6) == pytest.approx(0.8)


def test_critical_spectrum_matches_solver(mono, poly):
    b2 = build_bundle(monodisperse(2.0))
    # mass 2: v_k(t) = 2 Borel_k(2t)/(2t) = Borel_k / t
    np.testing.assert_allclose(critical_spectrum(b2, 2.0, 30).vs, borel_spectrum(2.0, 30).vs, rtol=1e-14)
    s = critical_spectrum(poly, 3.0, 30)
    assert s.total_mass == pytest.approx(0.75 - poly.F0(3.0), rel=1e-6)
    with pytest.raises(PreGelTime):
        critical_spectrum(mono, 0.5, 10)


class TestGamma:
    def test_trend_and_threshold(self, mono):
        r = gamma_limit_check(mono, 2.0, [0.1, 0.01, 0.001])
        assert r.checks["ks_decreasing"] and r.checks["final_ks_below_threshold"]
        assert r.verdict
        # nearly all the first moment is captured by the truncation
        assert min(r.samples["per_lambda"]["captured_m1"]) > 0.999

    def test_single_lambda_has_no_trend(self, mono):
        r = gamma_limit_check(mono, 2.0, [0.01])
        assert "ks_decreasing" not in r.checks

    def test_rejects(self, mono):
        with pytest.raises(OutOfRange):
            gamma_limit_check(mono, 0.5, [0.1])
        with pytest.raises(OutOfRange):
            gamma_limit_check(mono, 2.0, [0.0])


class TestRayleigh:
    def test_limit_and_mean(self, mono):
        r = rayleigh_limit_check(mono, 2.0, 1e4, 760, eps=0.1, seed=3)
        assert r.stats["n_events"] >= 2000
        assert r.stats["ks_size_biased"] <= 0.08
        assert r.stats["mass_weighted_mean"] == pytest.approx(sb_rayleigh_mean(), rel=0.05)
        # burn count per window follows the Rayleigh-gap prediction
        assert r.stats["burns_per_window_per_replica"] == pytest.approx(
            r.stats["predicted_burns_per_window"], rel=0.1)

    def test_small_lambda_is_worse(self, mono):
        big = rayleigh_limit_check(mono, 2.0, 1e4, 760, eps=0.1, seed=3)
        small = rayleigh_limit_check(mono, 2.0, 1e2, 2500, seed=4, min_events=1500)
        assert small.stats["ks_size_biased"] > big.stats["ks_size_biased"]

    def test_reproducible(self, mono):
        a = rayleigh_limit_check(mono, 2.0, 1e3, 40, seed=9, min_events=1)
        b = rayleigh_limit_check(mono, 2.0, 1e3, 40, seed=9, min_events=1)
        assert a.stats == b.stats

    def test_insufficient(self, mono):
        with pytest.raises(InsufficientEvents):
            rayleigh_limit_check(mono, 2.0, 1e4, 2, eps=0.1)


class TestExtremum:
    def test_random_controls(self, mono):
        r = extremum_check(mono, 3.0, n_random_controls=25, with_sharpness=False, seed=1)
        assert r.verdict, r.stats
        assert r.stats["closed_form_vs_quadrature"] <= 1e-8

    def test_sharpness(self, mono):
        r = extremum_check(mono, 2.0, n_random_controls=0, with_sharpness=True, eps=0.5)
        assert r.checks["sharpness_strict"]
        assert r.stats["sharp_margin"] > 0

    def test_integral_identity_poly(self, poly):
        assert critical_integral_quadrature(poly, 4.0) == pytest.approx(poly.G0(4.0), abs=1e-8)
        assert critical_integral_quadrature(poly, 0.1) == 0.0


class TestTail:
    def test_mono_tail(self, mono):
        r = tail_and_selfsimilarity_check(mono, [1.0], K_big=10_000)
        assert r.samples["tail"]["statistic"][0] == pytest.approx(math.sqrt(2 / math.pi), rel=0.02)
        assert r.verdict

    def test_poly_selfsimilarity(self, poly):
        r = tail_and_selfsimilarity_check(poly, [50.0], K_big=1000, tail_times=[])
        assert r.stats["selfsim_dev_m0"] <= 0.02 and r.stats["selfsim_max_dev_v"] <= 0.02

    def test_pregel_rejected(self, mono):
        with pytest.raises(PreGelTime):
            tail_and_selfsimilarity_check(mono, [0.5], K_big=100)


def test_scan_is_exploratory():
    r = beta_alpha_scan(monodisperse(), [0.2, 0.6], [1000, 2000, 4000], 2.0, 3, seed=1)
    assert r.verdict is None and r.exploratory
    for a in (0.2, 0.6):
        assert np.isfinite(r.stats[f"alpha={a:g}:slope_cmax"])
        assert np.isfinite(r.stats[f"alpha={a:g}:slope_frozen_median"])
    assert len(r.samples["frozen_cdf_rescaled"]["F"]) > 0
    with pytest.raises(OutOfRange):
        beta_alpha_scan(monodisperse(), [0.2], [100, 200], 2.0, 1)


class TestSimVsSolver:
    def test_subcritical(self):
        r = sim_vs_solver_check(monodisperse(), 100_000, Regime(0.0, ((0.0, 0.5),)), 3.0, 5,
                                K_obs=10, seed=2)
        assert r.stats["sup_Phi"] <= 0.01 and r.stats["sup_w"] <= 0.01

    def test_small_N_is_looser(self):
        reg = Regime(0.0, ((0.0, 0.5),))
        small = sim_vs_solver_check(monodisperse(), 100, reg, 3.0, 5, seed=2)
        big = sim_vs_solver_check(monodisperse(), 100_000, reg, 3.0, 5, seed=2)
        assert small.stats["sup_w"] > big.stats["sup_w"]

    def test_alternating_runs(self):
        r = sim_vs_solver_check(make_spectrum([(1, 1.0)]), 5000, Regime(1.0, ((0.0, 1.0),)), 2.0, 4,
                                K_obs=3, seed=5, n_times=5, solver_replicas=4)
        assert set(r.checks) == {"w_agreement", "Phi_agreement"}
