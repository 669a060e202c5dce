import json

import numpy as np
import pytest

from garchx.diagnostics import (
    Verdict,
    check_moment,
    check_stationarity,
    forgetting_rate,
    tgarch_ergodicity_certificate,
)
from garchx.model import ModelSpec
from garchx.simulate import SimConfig, simulate_path
from garchx.stochastic import ExogProcess, InnovationDist, SeedSpec

from oracles import central_jacobian, standard_Ec, standard_Ec2, tgarch_G

N_MC = 1_000_000


def standard(alpha1, beta1, omega=0.1, lam=0.05):
    spec = ModelSpec("standard")
    return spec, spec.theta(dict(omega=omega, alpha1=alpha1, beta1=beta1, **{"lambda": lam}))


class TestStationarity:
    def test_satisfied(self):
        spec, th = standard(0.1, 0.8)
        r = check_stationarity(spec, th, 1.0, n_mc=N_MC)
        assert r.verdict is Verdict.SATISFIED
        assert r.est_Ec.closed_form == pytest.approx(standard_Ec(0.1, 0.8))

    def test_violated(self):
        spec, th = standard(0.3, 0.8)
        r = check_stationarity(spec, th, 1.0, n_mc=N_MC)
        assert r.verdict is Verdict.VIOLATED
        assert r.est_Ec.closed_form == pytest.approx(1.1)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
    def test_degenerate_c_zero(self, alpha):
        spec = ModelSpec("standard")
        th = spec.theta(dict(omega=0.2))
        r = check_stationarity(spec, th, alpha, n_mc=10_000)
        assert r.est_Ec.mean == 0.0
        assert r.verdict is Verdict.SATISFIED

    @pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5])
    def test_alpha_range(self, alpha):
        spec, th = standard(0.1, 0.8)
        with pytest.raises(ValueError):
            check_stationarity(spec, th, alpha, n_mc=10_000)

    def test_closed_forms_within_4se(self):
        spec, th = standard(0.1, 0.8)
        for seed in range(3):
            r = check_stationarity(spec, th, 1.0, n_mc=N_MC, seed=SeedSpec(seed, 0))
            assert abs(r.est_Ec.mean - 0.9) < 4 * r.est_Ec.se
            assert abs(r.est_Eeps.mean - 1.0) < 4 * r.est_Eeps.se
            m = check_moment(spec, th, 2, n_mc=N_MC, seed=SeedSpec(seed, 0))
            assert abs(m.est_Ec.mean - standard_Ec2(0.1, 0.8)) < 4 * m.est_Ec.se

    def test_student_t_closed_form(self):
        spec, th = standard(0.1, 0.8)
        dist = InnovationDist("student_t", 10.0)
        m = check_moment(spec, th, 2, dist=dist, n_mc=N_MC)
        assert m.est_Ec.closed_form == pytest.approx(standard_Ec2(0.1, 0.8, dist.kurtosis))
        assert abs(m.est_Ec.mean - m.est_Ec.closed_form) < 4 * m.est_Ec.se

    def test_lyapunov_monotone(self):
        # (E c^a)^(1/a) is nondecreasing in a; E c^a itself need not be
        spec, th = standard(0.1, 0.8)
        alphas = [0.25, 0.5, 0.75, 1.0]
        reps = [check_stationarity(spec, th, a, n_mc=N_MC, seed=SeedSpec(4, 0)) for a in alphas]
        norms = [r.est_Ec.mean ** (1 / a) for r, a in zip(reps, alphas)]
        ses = [r.est_Ec.se * r.est_Ec.mean ** (1 / a - 1) / a for r, a in zip(reps, alphas)]
        for i in range(3):
            assert norms[i + 1] >= norms[i] - 2 * np.hypot(ses[i], ses[i + 1])
        assert reps[0].est_Ec.mean > reps[-1].est_Ec.mean

    def test_other_families_use_mc(self):
        spec = ModelSpec("gjr")
        th = spec.theta(dict(omega=0.04, alpha1=0.1, beta1=0.8, gamma1=0.06, **{"lambda": 0.02}))
        r = check_stationarity(spec, th, 1.0, n_mc=N_MC)
        assert r.est_Ec.closed_form is None
        # E c = beta + alpha + gamma / 2 for a symmetric law
        assert abs(r.est_Ec.mean - 0.93) < 4 * r.est_Ec.se
        assert r.verdict is Verdict.SATISFIED

    def test_cauchy_covariate(self):
        spec, th = standard(0.1, 0.8)
        cauchy = ExogProcess("iid_cauchy")
        half = check_stationarity(spec, th, 0.5, exog=cauchy, n_mc=N_MC)
        assert half.est_Eu.finite and half.verdict is Verdict.SATISFIED
        # E sqrt|x| = sqrt(2) for a standard Cauchy
        assert half.est_Eu.mean == pytest.approx(np.sqrt(0.05) * np.sqrt(2), rel=0.02)
        full = check_stationarity(spec, th, 1.0, exog=cauchy, n_mc=N_MC)
        assert not full.est_Eu.finite
        assert full.verdict is Verdict.INCONCLUSIVE
        assert any("infinite" in n for n in full.notes)

    def test_report_serialization(self):
        spec, th = standard(0.1, 0.8)
        r = check_stationarity(spec, th, 0.5, n_mc=10_000)
        d = json.loads(json.dumps(r.to_dict()))
        assert d["verdict"] == "satisfied"
        assert "verdict: satisfied" in r.table()


class TestMoment:
    def test_examples(self):
        spec, th = standard(0.1, 0.8)
        r = check_moment(spec, th, 2, n_mc=N_MC)
        assert r.est_Ec.closed_form == pytest.approx(0.83)
        assert r.verdict is Verdict.SATISFIED
        spec, th = standard(0.5, 0.5)
        r = check_moment(spec, th, 2, n_mc=N_MC)
        assert r.est_Ec.closed_form == pytest.approx(1.5)
        assert r.verdict is Verdict.VIOLATED

    def test_m1_matches_alpha1(self):
        for a, b in [(0.1, 0.8), (0.3, 0.8), (0.05, 0.9)]:
            spec, th = standard(a, b)
            assert check_moment(spec, th, 1, n_mc=10_000).verdict == check_stationarity(spec, th, 1.0, n_mc=10_000).verdict

    def test_m_validation(self):
        spec, th = standard(0.1, 0.8)
        with pytest.raises(ValueError):
            check_moment(spec, th, 0)
        with pytest.raises(ValueError):
            check_moment(spec, th, 1.5)

    def test_fourth_moment_behaviour(self):
        # E c^2 < 1: the sample fourth moment of R settles; E c^2 > 1: it keeps
        # growing.  Per-decade ratios of a heavy-tailed running mean are very
        # noisy, so the median over independent long paths is used.
        def decade_ratios(a, b, seed):
            spec, th = standard(a, b, lam=0.0)
            p = simulate_path(spec, th, SimConfig(T=1_010_000, seed=SeedSpec(31, seed)))
            r4 = p.returns[10_000:] ** 4
            m = [r4[:n].mean() for n in (10**4, 10**5, 10**6)]
            return m[1] / m[0], m[2] / m[1]

        stable = np.median([decade_ratios(0.1, 0.8, k) for k in range(7)], axis=0)
        assert np.all(np.abs(stable - 1) < 0.10)
        growing = np.median([decade_ratios(0.5, 0.5, k) for k in range(7)], axis=0)
        assert np.all(growing > 1.5)


class TestForgetting:
    def test_rate(self):
        spec, th = standard(0.1, 0.8)
        f = forgetting_rate(spec, th, 1.0, n_reps=2000, T=60)
        assert 0.85 < f.rho_hat < 0.95
        assert f.r2 > 0.99
        assert f.slope < 0 and not f.degenerate

    def test_degenerate(self):
        spec = ModelSpec("standard")
        th = spec.theta(dict(omega=0.1, **{"lambda": 0.1}))
        f = forgetting_rate(spec, th, 1.0, n_reps=50, T=20)
        assert f.degenerate and f.rho_hat == 0.0
        assert np.all(f.mean_gap == 0.0)

    def test_independent_of_gap_size(self):
        spec, th = standard(0.1, 0.8)
        a = forgetting_rate(spec, th, 1.0, n_reps=500, T=40, start_ratio=50.0)
        b = forgetting_rate(spec, th, 1.0, n_reps=500, T=40, start_ratio=500.0)
        assert abs(a.slope - b.slope) < 2 * np.hypot(a.slope_se, b.slope_se) + 1e-12

    def test_fractional_alpha_bound(self):
        spec, th = standard(0.1, 0.8)
        f = forgetting_rate(spec, th, 0.5, n_reps=1000, T=40)
        ec = check_stationarity(spec, th, 0.5, n_mc=N_MC).est_Ec.mean
        assert f.slope < 0 and f.rho_hat <= ec + 0.05


class TestCertificate:
    @pytest.fixture
    def theta(self):
        spec = ModelSpec("tgarch")
        return spec.theta(dict(omega=0.1, alpha1_plus=0.1, alpha1_minus=0.05, beta1=0.8, **{"lambda": 0.05}))

    def test_fixed_point(self, theta):
        cert = tgarch_ergodicity_certificate(theta, 0.0, 0.5, n_mc=20_000)
        assert cert.y_star[0] == pytest.approx(1.5, abs=1e-12)
        assert cert.y_star[1] == 1.0
        p = theta.as_dict()
        np.testing.assert_allclose(tgarch_G(p, 0.0, cert.y_star, cert.a_star), cert.y_star, atol=1e-10)

    @pytest.mark.parametrize("shift", [0.0, 0.7, -0.5])
    def test_derivatives_match_finite_differences(self, theta, shift):
        cert = tgarch_ergodicity_certificate(theta, shift, 0.5, n_mc=20_000)
        p = theta.as_dict()
        phi = central_jacobian(lambda y: tgarch_G(p, shift, y, cert.a_star), cert.y_star)
        tht = central_jacobian(lambda a: tgarch_G(p, shift, cert.y_star, a), cert.a_star)
        np.testing.assert_allclose(cert.Phi, phi, atol=1e-6)
        np.testing.assert_allclose(cert.Theta_mat, tht, atol=1e-6)
        assert cert.rank_ok
        assert cert.drift_ratio < 1

    def test_lambda_zero(self):
        spec = ModelSpec("tgarch")
        th = spec.theta(dict(omega=0.1, alpha1_plus=0.1, alpha1_minus=0.05, beta1=0.8))
        cert = tgarch_ergodicity_certificate(th, 0.0, 0.5, n_mc=20_000)
        np.testing.assert_array_equal(cert.Phi, [[0.9, 0.0], [0.0, 0.0]])
        assert cert.rank_ok

    def test_errors(self, theta):
        spec = ModelSpec("tgarch")
        bad = spec.theta(dict(omega=0.1, alpha1_plus=0.3, beta1=0.8))
        with pytest.raises(ValueError, match="fixed point"):
            tgarch_ergodicity_certificate(bad, 0.0, 0.5)
        with pytest.raises(ValueError):
            tgarch_ergodicity_certificate(theta, -1.0, 0.5)
        with pytest.raises(ValueError):
            tgarch_ergodicity_certificate(theta, 0.0, -0.1)
        gspec = ModelSpec("gjr")
        with pytest.raises(ValueError):
            tgarch_ergodicity_certificate(gspec.theta(), 0.0, 0.5)

    def test_serialization(self, theta):
        cert = tgarch_ergodicity_certificate(theta, 0.0, 0.5, n_mc=10_000)
        d = json.loads(json.dumps(cert.to_dict()))
        assert d["rank_ok"] is True and d["drift_exponent"] == 0.5
