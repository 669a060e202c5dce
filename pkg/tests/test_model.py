import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from garchx.model import (
    ModelSpec,
    UTransform,
    c_eval,
    causal_volatility,
    g_eval,
    u_eval,
    vol_step,
)

from oracles import c_ref, u1_ref

GJR_71 = dict(omega=0.04, alpha1=0.1, beta1=0.8, gamma1=0.06, **{"lambda": 0.02})


def make(family, delta=None, **vals):
    spec = ModelSpec(family, delta=delta)
    return spec, spec.theta(vals)


def random_theta(spec, rng):
    v = {"omega": rng.uniform(0.01, 1.0), "lambda": rng.uniform(0, 0.5), "beta1": rng.uniform(0, 0.9)}
    for n in spec.param_names:
        if n.startswith("alpha") or n == "gamma1":
            v[n] = rng.uniform(0.001, 0.3)
        elif n == "eta1":
            v[n] = rng.uniform(-0.9, 0.9)
        elif n == "eta2":
            v[n] = rng.uniform(-1, 1)
    return spec.theta(v)


ALL_SPECS = [
    ModelSpec("standard"),
    ModelSpec("gjr"),
    ModelSpec("tgarch"),
    ModelSpec("aparch", delta=1.5),
    ModelSpec("fgarch", delta=1.5),
    ModelSpec("fgarch", delta=1.2, fgarch_gamma=2.0),
]


class TestModelSpec:
    def test_layouts(self):
        assert ModelSpec("standard").param_names == ("omega", "lambda", "alpha1", "beta1")
        assert ModelSpec("gjr").param_names == ("omega", "lambda", "alpha1", "beta1", "gamma1")
        assert ModelSpec("tgarch").param_names == ("omega", "lambda", "alpha1_plus", "alpha1_minus", "beta1")
        assert ModelSpec("aparch", delta=1.3).n_params == 5
        assert ModelSpec("fgarch", delta=1.3).param_names[-1] == "eta2"

    def test_fixed_deltas(self):
        assert ModelSpec("standard").delta == 2.0
        assert ModelSpec("gjr").delta == 2.0
        assert ModelSpec("tgarch").delta == 1.0
        with pytest.raises(ValueError):
            ModelSpec("gjr", delta=1.5)
        with pytest.raises(ValueError):
            ModelSpec("aparch")
        with pytest.raises(ValueError):
            ModelSpec("aparch", delta=-1.0)

    def test_fgarch_gamma(self):
        assert ModelSpec("fgarch", delta=1.5).fgarch_gamma == 1.5
        with pytest.raises(ValueError):
            ModelSpec("fgarch", delta=1.5, fgarch_gamma=0.5)

    def test_json_round_trip(self):
        for spec in ALL_SPECS + [ModelSpec("standard", u_transform=UTransform("power_abs", 0.7))]:
            d = json.loads(json.dumps(spec.to_dict()))
            assert ModelSpec.from_dict(d) == spec


class TestThetaBox:
    def test_out_of_box_rejected(self):
        spec = ModelSpec("standard")
        with pytest.raises(ValueError):
            spec.theta(dict(beta1=1.0))
        with pytest.raises(ValueError):
            spec.theta(dict(alpha1=-0.1))

    def test_box_rules(self):
        spec = ModelSpec("standard")
        with pytest.raises(ValueError, match="omega"):
            spec.theta(bounds={"omega": (0.0, 1.0)})
        with pytest.raises(ValueError, match="beta1"):
            spec.theta(bounds={"beta1": (0.0, 1.0)})
        ap = ModelSpec("aparch", delta=1.5)
        with pytest.raises(ValueError, match="alpha1"):
            ap.theta(dict(alpha1=0.1), bounds={"alpha1": (0.0, 1.0)})
        with pytest.raises(ValueError, match="eta1"):
            ap.theta(dict(alpha1=0.1), bounds={"eta1": (-1.0, 0.5)})

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            ModelSpec("standard").theta(dict(gamma1=0.1))


class TestEvaluations:
    def test_g_standard(self):
        spec, th = make("standard", omega=0.04, alpha1=0.1, beta1=0.8)
        for e in (-2.0, 0.0, 3.0):
            assert g_eval(spec, th, e) == 0.04

    def test_g_aparch_fit_representation(self):
        spec = ModelSpec("aparch", delta=2.0)
        th = spec.theta(dict(omega=0.1, alpha1=0.5, eta1=0.0))
        assert g_eval(spec, th, 2.0, representation="fit") == pytest.approx(2.1, abs=1e-15)
        # alpha1 = 0 is outside the apARCH box (alpha1 > 0 there); R = 0 and a
        # vanishing alpha1 both leave omega
        th = spec.theta(dict(omega=0.04, alpha1=1e-6, eta1=0.3))
        assert g_eval(spec, th, 0.0, representation="fit") == 0.04
        th = spec.theta(dict(omega=0.04, alpha1=1e-14, eta1=0.3), bounds={"alpha1": (1e-15, 10.0)})
        assert g_eval(spec, th, 1.7, representation="fit") == pytest.approx(0.04, abs=1e-13)

    def test_c_examples(self):
        spec, th = make("standard", alpha1=0.1, beta1=0.8)
        assert c_eval(spec, th, 0.0) == 0.8
        assert c_eval(spec, th, 1.0) == pytest.approx(0.9, abs=1e-15)
        spec, th = make("gjr", **GJR_71)
        assert c_eval(spec, th, -1.0) == pytest.approx(0.96, abs=1e-15)
        assert c_eval(spec, th, 1.0) == pytest.approx(0.9, abs=1e-15)

    def test_u_examples(self):
        spec, th = make("standard", **{"lambda": 0.0})
        assert u_eval(spec, th, 123.0) == 0.0
        spec, th = make("standard", **{"lambda": 0.02})
        assert u_eval(spec, th, -3.0) == pytest.approx(0.06, abs=1e-15)
        spec = ModelSpec("standard", u_transform=UTransform("sqrt_abs"))
        assert u_eval(spec, spec.theta({"lambda": 1.0}), 4.0) == 2.0
        spec = ModelSpec("standard", u_transform=UTransform("square"))
        assert u_eval(spec, spec.theta({"lambda": 0.5}), -3.0) == 4.5
        spec = ModelSpec("standard", u_transform=UTransform("power_abs", 1.5))
        assert u_eval(spec, spec.theta({"lambda": 1.0}), 4.0) == pytest.approx(8.0)

    def test_vol_step_examples(self):
        spec, th = make("standard", omega=0.04, alpha1=0.1, beta1=0.8)
        assert vol_step(spec, th, 1.0, 0.0, 5.0) == pytest.approx(0.84, abs=1e-15)
        spec, th = make("gjr", **GJR_71)
        assert vol_step(spec, th, 0.0004, 0.0, 1.0) == pytest.approx(0.06032, abs=1e-15)

    @pytest.mark.parametrize("family", ["standard", "gjr", "tgarch"])
    def test_degenerate_constant(self, family):
        spec = ModelSpec(family)
        th = spec.theta(dict(omega=0.3))
        s = 5.0
        for e, x in [(1.0, 2.0), (-3.0, -1.0), (0.2, 9.0)]:
            s = vol_step(spec, th, s, e, x)
            assert s == 0.3

    def test_vol_step_rejects_negative(self):
        spec, th = make("standard")
        with pytest.raises(ValueError):
            vol_step(spec, th, -1.0, 0.0, 0.0)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.family.value}-{s.delta}-{s.fgarch_gamma}")
    def test_c_matches_reference(self, spec):
        rng = np.random.default_rng(1)
        for _ in range(20):
            th = random_theta(spec, rng)
            e = rng.standard_normal(50) * 2
            ref = [c_ref(spec.family.value, th.as_dict(), spec.delta, v, spec.fgarch_gamma) for v in e]
            np.testing.assert_allclose(c_eval(spec, th, e), ref, rtol=1e-13)

    def test_u_matches_reference(self):
        rng = np.random.default_rng(2)
        x = rng.standard_cauchy(100)
        for kind, pw in [("abs", 1.0), ("sqrt_abs", 1.0), ("square", 1.0), ("power_abs", 0.3)]:
            spec = ModelSpec("standard", u_transform=UTransform(kind, pw))
            th = spec.theta({"lambda": 0.7})
            np.testing.assert_allclose(u_eval(spec, th, x), [0.7 * u1_ref(kind, v, pw) for v in x], rtol=1e-13)

    def test_tgarch_c_nonnegative(self):
        spec = ModelSpec("tgarch")
        th = spec.theta(dict(alpha1_plus=0.2, alpha1_minus=0.4, beta1=0.0))
        assert np.all(c_eval(spec, th, np.linspace(-50, 50, 1001)) >= 0)

    def test_fgarch_reduces_to_aparch(self):
        rng = np.random.default_rng(3)
        ap = ModelSpec("aparch", delta=1.4)
        fg = ModelSpec("fgarch", delta=1.4)
        for _ in range(10):
            th_a = random_theta(ap, rng)
            th_f = fg.theta({**th_a.as_dict(), "eta2": 0.0})
            e = rng.standard_normal(30)
            np.testing.assert_array_equal(c_eval(ap, th_a, e), c_eval(fg, th_f, e))
            for s, ep, xp in zip(rng.uniform(0, 3, 5), e, rng.standard_normal(5)):
                assert vol_step(ap, th_a, s, ep, xp) == vol_step(fg, th_f, s, ep, xp)


@settings(max_examples=60, deadline=None)
@given(
    idx=st.integers(0, len(ALL_SPECS) - 1),
    seed=st.integers(0, 2**32 - 1),
    s=st.floats(0, 1e3),
    e=st.floats(-20, 20),
    x=st.floats(-1e3, 1e3),
)
def test_positivity_and_affinity(idx, seed, s, e, x):
    spec = ALL_SPECS[idx]
    th = random_theta(spec, np.random.default_rng(seed))
    assert g_eval(spec, th, e) >= th.omega_floor
    assert c_eval(spec, th, e) >= 0
    assert u_eval(spec, th, x) >= 0
    out = vol_step(spec, th, s, e, x)
    assert out >= th.omega_floor
    # affine in the previous sigma^delta with slope c(eps)
    c = c_eval(spec, th, e)
    assert out - vol_step(spec, th, 0.0, e, x) == pytest.approx(c * s, rel=1e-12, abs=1e-12 * (1 + out))


class TestCausal:
    def test_degenerate(self):
        spec, th = make("standard", omega=0.2)
        val, k = causal_volatility(spec, th, np.ones(11), np.ones(11), K=10)
        assert val == 0.2 and k == 0

    def test_geometric(self):
        spec, th = make("standard", omega=0.1, alpha1=0.1, beta1=0.7)
        K = 25
        val, k = causal_volatility(spec, th, np.zeros(K + 1), np.zeros(K + 1), K=K, tol=0.0)
        assert k == K
        assert val == pytest.approx(0.1 * (1 - 0.7 ** (K + 1)) / (1 - 0.7), rel=1e-13)

    def test_rejects_bad_K(self):
        spec, th = make("standard")
        with pytest.raises(ValueError):
            causal_volatility(spec, th, [0.0], [0.0], K=0)
        with pytest.raises(ValueError):
            causal_volatility(spec, th, np.zeros(5), np.zeros(5), K=5)

    def test_tol_truncation(self):
        spec, th = make("standard", omega=0.1, beta1=0.5)
        val, k = causal_volatility(spec, th, np.zeros(200), np.zeros(200), K=199, tol=1e-6)
        assert k == 19  # 0.5^20 < 1e-6 <= 0.5^19
        assert val == pytest.approx(0.2 * (1 - 0.5**20), rel=1e-12)

    def test_consistency_with_recursion(self):
        # one vol_step applied to the causal value at t gives the causal value at t+1
        spec, th = make("gjr", **GJR_71)
        rng = np.random.default_rng(5)
        K = 400
        eps = rng.standard_normal(K + 2)
        x = rng.standard_normal(K + 2)
        s_t, _ = causal_volatility(spec, th, eps[1:], x[1:], K=K, tol=0.0)
        s_next, _ = causal_volatility(spec, th, eps, x, K=K + 1, tol=0.0)
        assert vol_step(spec, th, s_t, eps[0], x[0]) == pytest.approx(s_next, rel=1e-12)

    @pytest.mark.parametrize("spec", ALL_SPECS[:4], ids=lambda s: s.family.value)
    def test_long_truncation_matches_iteration(self, spec):
        rng = np.random.default_rng(11)
        th = random_theta(spec, rng)
        # keep E c < 1 by shrinking the ARCH part
        th = th.replace(beta1=0.5)
        K = 10_000
        eps = rng.standard_normal(K + 1)
        x = rng.standard_normal(K + 1)
        val, _ = causal_volatility(spec, th, eps, x, K=K, tol=0.0)
        # iterate forward from sigma^delta = 0 at the oldest time
        s = 0.0
        for k in range(K, -1, -1):
            s = vol_step(spec, th, s, eps[k], x[k])
        assert s == pytest.approx(val, rel=1e-10)
