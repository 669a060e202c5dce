"""
Checks of the stationarity, moment and ergodicity conditions.

Conditions are expectations of model functions under the innovation and
covariate laws.  They are estimated by Monte Carlo with standard errors and,
for the standard GARCH family, also in closed form.  A condition of the form
``E[...] < 1`` is reported as satisfied when the estimate plus three standard
errors is below 1, violated when the estimate minus three standard errors is
above 1, and inconclusive otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from garchx import _core
from garchx.model import Family, ModelSpec, ThetaVector, c_eval, u_eval
from garchx.stochastic import (
    EXOG_STREAM,
    INNOVATION_STREAM,
    ExogProcess,
    InnovationDist,
    SeedSpec,
)

__all__ = [
    "Verdict",
    "Estimate",
    "ConditionReport",
    "ForgettingRate",
    "ErgodicityFixedPoint",
    "check_stationarity",
    "check_moment",
    "forgetting_rate",
    "tgarch_ergodicity_certificate",
]

SE_BAND = 3.0


class Verdict(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float
    closed_form: float | None = None
    finite: bool = True

    def to_dict(self) -> dict:
        return {"mean": self.mean, "se": self.se, "closed_form": self.closed_form, "finite": self.finite}


def _mc(values: np.ndarray) -> tuple[float, float]:
    n = values.shape[0]
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n))


@dataclass
class ConditionReport:
    """
    Estimates behind one stationarity (``order = alpha``) or moment
    (``order = m``) condition.
    """

    kind: str
    order: float
    est_Ec: Estimate
    est_Eg: Estimate
    est_Eu: Estimate
    est_Eeps: Estimate
    verdict: Verdict
    n_mc: int
    notes: list[str] = field(default_factory=list)

    @property
    def hypotheses_ok(self) -> bool:
        return self.est_Eg.finite and self.est_Eu.finite and self.est_Eeps.finite

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "order": self.order,
            "E_c": self.est_Ec.to_dict(),
            "E_g": self.est_Eg.to_dict(),
            "E_u": self.est_Eu.to_dict(),
            "E_abs_eps": self.est_Eeps.to_dict(),
            "verdict": self.verdict.value,
            "n_mc": self.n_mc,
            "notes": list(self.notes),
        }

    def table(self) -> str:
        label = "alpha" if self.kind == "stationarity" else "m"
        rows = [
            ("E c(eps)^" + label, self.est_Ec),
            ("E g(eps)^" + label, self.est_Eg),
            ("E u(x)^" + label, self.est_Eu),
            ("E |eps|^(delta*" + label + ")", self.est_Eeps),
        ]
        lines = [f"{self.kind} check, {label}={self.order:g}, n_mc={self.n_mc}"]
        lines.append(f"{'quantity':<22}{'estimate':>14}{'std.err':>12}{'closed form':>14}")
        for name, e in rows:
            est = f"{e.mean:14.6g}" if e.finite else f"{'inf':>14}"
            cf = "" if e.closed_form is None else f"{e.closed_form:.6g}"
            lines.append(f"{name:<22}{est}{e.se:12.3g}{cf:>14}")
        lines.append(f"verdict: {self.verdict.value}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def _standard_closed_form_c(theta: ThetaVector, dist: InnovationDist, order: float) -> float | None:
    a, b = theta["alpha1"], theta["beta1"]
    if order == 1:
        return b + a
    if order == 2:
        return b * b + 2 * a * b + a * a * dist.kurtosis
    return None


def _conditions(spec, theta, order, dist, exog, n_mc, seed, kind) -> ConditionReport:
    if n_mc < 2:
        raise ValueError("n_mc too small")
    seed = seed or SeedSpec(0, 0)
    eps = dist.sample(seed.generator(INNOVATION_STREAM), n_mc)
    x = exog.sample_marginal(seed.generator(EXOG_STREAM), n_mc)
    notes = []

    c_vals = c_eval(spec, theta, eps) ** order
    m, se = _mc(c_vals)
    cf = None
    if spec.family is Family.STANDARD:
        cf = _standard_closed_form_c(theta, dist, order)
    est_c = Estimate(m, se, cf)

    omega = theta["omega"]
    est_g = Estimate(omega**order, 0.0, omega**order)

    p_u = spec.u_transform.exponent * order
    u_finite = theta["lambda"] == 0 or exog.abs_moment_finite(p_u)
    m_u, se_u = _mc(u_eval(spec, theta, x) ** order)
    est_u = Estimate(m_u if u_finite else np.inf, se_u, None, u_finite)
    if not u_finite:
        notes.append(f"E|x|^{p_u:g} is infinite for the heavy-tailed covariate")

    p_e = spec.delta * order
    cf_e = dist.abs_moment(p_e)
    e_finite = bool(np.isfinite(cf_e))
    m_e, se_e = _mc(np.abs(eps) ** p_e)
    est_e = Estimate(m_e if e_finite else np.inf, se_e, float(cf_e) if e_finite else None, e_finite)
    if not e_finite:
        notes.append(f"E|eps|^{p_e:g} is infinite")

    if cf is not None:
        upper = lower = cf
    else:
        upper, lower = m + SE_BAND * se, m - SE_BAND * se
    if lower > 1:
        verdict = Verdict.VIOLATED
    elif upper < 1 and est_g.finite and u_finite and e_finite:
        verdict = Verdict.SATISFIED
    else:
        verdict = Verdict.INCONCLUSIVE
    return ConditionReport(kind, order, est_c, est_g, est_u, est_e, verdict, n_mc, notes)


def check_stationarity(
    spec: ModelSpec,
    theta: ThetaVector,
    alpha: float,
    dist: InnovationDist | None = None,
    exog: ExogProcess | None = None,
    n_mc: int = 1_000_000,
    seed: SeedSpec | None = None,
) -> ConditionReport:
    """
    Estimate ``E c(eps)^alpha``, ``E g^alpha``, ``E u(x)^alpha`` and
    ``E |eps|^(delta alpha)`` for the stationarity condition of order alpha.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    return _conditions(spec, theta, float(alpha), dist or InnovationDist(), exog or ExogProcess(), n_mc, seed,
                       "stationarity")


def check_moment(
    spec: ModelSpec,
    theta: ThetaVector,
    m: int,
    dist: InnovationDist | None = None,
    exog: ExogProcess | None = None,
    n_mc: int = 1_000_000,
    seed: SeedSpec | None = None,
) -> ConditionReport:
    """Whether E|R_t|^(m delta) is finite, decided through ``E c(eps)^m < 1``."""
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    return _conditions(spec, theta, int(m), dist or InnovationDist(), exog or ExogProcess(), n_mc, seed, "moment")


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForgettingRate:
    slope: float
    slope_se: float
    rho_hat: float
    r2: float
    degenerate: bool
    mean_gap: np.ndarray

    def to_dict(self) -> dict:
        return {"slope": self.slope, "slope_se": self.slope_se, "rho_hat": self.rho_hat, "r2": self.r2,
                "degenerate": self.degenerate}


def forgetting_rate(
    spec: ModelSpec,
    theta: ThetaVector,
    alpha: float = 1.0,
    n_reps: int = 2000,
    T: int = 60,
    dist: InnovationDist | None = None,
    exog: ExogProcess | None = None,
    start_ratio: float = 50.0,
    seed: SeedSpec | None = None,
) -> ForgettingRate:
    """
    Geometric rate at which the process forgets its initial volatility.

    Pairs of paths share innovations and covariates but start from
    ``sigma~_0^delta = omega`` and ``start_ratio * omega``; the log of the
    Monte Carlo mean of ``|gap_t|^alpha`` is regressed on ``t = 1..T``.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    dist = dist or InnovationDist()
    exog = exog or ExogProcess()
    seed = seed or SeedSpec(0, 0)
    fam, delta, gam, ukind, upow = spec._args()
    omega = theta["omega"]
    acc = np.zeros(T)
    va = np.empty(T)
    vb = np.empty(T)
    ra = np.empty(T)
    for rep in range(n_reps):
        sd = seed.with_stream(seed.stream_id + rep)
        eps = dist.sample(sd.generator(INNOVATION_STREAM), T)
        x0, x = exog.simulate_rows(sd.generator(EXOG_STREAM), 1, T)
        x0, x = float(x0[0]), x[0]
        _core.simulate_kernel(fam, theta.values, delta, gam, ukind, upow, omega, 0.0, x0, eps, x, va, ra)
        _core.simulate_kernel(fam, theta.values, delta, gam, ukind, upow, start_ratio * omega, 0.0, x0, eps, x, vb, ra)
        acc += np.abs(vb - va) ** alpha
    mean_gap = acc / n_reps
    t = np.arange(1, T + 1, dtype=float)
    if not np.any(mean_gap > 0):
        return ForgettingRate(-np.inf, 0.0, 0.0, 1.0, True, mean_gap)
    keep = mean_gap > 0
    y = np.log(mean_gap[keep])
    tt = t[keep]
    if keep.sum() < 3:
        return ForgettingRate(-np.inf, 0.0, 0.0, 1.0, True, mean_gap)
    X = np.column_stack([np.ones_like(tt), tt])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    sigma2 = ss_res / max(len(y) - 2, 1)
    slope_se = float(np.sqrt(sigma2 / ((tt - tt.mean()) ** 2).sum()))
    slope = float(coef[1])
    return ForgettingRate(slope, slope_se, float(np.exp(slope)), r2, False, mean_gap)


# ---------------------------------------------------------------------------


@dataclass
class ErgodicityFixedPoint:
    """
    Certificate for the threshold GARCH example with an iid shifted covariate
    ``x_t = shift + eta_t``: state ``Y = (sigma, x)``, shocks ``A = (eps, eta)``.
    """

    y_star: np.ndarray
    a_star: np.ndarray
    Phi: np.ndarray
    Theta_mat: np.ndarray
    rank_ok: bool
    drift_exponent: float
    fixed_point_residual: float
    drift_ratio: float
    rho_bound: float
    kappa: float
    grid_sigma: np.ndarray
    grid_x: np.ndarray

    def to_dict(self) -> dict:
        return {
            "y_star": self.y_star.tolist(),
            "a_star": self.a_star.tolist(),
            "Phi": self.Phi.tolist(),
            "Theta": self.Theta_mat.tolist(),
            "rank_ok": self.rank_ok,
            "drift_exponent": self.drift_exponent,
            "fixed_point_residual": self.fixed_point_residual,
            "drift_ratio": self.drift_ratio,
            "rho_bound": self.rho_bound,
            "kappa": self.kappa,
        }


def tgarch_transition(theta: ThetaVector, shift: float, y, a) -> np.ndarray:
    """``G(y, a)`` for the threshold model: sigma' = omega + lambda|x| + c(eps) sigma, x' = shift + eta."""
    spec = theta.spec
    sigma, x = float(y[0]), float(y[1])
    eps, eta = float(a[0]), float(a[1])
    s_new = theta["omega"] + theta["lambda"] * abs(x) + c_eval(spec, theta, eps) * sigma
    return np.array([s_new, shift + eta])


def tgarch_ergodicity_certificate(
    theta: ThetaVector,
    gamma_shift: float,
    r: float,
    n_mc: int = 100_000,
    seed: SeedSpec | None = None,
    noise: InnovationDist | None = None,
) -> ErgodicityFixedPoint:
    """
    Fixed point, derivative matrices and a numerical drift check for the
    threshold GARCH model with ``u = |x|`` and ``x_t = gamma_shift + eta_t``.

    The drift function is ``V = 1 + (|sigma| + |x|)^r``.  Conditionally on the
    current state the next value satisfies
    ``|sigma'| + |x'| <= a(eps) (|sigma| + |x|) + omega + |x'|`` with
    ``a = max(c(eps), lambda)``, which yields ``E[V(Y_1) | y] <= rho V(y) + kappa``
    with ``rho = E a^r`` and ``kappa = 1 - rho + E (omega + |x'|)^r``.  The
    reported ``drift_ratio`` is the Monte Carlo maximum over the grid of
    ``(E[V(Y_1) | y] - kappa) / V(y)``.
    """
    spec = theta.spec
    if spec.family is not Family.TGARCH:
        raise ValueError("the certificate is built for the threshold (tgarch) family")
    if spec.u_transform.kind != "abs":
        raise ValueError("the certificate assumes u(x) = lambda |x|")
    omega, lam = theta["omega"], theta["lambda"]
    ap, beta = theta["alpha1_plus"], theta["beta1"]
    if ap + beta >= 1:
        raise ValueError("alpha1_plus + beta1 >= 1: the fixed point does not exist")
    if not gamma_shift > -1:
        raise ValueError("gamma_shift must exceed -1")
    if r < 0:
        raise ValueError("drift exponent r must be nonnegative")

    y_star = np.array([(omega + lam * (1 + gamma_shift)) / (1 - (ap + beta)), 1 + gamma_shift])
    a_star = np.array([1.0, 1.0])
    residual = float(np.max(np.abs(tgarch_transition(theta, gamma_shift, y_star, a_star) - y_star)))
    Phi = np.array([[ap + beta, lam * np.sign(y_star[1])], [0.0, 0.0]])
    Theta_mat = np.array([[ap * y_star[0], 0.0], [0.0, 1.0]])
    rank_ok = bool(np.linalg.matrix_rank(np.hstack([Phi, Theta_mat])) == 2)

    seed = seed or SeedSpec(0, 0)
    noise = noise or InnovationDist()
    eps = InnovationDist().sample(seed.generator(INNOVATION_STREAM), n_mc)
    eta = noise.sample(seed.generator(EXOG_STREAM), n_mc)
    c = c_eval(spec, theta, eps)
    contraction = np.maximum(c, lam) ** r
    rho = float(contraction.mean())
    if not rho < 1:
        raise ValueError(f"E max(c, lambda)^r = {rho:.4g} >= 1; choose a smaller drift exponent")
    x_next = gamma_shift + eta
    kappa = 1.0 - rho + float(((omega + np.abs(x_next)) ** r).mean())

    grid_sigma = np.logspace(np.log10(omega ** (1.0 / spec.delta)), 2.0, 20)
    half = np.logspace(-2.0, 2.0, 10)
    grid_x = np.concatenate([-half[::-1], half])
    worst = -np.inf
    abs_x_next = np.abs(x_next)
    for s in grid_sigma:
        for xv in grid_x:
            s_next = omega + lam * abs(xv) + c * s
            ev = 1.0 + float(((np.abs(s_next) + abs_x_next) ** r).mean())
            v = 1.0 + (abs(s) + abs(xv)) ** r
            worst = max(worst, (ev - kappa) / v)
    return ErgodicityFixedPoint(
        y_star, a_star, Phi, Theta_mat, rank_ok, float(r), residual, float(worst), rho, kappa, grid_sigma, grid_x
    )
