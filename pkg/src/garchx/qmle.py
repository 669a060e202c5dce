"""
Gaussian quasi-maximum-likelihood estimation.

The observed log-likelihood is the average of
``-log sigma~_t^2 - R_t^2 / sigma~_t^2`` where ``sigma~`` follows the model
recursion seeded at ``sigma~^delta = omega`` on the first observation.  For
the smooth families (all but fGARCH) the ARCH term is written in terms of the
lagged return so that ``c`` reduces to ``beta1``; the first and second
derivatives of ``sigma~^delta`` are then accumulated forward in time
alongside the volatility itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize, stats

from garchx import _core
from garchx.model import Family, ModelSpec, ThetaVector

__all__ = [
    "NoAnalyticDerivatives",
    "LikelihoodDerivatives",
    "FitOptions",
    "FitResult",
    "ConfidenceRegion",
    "neg_loglik",
    "score",
    "hessian",
    "derivatives",
    "default_start",
    "fit",
    "confidence_region",
]


MAX_RESTARTS = 5


class NoAnalyticDerivatives(ValueError):
    """Raised for families whose likelihood is not differentiable in theta."""


def _as_series(R, x, min_len: int = 10) -> tuple[np.ndarray, np.ndarray]:
    R = np.ascontiguousarray(R, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    if R.ndim != 1 or x.ndim != 1:
        raise ValueError("R and x must be one-dimensional")
    if R.shape != x.shape:
        raise ValueError(f"length mismatch: len(R)={R.shape[0]}, len(x)={x.shape[0]}")
    if R.shape[0] < min_len:
        raise ValueError(f"need at least {min_len} observations, got {R.shape[0]}")
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(x))):
        raise ValueError("data contain non-finite values")
    return R, x


def _root(s: np.ndarray, delta: float) -> np.ndarray:
    if delta == 2.0:
        return np.sqrt(s)
    if delta == 1.0:
        return s
    return s ** (1.0 / delta)


def _seed(theta: ThetaVector, sigma0_delta: float | None):
    m = theta.values.shape[0]
    grad = np.zeros(m)
    if sigma0_delta is None:
        grad[0] = 1.0
        return theta["omega"], grad
    return float(sigma0_delta), grad


def neg_loglik(spec: ModelSpec, theta: ThetaVector, R, x, sigma0_delta: float | None = None) -> float:
    """Minus the average observed log-likelihood."""
    R, x = _as_series(R, x)
    fam, delta, gam, ukind, upow = spec._args()
    s0, _ = _seed(theta, sigma0_delta)
    s = _core.sigma_fit_path(fam, theta.values, delta, gam, ukind, upow, R, x, s0)
    return -float(_core.mean_loglik(s, R, delta))


def sigma_path(spec: ModelSpec, theta: ThetaVector, R, x, sigma0_delta: float | None = None) -> np.ndarray:
    """Observed volatility sigma~_t^delta along the data."""
    R, x = _as_series(R, x, min_len=1)
    fam, delta, gam, ukind, upow = spec._args()
    s0, _ = _seed(theta, sigma0_delta)
    return _core.sigma_fit_path(fam, theta.values, delta, gam, ukind, upow, R, x, s0)


@dataclass
class LikelihoodDerivatives:
    """Average log-likelihood and its derivatives at one parameter point."""

    loglik: float
    score: np.ndarray
    hessian: np.ndarray | None
    a_matrix: np.ndarray
    score_outer: np.ndarray
    sigma_delta: np.ndarray


def derivatives(
    spec: ModelSpec,
    theta: ThetaVector,
    R,
    x,
    want_hessian: bool = True,
    sigma0_delta: float | None = None,
) -> LikelihoodDerivatives:
    """
    Forward accumulation of score, Hessian, ``A_n`` and the score outer product.

    ``A_n = (1/n) sum (1/sigma~^{2 delta}) d sigma~^delta d sigma~^delta'``.
    """
    if not spec.family.smooth:
        raise NoAnalyticDerivatives(
            "fGARCH is not differentiable in eta2: no analytic derivatives; use a derivative-free fit"
        )
    R, x = _as_series(R, x)
    fam, delta, _, ukind, upow = spec._args()
    s0, g0 = _seed(theta, sigma0_delta)
    ll, sc, hs, a_mat, outer, s = _core.loglik_derivatives(
        fam, theta.values, delta, ukind, upow, R, x, s0, g0, want_hessian
    )
    return LikelihoodDerivatives(ll, sc, hs if want_hessian else None, a_mat, outer, s)


def score(spec: ModelSpec, theta: ThetaVector, R, x) -> np.ndarray:
    """Gradient of the average observed log-likelihood."""
    return derivatives(spec, theta, R, x, want_hessian=False).score


def hessian(spec: ModelSpec, theta: ThetaVector, R, x) -> np.ndarray:
    """Hessian of the average observed log-likelihood."""
    return derivatives(spec, theta, R, x, want_hessian=True).hessian


# ---------------------------------------------------------------------------
# estimation


@dataclass
class FitOptions:
    max_iter: int = 1000
    grad_tol: float = 1e-6
    newton_polish: bool = True
    boundary_tol: float = 1e-6
    multistart_seed: int = 12345


@dataclass
class FitResult:
    spec: ModelSpec
    theta_hat: ThetaVector
    loglik: float
    kappa_hat: float
    A_n: np.ndarray | None
    B_n: np.ndarray | None
    n_obs: int
    free: tuple[str, ...]
    trace: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return bool(self.trace.get("converged", False))

    @property
    def boundary(self) -> bool:
        return bool(self.trace.get("boundary", False))

    @property
    def singular(self) -> bool:
        return bool(self.trace.get("singular", False))

    def free_index(self) -> list[int]:
        return [self.spec.index(n) for n in self.free]

    def std_errors(self) -> dict[str, float]:
        if self.B_n is None:
            return {}
        return {n: float(np.sqrt(self.B_n[i, i] / self.n_obs)) for i, n in enumerate(self.free)}

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "theta_hat": self.theta_hat.as_dict(),
            "bounds": self.theta_hat.bounds_dict(),
            "free": list(self.free),
            "loglik": self.loglik,
            "kappa_hat": self.kappa_hat,
            "n_obs": self.n_obs,
            "A_n": None if self.A_n is None else self.A_n.tolist(),
            "B_n": None if self.B_n is None else self.B_n.tolist(),
            "trace": _jsonable(self.trace),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FitResult":
        spec = ModelSpec.from_dict(d["spec"])
        theta = spec.theta(d["theta_hat"], bounds=d["bounds"])
        A = None if d.get("A_n") is None else np.array(d["A_n"], dtype=float)
        B = None if d.get("B_n") is None else np.array(d["B_n"], dtype=float)
        return cls(
            spec, theta, float(d["loglik"]), float(d["kappa_hat"]), A, B,
            int(d["n_obs"]), tuple(d["free"]), dict(d.get("trace", {})),
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def default_start(spec: ModelSpec, R, lower=None, upper=None) -> ThetaVector:
    """Volatility-targeting start: omega = Var(R)^(delta/2) (1 - 0.9), beta1 = 0.85, ARCH 0.05."""
    var = float(np.var(R))
    vals = {"omega": max(var, 1e-12) ** (spec.delta / 2) * 0.1, "lambda": 0.01, "beta1": 0.85}
    for n in ("alpha1", "alpha1_plus", "alpha1_minus"):
        if n in spec.param_names:
            vals[n] = 0.05
    theta = spec.theta()
    lo = theta.lower if lower is None else lower
    hi = theta.upper if upper is None else upper
    v = np.array([vals.get(n, 0.0) for n in spec.param_names])
    return ThetaVector(spec, np.clip(v, lo, hi), lo, hi)


def _random_start(spec: ModelSpec, base: ThetaVector, rng: np.random.Generator) -> np.ndarray:
    v = base.values.copy()
    for i, n in enumerate(spec.param_names):
        if n == "omega":
            v[i] *= np.exp(rng.uniform(np.log(0.2), np.log(5.0)))
        elif n == "lambda":
            v[i] = rng.uniform(0.0, 0.1)
        elif n.startswith("alpha"):
            v[i] = rng.uniform(0.01, 0.2)
        elif n == "beta1":
            v[i] = rng.uniform(0.5, 0.95)
        elif n == "gamma1":
            v[i] = rng.uniform(0.0, 0.2)
        elif n.startswith("eta"):
            v[i] = rng.uniform(-0.5, 0.5)
    return np.clip(v, base.lower, base.upper)


def _projected_grad_norm(g, v, lo, hi) -> float:
    # gradient of the objective being minimized
    pg = g.copy()
    pg[(v <= lo) & (g > 0)] = 0.0
    pg[(v >= hi) & (g < 0)] = 0.0
    return float(np.max(np.abs(pg))) if pg.size else 0.0


def _fit_once(spec, R, x, theta0: ThetaVector, free_idx, options: FitOptions) -> tuple[np.ndarray, dict]:
    lo = theta0.lower[free_idx]
    hi = theta0.upper[free_idx]
    full = theta0.values.copy()
    fam, delta, gam, ukind, upow = spec._args()

    def expand(z):
        v = full.copy()
        v[free_idx] = np.clip(z, lo, hi)
        return v

    if spec.family.smooth:

        def fun(z):
            v = expand(z)
            g0 = np.zeros(v.shape[0])
            g0[0] = 1.0
            ll, sc, _, _, _, _ = _core.loglik_derivatives(fam, v, delta, ukind, upow, R, x, v[0], g0, False)
            if not np.isfinite(ll):
                return 1e10, np.zeros(len(free_idx))
            return -ll, -sc[free_idx]

        # L-BFGS-B in coordinates scaled by the curvature at the current point;
        # heavy-tailed covariates make the raw problem very badly scaled, so
        # the scaling is refreshed and the run restarted until it converges
        z = theta0.values[free_idx].copy()
        iters = 0
        for _ in range(MAX_RESTARTS):
            d = derivatives(spec, theta0.with_values(expand(z)), R, x)
            h = np.abs(np.diag(d.hessian)[free_idx])
            scale = 1.0 / np.sqrt(np.where(h > 0, h, 1.0))

            def fun_scaled(y, scale=scale):
                f, g = fun(y * scale)
                return f, g * scale

            res = optimize.minimize(
                fun_scaled,
                z / scale,
                jac=True,
                method="L-BFGS-B",
                bounds=list(zip(lo / scale, hi / scale)),
                options={"maxiter": options.max_iter, "gtol": options.grad_tol * 1e-2, "ftol": 1e-15, "maxcor": 20},
            )
            z = np.clip(res.x * scale, lo, hi)
            iters += int(res.nit)
            if _projected_grad_norm(fun(z)[1], z, lo, hi) < options.grad_tol * 1e-1:
                break
        newton = 0
        if options.newton_polish:
            for _ in range(20):
                v = expand(z)
                d = derivatives(spec, theta0.with_values(v), R, x)
                g = d.score[free_idx]
                H = d.hessian[np.ix_(free_idx, free_idx)]
                if _projected_grad_norm(-g, z, lo, hi) < options.grad_tol * 1e-3:
                    break
                try:
                    step = -np.linalg.solve(H, g)
                except np.linalg.LinAlgError:
                    break
                if np.any(np.linalg.eigvalsh(H) >= 0):
                    break
                znew = z + step
                if np.any(znew < lo) or np.any(znew > hi):
                    break
                if -fun(znew)[0] < d.loglik - 1e-14:
                    break
                z = znew
                newton += 1
        f, g = fun(z)
        gnorm = _projected_grad_norm(g, z, lo, hi)
        trace = {
            "optimizer": "L-BFGS-B",
            "iterations": iters,
            "newton_steps": newton,
            "grad_norm": gnorm,
            "converged": bool(gnorm < options.grad_tol),
            "message": str(res.message),
        }
        return expand(z), trace

    def fval(z):
        v = expand(z)
        s = _core.sigma_fit_path(fam, v, delta, gam, ukind, upow, R, x, v[0])
        ll = _core.mean_loglik(s, R, delta)
        return -ll if np.isfinite(ll) else 1e10

    res = optimize.minimize(
        fval,
        theta0.values[free_idx],
        method="Nelder-Mead",
        bounds=list(zip(lo, hi)),
        options={"maxiter": options.max_iter * 20, "maxfev": options.max_iter * 40, "xatol": 1e-9, "fatol": 1e-13,
                 "adaptive": True},
    )
    trace = {
        "optimizer": "Nelder-Mead",
        "iterations": int(res.nit),
        "newton_steps": 0,
        "grad_norm": None,
        "converged": bool(res.success),
        "message": str(res.message),
    }
    return expand(res.x), trace


def fit(
    spec: ModelSpec,
    R,
    x,
    init: ThetaVector | int | None = None,
    options: FitOptions | None = None,
    fixed: Mapping[str, float] | None = None,
    bounds: Mapping[str, Sequence[float]] | None = None,
) -> FitResult:
    """
    Maximize the observed likelihood over the parameter box.

    Parameters
    ----------
    init : ThetaVector, int or None
        Starting point (its box is used), or the number of starts for a
        multi-start run (the volatility-targeting start plus random ones).
    fixed : mapping, optional
        Coordinates held at a given value and excluded from estimation.
    bounds : mapping, optional
        Box overrides ``{name: (lower, upper)}``.

    Notes
    -----
    ``A_n`` and ``B_n = (delta^2/4)(kappa_hat - 1) A_n^{-1}`` refer to the free
    coordinates only, in the order of ``FitResult.free``.
    """
    options = options or FitOptions()
    R, x = _as_series(R, x)
    n = R.shape[0]

    if isinstance(init, ThetaVector):
        starts = [init]
        base = init
    else:
        base = default_start(spec, R)
        if bounds:
            lo, hi = base.lower.copy(), base.upper.copy()
            for k, (a, b) in bounds.items():
                lo[spec.index(k)], hi[spec.index(k)] = a, b
            base = ThetaVector(spec, np.clip(base.values, lo, hi), lo, hi)
        starts = [base]
        k = int(init) if isinstance(init, int) else 1
        rng = np.random.default_rng(options.multistart_seed)
        for _ in range(k - 1):
            starts.append(base.with_values(_random_start(spec, base, rng)))

    fixed = dict(fixed or {})
    for name in fixed:
        spec.index(name)
    free_idx = np.array([i for i, nm in enumerate(spec.param_names) if nm not in fixed], dtype=int)

    results = []
    for th in starts:
        v = th.values.copy()
        for name, val in fixed.items():
            v[spec.index(name)] = val
        th = th.with_values(v)
        vals, trace = _fit_once(spec, R, x, th, free_idx, options)
        ll = -neg_loglik(spec, th.with_values(vals), R, x)
        results.append((ll, vals, trace))
    best = max(range(len(results)), key=lambda i: results[i][0])
    ll, vals, trace = results[best]
    theta_hat = base.with_values(vals) if not isinstance(init, ThetaVector) else init.with_values(vals)
    if len(results) > 1:
        trace["starts"] = [r[1].tolist() for r in results]
        trace["start_logliks"] = [r[0] for r in results]

    lo, hi = theta_hat.lower[free_idx], theta_hat.upper[free_idx]
    z = vals[free_idx]
    trace["boundary"] = bool(np.any(z - lo < options.boundary_tol) or np.any(hi - z < options.boundary_tol))

    s = sigma_path(spec, theta_hat, R, x)
    eps_hat = R / _root(s, spec.delta)
    kappa = float(np.mean(eps_hat**4))

    A = B = None
    trace["singular"] = False
    if spec.family.smooth:
        d = derivatives(spec, theta_hat, R, x, want_hessian=False)
        A = d.a_matrix[np.ix_(free_idx, free_idx)]
        try:
            if np.linalg.cond(A) > 1e14:
                raise np.linalg.LinAlgError("ill-conditioned A_n")
            B = spec.delta**2 / 4.0 * (kappa - 1.0) * np.linalg.inv(A)
            B = 0.5 * (B + B.T)
        except np.linalg.LinAlgError:
            B = None
            trace["singular"] = True
    else:
        trace["no_derivatives"] = True
    names = tuple(spec.param_names[i] for i in free_idx)
    return FitResult(spec, theta_hat, ll, kappa, A, B, n, names, trace)


# ---------------------------------------------------------------------------
# confidence regions


@dataclass
class ConfidenceRegion:
    """Ellipsoid ``n (t - c)' B^{-1} (t - c) <= chi2_{|I|}(level)``."""

    names: tuple[str, ...]
    center: np.ndarray
    cov: np.ndarray
    n_obs: int
    level: float
    chi2_quantile: float

    def statistic(self, theta) -> float:
        v = self._subset(theta)
        diff = v - self.center
        return float(self.n_obs * diff @ np.linalg.solve(self.cov, diff))

    def contains(self, theta) -> bool:
        return self.statistic(theta) <= self.chi2_quantile

    def _subset(self, theta) -> np.ndarray:
        if isinstance(theta, ThetaVector):
            return np.array([theta[n] for n in self.names])
        if isinstance(theta, Mapping):
            return np.array([float(theta[n]) for n in self.names])
        v = np.asarray(theta, dtype=float)
        if v.shape != self.center.shape:
            raise ValueError(f"expected {len(self.names)} coordinates {self.names}")
        return v

    def intervals(self) -> dict[str, tuple[float, float]]:
        """Per-coordinate normal intervals at the same level."""
        z = stats.norm.ppf(0.5 + self.level / 2)
        out = {}
        for i, n in enumerate(self.names):
            hw = z * np.sqrt(self.cov[i, i] / self.n_obs)
            out[n] = (float(self.center[i] - hw), float(self.center[i] + hw))
        return out

    def to_dict(self) -> dict:
        return {
            "params": list(self.names),
            "center": self.center.tolist(),
            "cov": self.cov.tolist(),
            "n_obs": self.n_obs,
            "level": self.level,
            "chi2_quantile": self.chi2_quantile,
            "intervals": {k: list(v) for k, v in self.intervals().items()},
        }


def confidence_region(result: FitResult, subset: Sequence[str] | None = None, p: float = 0.05) -> ConfidenceRegion:
    """
    Asymptotic (1 - p) confidence region for a subset of the free parameters.

    Raises
    ------
    ValueError
        If the fit carries no covariance or the sub-block is singular.
    """
    if result.B_n is None:
        raise ValueError("fit result has no asymptotic covariance (singular A_n or derivative-free fit)")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    subset = tuple(result.free if subset is None else subset)
    if not subset:
        raise ValueError("subset must be nonempty")
    idx = []
    for name in subset:
        if name not in result.free:
            raise ValueError(f"{name!r} is not a free parameter of this fit")
        idx.append(result.free.index(name))
    cov = result.B_n[np.ix_(idx, idx)]
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("covariance block is singular") from None
    center = np.array([result.theta_hat[n] for n in subset])
    q = float(stats.chi2.ppf(1 - p, df=len(subset)))
    return ConfidenceRegion(subset, center, cov, result.n_obs, 1 - p, q)
