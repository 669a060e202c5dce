"""
Value at risk of the h-period log return by Monte Carlo.

Two estimators of the same quantile are provided:

* ``var_independent`` simulates ``n`` independent paths of length ``h`` and
  uses the sum of the returns of each path;
* ``var_ergodic`` simulates a single path of length ``N_b + h - 1 + n``,
  drops the first ``N_b`` steps and uses the ``n`` overlapping rolling sums.

The quantile is the nearest-rank order statistic at ``ceil((1 - level) n)``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import stats

from garchx import _core
from garchx.model import ModelSpec, ThetaVector
from garchx.simulate import PathDivergedError, default_threads
from garchx.stochastic import (
    EXOG_STREAM,
    INNOVATION_STREAM,
    ExogProcess,
    InnovationDist,
    SeedSpec,
    draw_exogenous,
    draw_innovations,
)

__all__ = [
    "VarMethod",
    "VarRequest",
    "VarResult",
    "MethodComparison",
    "nearest_rank_quantile",
    "var_independent",
    "var_ergodic",
    "compute_var",
    "compare_methods",
]

CHUNK_PATHS = 1000
BOOTSTRAP_STREAM = 3
N_BOOTSTRAP = 200


class VarMethod(str, Enum):
    INDEPENDENT = "indep"
    ERGODIC = "ergodic"


@dataclass(frozen=True)
class VarRequest:
    """
    Parameters of a VaR computation.

    ``sigma0_delta`` is the starting ``sigma~_0^delta`` (None means ``omega``)
    and ``r0`` the starting return, taken as the innovation ``eps_0 = 0`` when
    ``r0 = 0``.  ``warmup`` extra steps are simulated and discarded at the
    start of every independent path, which lets method 1 target the
    stationary law; with the default 0 each path starts at ``sigma0_delta``.
    The covariate starts from its burned-in law (``exogenous.burn_in``).
    """

    level: float = 0.99
    horizon: int = 10
    n: int = 100_000
    burn_in: int = 5000
    method: VarMethod = VarMethod.INDEPENDENT
    seed: SeedSpec = field(default_factory=SeedSpec)
    sigma0_delta: float | None = None
    r0: float = 0.0
    warmup: int = 0
    price: float = 1.0
    innovation: InnovationDist = field(default_factory=InnovationDist)
    exogenous: ExogProcess = field(default_factory=ExogProcess)
    with_se: bool = True

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.n < 1000:
            raise ValueError("n must be >= 1000")
        if self.burn_in < 0 or self.warmup < 0:
            raise ValueError("burn-in lengths must be nonnegative")
        object.__setattr__(self, "method", VarMethod(self.method))

    def initial(self, theta: ThetaVector, delta: float) -> tuple[float, float]:
        s0 = theta["omega"] if self.sigma0_delta is None else float(self.sigma0_delta)
        if self.r0 == 0:
            return s0, 0.0
        return s0, float(self.r0) / _core.root_delta(s0, delta)


@dataclass
class VarResult:
    var_logreturn: float
    method: VarMethod
    draws_used: int
    runtime: float
    level: float
    horizon: int
    n: int
    price: float = 1.0
    se: float | None = None
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def var_return(self) -> float:
        return math.expm1(self.var_logreturn)

    @property
    def var_value(self) -> float:
        return self.price * math.expm1(self.var_logreturn)

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "level": self.level,
            "horizon": self.horizon,
            "n": self.n,
            "var_logreturn": self.var_logreturn,
            "var_return": self.var_return,
            "var_value": self.var_value,
            "price": self.price,
            "se": self.se,
            "draws_used": self.draws_used,
            "runtime": self.runtime,
        }

    def table(self) -> str:
        se = "" if self.se is None else f" (se {self.se:.4g})"
        return "\n".join(
            [
                f"method        {self.method.value}",
                f"level         {self.level:g}",
                f"horizon       {self.horizon}",
                f"n             {self.n}",
                f"VaR log-ret   {self.var_logreturn:.6g}{se}",
                f"VaR return    {self.var_return:.6g}",
                f"VaR value     {self.var_value:.6g}",
                f"draws_used    {self.draws_used}",
                f"runtime [s]   {self.runtime:.3f}",
            ]
        )


@dataclass
class MethodComparison:
    reps: int
    var_samples_m1: np.ndarray
    var_samples_m2: np.ndarray
    t_stat: float
    p_value: float
    methods: tuple[str, str] = ("indep", "ergodic")

    def to_dict(self) -> dict:
        return {
            "reps": self.reps,
            "methods": list(self.methods),
            "mean_m1": float(np.mean(self.var_samples_m1)),
            "mean_m2": float(np.mean(self.var_samples_m2)),
            "sd_m1": float(np.std(self.var_samples_m1, ddof=1)),
            "sd_m2": float(np.std(self.var_samples_m2, ddof=1)),
            "t_stat": self.t_stat,
            "p_value": self.p_value,
            "var_samples_m1": self.var_samples_m1.tolist(),
            "var_samples_m2": self.var_samples_m2.tolist(),
        }


def nearest_rank_quantile(x: np.ndarray, level: float) -> float:
    """Lower ``1 - level`` quantile: the order statistic of rank ``ceil((1 - level) n)``."""
    n = x.shape[0]
    k = max(1, math.ceil((1.0 - level) * n - 1e-9))
    return float(np.partition(x, k - 1)[k - 1])


def _bootstrap_se(sums: np.ndarray, level: float, rng: np.random.Generator, block: int) -> float:
    n = sums.shape[0]
    qs = np.empty(N_BOOTSTRAP)
    if block <= 1:
        for b in range(N_BOOTSTRAP):
            qs[b] = nearest_rank_quantile(sums[rng.integers(0, n, n)], level)
    else:
        n_blocks = -(-n // block)
        offs = np.arange(block)
        for b in range(N_BOOTSTRAP):
            starts = rng.integers(0, n - block + 1, n_blocks)
            idx = (starts[:, None] + offs).ravel()[:n]
            qs[b] = nearest_rank_quantile(sums[idx], level)
    return float(qs.std(ddof=1))


def _horizon_sums(spec: ModelSpec, theta: ThetaVector, req: VarRequest, threads: int) -> np.ndarray:
    fam, delta, gam, ukind, upow = spec._args()
    s0, e0 = req.initial(theta, delta)
    steps = req.warmup + req.horizon
    n_chunks = -(-req.n // CHUNK_PATHS)

    def chunk(k):
        rows = min(CHUNK_PATHS, req.n - k * CHUNK_PATHS)
        eps = req.innovation.sample(req.seed.generator(INNOVATION_STREAM, k), (rows, steps))
        x0, x = req.exogenous.simulate_rows(req.seed.generator(EXOG_STREAM, k), rows, steps)
        return _core.horizon_sums_kernel(fam, theta.values, delta, gam, ukind, upow, s0, e0, x0, eps, x, req.warmup)

    if threads == 1 or n_chunks == 1:
        parts = [chunk(k) for k in range(n_chunks)]
    else:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(chunk, range(n_chunks)))
    sums = np.concatenate(parts)
    bad = np.flatnonzero(np.isnan(sums))
    if bad.size:
        raise PathDivergedError(-1, path=int(bad[0]))
    return sums


def var_independent(
    spec: ModelSpec, theta: ThetaVector, req: VarRequest, threads: int | None = None
) -> VarResult:
    """
    Method 1: ``n`` independent paths of length ``h`` (plus ``req.warmup``).

    ``draws_used = 2 (warmup + h) n``, one innovation and one covariate draw
    per simulated step; with ``warmup = 0`` this is ``2 h n``.
    """
    t0 = time.perf_counter()
    threads = default_threads() if threads is None else max(1, threads)
    sums = _horizon_sums(spec, theta, req, threads)
    q = nearest_rank_quantile(sums, req.level)
    se = None
    if req.with_se:
        se = _bootstrap_se(sums, req.level, req.seed.generator(BOOTSTRAP_STREAM), 1)
    return VarResult(
        q, VarMethod.INDEPENDENT, 2 * (req.warmup + req.horizon) * req.n, time.perf_counter() - t0,
        req.level, req.horizon, req.n, req.price, se, sums,
    )


def var_ergodic(spec: ModelSpec, theta: ThetaVector, req: VarRequest) -> VarResult:
    """
    Method 2: one path of length ``N_b + h - 1 + n``; the first ``N_b``
    returns are dropped and the ``n`` overlapping ``h``-step sums are used.

    ``draws_used = 2 (N_b + h - 1 + n)``.  The standard error comes from a
    moving-block bootstrap with blocks of length ``2 h``.
    """
    t0 = time.perf_counter()
    fam, delta, gam, ukind, upow = spec._args()
    s0, e0 = req.initial(theta, delta)
    length = req.burn_in + req.horizon - 1 + req.n
    eps = draw_innovations(req.innovation, length, req.seed)
    xs = draw_exogenous(req.exogenous, length + 1, req.seed)
    x0, x = float(xs[0]), xs[1:]
    vol = np.empty(length)
    ret = np.empty(length)
    bad = _core.simulate_kernel(fam, theta.values, delta, gam, ukind, upow, s0, e0, x0, eps, x, vol, ret)
    if bad >= 0:
        raise PathDivergedError(bad + 1)
    kept = ret[req.burn_in :]
    csum = np.concatenate([[0.0], np.cumsum(kept)])
    sums = csum[req.horizon :] - csum[: -req.horizon]
    q = nearest_rank_quantile(sums, req.level)
    se = None
    if req.with_se:
        se = _bootstrap_se(sums, req.level, req.seed.generator(BOOTSTRAP_STREAM), 2 * req.horizon)
    return VarResult(
        q, VarMethod.ERGODIC, 2 * length, time.perf_counter() - t0,
        req.level, req.horizon, req.n, req.price, se, sums,
    )


def compute_var(spec: ModelSpec, theta: ThetaVector, req: VarRequest, threads: int | None = None) -> VarResult:
    if req.method is VarMethod.INDEPENDENT:
        return var_independent(spec, theta, req, threads)
    return var_ergodic(spec, theta, req)


def compare_methods(
    spec: ModelSpec,
    theta: ThetaVector,
    req: VarRequest,
    reps: int,
    methods: tuple[str, str] = ("indep", "ergodic"),
    threads: int | None = None,
) -> MethodComparison:
    """
    Repeat both methods ``reps`` times with independent seeds and compare the
    VaR samples with a two-sided Welch t-test.

    Replication ``k`` of the first method uses stream ``stream_id + 2k`` and
    of the second ``stream_id + 2k + 1``.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    m1, m2 = (VarMethod(m) for m in methods)
    threads = default_threads() if threads is None else max(1, threads)
    base = req.seed.stream_id

    def one(job):
        k, which, method = job
        r = replace(req, method=method, seed=req.seed.with_stream(base + 2 * k + which), with_se=False)
        if method is VarMethod.INDEPENDENT:
            return var_independent(spec, theta, r, threads=1).var_logreturn
        return var_ergodic(spec, theta, r).var_logreturn

    jobs = [(k, w, m) for k in range(reps) for w, m in ((0, m1), (1, m2))]
    if threads == 1:
        vals = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(threads) as pool:
            vals = list(pool.map(one, jobs))
    a = np.array(vals[0::2])
    b = np.array(vals[1::2])
    t, p = stats.ttest_ind(a, b, equal_var=False)
    return MethodComparison(reps, a, b, float(t), float(p), (m1.value, m2.value))
