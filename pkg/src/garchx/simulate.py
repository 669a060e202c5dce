"""Sample paths of the GARCHX process started at time 0."""

from __future__ import annotations

import csv
import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from garchx import _core
from garchx.model import ModelSpec, ThetaVector
from garchx.stochastic import (
    INITIAL_STREAM,
    ExogProcess,
    InnovationDist,
    SeedSpec,
    draw_exogenous,
    draw_innovations,
)

__all__ = [
    "PathDivergedError",
    "InitialVol",
    "SimConfig",
    "PathSample",
    "simulate_path",
    "simulate_batch",
    "default_threads",
]

CACHE_VERSION = 1


class PathDivergedError(ArithmeticError):
    """sigma^delta overflowed (non-finite or above 1e300)."""

    def __init__(self, t: int, path: int | None = None):
        self.t = t
        self.path = path
        where = f"path {path} " if path is not None else "path "
        super().__init__(f"{where}diverged at t={t}")


def default_threads() -> int:
    env = os.environ.get("GARCHX_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class InitialVol:
    """Law of sigma~_0^delta: a point mass or a lognormal(mu, s)."""

    kind: str = "point_mass"
    value: float | None = None
    mu: float = 0.0
    s: float = 1.0

    def draw(self, omega: float, seed: SeedSpec) -> float:
        if self.kind == "point_mass":
            v = omega if self.value is None else float(self.value)
        elif self.kind == "lognormal":
            v = float(np.exp(self.mu + self.s * seed.generator(INITIAL_STREAM).standard_normal()))
        else:
            raise ValueError(f"unknown initial volatility law {self.kind!r}")
        if v < 0:
            raise ValueError("initial sigma^delta must be nonnegative")
        return v


@dataclass(frozen=True)
class SimConfig:
    """
    Simulation settings.

    ``sigma0_delta`` may be a number, an :class:`InitialVol`, or None for the
    default ``omega``.  ``eps0`` is the innovation driving the first step
    (0 corresponds to an initial return of 0).  The covariate value ``x0``
    feeding the first step is drawn from the burned-in law of the process.
    """

    T: int
    sigma0_delta: float | InitialVol | None = None
    eps0: float = 0.0
    n_paths: int = 1
    seed: SeedSpec = field(default_factory=SeedSpec)
    innovation: InnovationDist = field(default_factory=InnovationDist)
    exogenous: ExogProcess = field(default_factory=ExogProcess)

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")

    def initial(self, omega: float, seed: SeedSpec) -> float:
        s0 = self.sigma0_delta
        if isinstance(s0, InitialVol):
            return s0.draw(omega, seed)
        return InitialVol(value=s0).draw(omega, seed)


@dataclass
class PathSample:
    """
    One simulated path, times ``1..T``.

    ``vol_delta[t]`` is driven by ``eps[t-1]`` and ``exog[t-1]``; the values
    feeding the first step are kept in ``sigma0_delta``, ``eps0`` and ``x0``.
    """

    returns: np.ndarray
    vol_delta: np.ndarray
    exog: np.ndarray
    eps: np.ndarray
    seed: SeedSpec
    spec: ModelSpec
    theta: ThetaVector
    sigma0_delta: float
    eps0: float
    x0: float

    @property
    def T(self) -> int:
        return self.returns.shape[0]

    def checksum(self) -> str:
        h = hashlib.sha256()
        for a in (self.returns, self.vol_delta, self.exog, self.eps):
            h.update(a.tobytes())
        return h.hexdigest()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "R", "x", "sigma_delta", "eps"])
            for t in range(self.T):
                w.writerow(
                    [
                        t + 1,
                        f"{self.returns[t]:.17g}",
                        f"{self.exog[t]:.17g}",
                        f"{self.vol_delta[t]:.17g}",
                        f"{self.eps[t]:.17g}",
                    ]
                )

    def to_cache(self, path) -> None:
        """Binary cache (``.npz``) with a format version."""
        np.savez(
            path,
            version=np.array(CACHE_VERSION),
            returns=self.returns,
            vol_delta=self.vol_delta,
            exog=self.exog,
            eps=self.eps,
            initial=np.array([self.sigma0_delta, self.eps0, self.x0]),
            seed=np.array([self.seed.master_seed, self.seed.stream_id], dtype=np.uint64),
        )

    @classmethod
    def from_cache(cls, path, spec: ModelSpec, theta: ThetaVector) -> "PathSample":
        with np.load(path) as z:
            if int(z["version"]) != CACHE_VERSION:
                raise ValueError(f"unsupported cache version {int(z['version'])}")
            s0, e0, x0 = z["initial"]
            master, stream = (int(v) for v in z["seed"])
            return cls(
                z["returns"], z["vol_delta"], z["exog"], z["eps"],
                SeedSpec(master, stream), spec, theta, float(s0), float(e0), float(x0),
            )


def _draw_exog_with_start(proc: ExogProcess, T: int, seed: SeedSpec) -> tuple[float, np.ndarray]:
    # x_0 then x_1..x_T, all on the covariate substream
    x = draw_exogenous(proc, T + 1, seed)
    return float(x[0]), x[1:]


def simulate_path(spec: ModelSpec, theta: ThetaVector, cfg: SimConfig, seed: SeedSpec | None = None) -> PathSample:
    """
    Simulate ``cfg.T`` steps of the process started at time 0.

    Raises
    ------
    PathDivergedError
        If sigma^delta becomes non-finite or exceeds 1e300.
    """
    seed = cfg.seed if seed is None else seed
    eps = draw_innovations(cfg.innovation, cfg.T, seed)
    x0, x = _draw_exog_with_start(cfg.exogenous, cfg.T, seed)
    s0 = cfg.initial(theta["omega"], seed)
    fam, delta, gam, ukind, upow = spec._args()
    vol = np.empty(cfg.T)
    ret = np.empty(cfg.T)
    bad = _core.simulate_kernel(fam, theta.values, delta, gam, ukind, upow, s0, float(cfg.eps0), x0, eps, x, vol, ret)
    if bad >= 0:
        raise PathDivergedError(bad + 1)
    return PathSample(ret, vol, x, eps, seed, spec, theta, s0, float(cfg.eps0), x0)


def simulate_batch(
    spec: ModelSpec,
    theta: ThetaVector,
    cfg: SimConfig,
    n_paths: int | None = None,
    threads: int | None = None,
) -> list[PathSample]:
    """
    Independent paths on streams ``0..n_paths-1`` of ``cfg.seed.master_seed``.

    The result does not depend on ``threads``.
    """
    n_paths = cfg.n_paths if n_paths is None else n_paths
    threads = default_threads() if threads is None else max(1, threads)

    def one(i):
        try:
            return simulate_path(spec, theta, cfg, cfg.seed.with_stream(i))
        except PathDivergedError as err:
            raise PathDivergedError(err.t, path=i) from None

    if threads == 1 or n_paths == 1:
        return [one(i) for i in range(n_paths)]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(one, range(n_paths)))
