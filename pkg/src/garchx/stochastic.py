"""
Seedable random sources for the innovations and the exogenous covariate.

Streams are derived from ``(master_seed, stream_id, substream...)`` through
:class:`numpy.random.SeedSequence` spawn keys and drive a counter-based
Philox generator, so any replication can be regenerated on its own without
replaying the others.  Innovations and covariates use different substreams
of the same :class:`SeedSpec`, which keeps them independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import special

from garchx import _core

__all__ = [
    "SeedSpec",
    "InnovationDist",
    "ExogProcess",
    "draw_innovations",
    "draw_exogenous",
    "INNOVATION_STREAM",
    "EXOG_STREAM",
]

INNOVATION_STREAM = 0
EXOG_STREAM = 1
INITIAL_STREAM = 2


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if int(self.stream_id) < 0:
            raise ValueError("stream_id must be nonnegative")

    def generator(self, *substream: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id), *substream))
        return np.random.Generator(np.random.Philox(ss))

    def with_stream(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)


@dataclass(frozen=True)
class InnovationDist:
    """
    Zero-mean, unit-variance innovation law.

    ``kind`` is ``"gaussian"`` or ``"student_t"``; the Student t is rescaled
    by ``sqrt((nu - 2) / nu)`` and needs ``nu > 4`` so that the fourth moment
    exists.
    """

    kind: str = "gaussian"
    nu: float | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            return
        if self.kind != "student_t":
            raise ValueError(f"unknown innovation distribution {self.kind!r}")
        if self.nu is None or not self.nu > 4:
            raise ValueError("standardized Student t needs nu > 4")

    @property
    def kurtosis(self) -> float:
        if self.kind == "gaussian":
            return 3.0
        return 3.0 * (self.nu - 2.0) / (self.nu - 4.0)

    def abs_moment(self, p: float) -> float:
        """E|eps|^p (inf when it does not exist)."""
        if self.kind == "gaussian":
            return 2.0 ** (p / 2) * special.gamma((p + 1) / 2) / np.sqrt(np.pi)
        nu = self.nu
        if p >= nu:
            return np.inf
        raw = nu ** (p / 2) * special.gamma((p + 1) / 2) * special.gamma((nu - p) / 2)
        raw /= np.sqrt(np.pi) * special.gamma(nu / 2)
        return raw * ((nu - 2.0) / nu) ** (p / 2)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        return rng.standard_t(self.nu, size) * np.sqrt((self.nu - 2.0) / self.nu)

    def to_dict(self) -> dict:
        return {"kind": self.kind} if self.kind == "gaussian" else {"kind": self.kind, "nu": self.nu}

    @classmethod
    def from_dict(cls, d: Mapping) -> "InnovationDist":
        return cls(d.get("kind", "gaussian"), d.get("nu"))


@dataclass(frozen=True)
class ExogProcess:
    """
    Stationary covariate process.

    kinds
        ``iid_gaussian``  x_t = loc + scale * N(0,1)
        ``iid_cauchy``    x_t = loc + scale * Cauchy(0,1)
        ``ar1``           x_t = phi x_{t-1} + noise_t, noise Gaussian or Cauchy
                          with the given ``scale``; requires |phi| < 1
        ``shifted_iid``   x_t = shift + N(0,1)

    ``burn_in`` AR(1) steps are simulated from ``x = 0`` and discarded.
    """

    kind: str = "iid_gaussian"
    loc: float = 0.0
    scale: float = 1.0
    phi: float = 0.0
    noise: str = "gaussian"
    shift: float = 0.0
    burn_in: int = 10_000

    KINDS = ("iid_gaussian", "iid_cauchy", "ar1", "shifted_iid")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown exogenous process {self.kind!r}")
        if self.kind == "ar1":
            if not abs(self.phi) < 1:
                raise ValueError("AR(1) covariate needs |phi| < 1")
            if self.noise not in ("gaussian", "cauchy"):
                raise ValueError("AR(1) noise must be 'gaussian' or 'cauchy'")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")

    @property
    def heavy_tailed(self) -> bool:
        return self.kind == "iid_cauchy" or (self.kind == "ar1" and self.noise == "cauchy")

    def abs_moment_finite(self, p: float) -> bool:
        """Whether E|x|^p is finite (Cauchy-driven laws only have p < 1)."""
        return p < 1.0 if self.heavy_tailed else True

    def _noise(self, rng, size):
        if self.noise == "cauchy":
            return self.scale * rng.standard_cauchy(size)
        return self.scale * rng.standard_normal(size)

    def sample_marginal(self, rng: np.random.Generator, size) -> np.ndarray:
        """
        Independent draws from the law of a single burned-in value.

        For the AR(1) kinds this is the exact law of ``x`` after ``burn_in``
        steps from 0: Gaussian noise sums to a Gaussian and Cauchy noise sums
        to a Cauchy with scale ``scale * sum |phi|^k``.
        """
        if self.kind == "iid_gaussian":
            return self.loc + self.scale * rng.standard_normal(size)
        if self.kind == "iid_cauchy":
            return self.loc + self.scale * rng.standard_cauchy(size)
        if self.kind == "shifted_iid":
            return self.shift + rng.standard_normal(size)
        n, phi = self.burn_in, self.phi
        if n == 0:
            return np.zeros(size)
        if self.noise == "cauchy":
            a = abs(phi)
            width = n if a == 0 else (1.0 - a**n) / (1.0 - a)
            return self.scale * width * rng.standard_cauchy(size)
        var = n if phi == 0 else (1.0 - phi ** (2 * n)) / (1.0 - phi**2)
        return self.scale * np.sqrt(var) * rng.standard_normal(size)

    def simulate_rows(self, rng: np.random.Generator, rows: int, steps: int) -> tuple[np.ndarray, np.ndarray]:
        """
        ``rows`` independent stretches: a stationary start ``x0`` (shape
        ``(rows,)``) and the following ``steps`` values (shape ``(rows, steps)``).
        """
        x0 = self.sample_marginal(rng, rows)
        if self.kind != "ar1":
            return x0, self.sample_marginal(rng, (rows, steps))
        noise = self._noise(rng, (rows, steps))
        out = np.empty((rows, steps))
        _core.ar1_kernel(x0, float(self.phi), noise, out)
        return x0, out

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "burn_in": self.burn_in}
        if self.kind in ("iid_gaussian", "iid_cauchy"):
            d.update(loc=self.loc, scale=self.scale)
        elif self.kind == "ar1":
            d.update(phi=self.phi, noise=self.noise, scale=self.scale)
        else:
            d.update(shift=self.shift)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExogProcess":
        return cls(**dict(d))


def draw_innovations(dist: InnovationDist, n: int, seed: SeedSpec) -> np.ndarray:
    """``n`` iid innovations, deterministic for a given seed."""
    if n < 1:
        raise ValueError("n must be positive")
    return dist.sample(seed.generator(INNOVATION_STREAM), n)


def draw_exogenous(proc: ExogProcess, n: int, seed: SeedSpec) -> np.ndarray:
    """
    ``n`` consecutive covariate values.

    AR(1) processes start at 0, run ``proc.burn_in`` steps that are discarded
    and then return the next ``n`` values.  The iid kinds need no burn-in.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = seed.generator(EXOG_STREAM)
    if proc.kind != "ar1":
        return proc.sample_marginal(rng, n)
    noise = proc._noise(rng, (1, proc.burn_in + n))
    out = np.empty_like(noise)
    _core.ar1_kernel(np.zeros(1), float(proc.phi), noise, out)
    return out[0, proc.burn_in :].copy()
