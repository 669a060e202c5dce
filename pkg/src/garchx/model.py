"""
GARCHX(1,1) model family.

The volatility recursion is

    sigma_t^delta = g(eps_{t-1}) + u(x_{t-1}) + c(eps_{t-1}) sigma_{t-1}^delta

with ``R_t = sigma_t eps_t``.  Five families are supported; each fixes the
shape of ``g`` and ``c`` and the coordinate layout of the parameter vector.
The exogenous term is ``u(x) = lambda * u1(x)`` with ``u1`` picked from a
closed menu of transforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from garchx import _core

__all__ = [
    "Family",
    "UTransform",
    "ModelSpec",
    "ThetaVector",
    "g_eval",
    "c_eval",
    "u_eval",
    "vol_step",
    "causal_volatility",
    "default_bounds",
]


class Family(str, Enum):
    STANDARD = "standard"
    GJR = "gjr"
    TGARCH = "tgarch"
    APARCH = "aparch"
    FGARCH = "fgarch"

    @property
    def code(self) -> int:
        return _FAMILY_CODES[self]

    @property
    def smooth(self) -> bool:
        return self is not Family.FGARCH


_FAMILY_CODES = {
    Family.STANDARD: _core.STANDARD,
    Family.GJR: _core.GJR,
    Family.TGARCH: _core.TGARCH,
    Family.APARCH: _core.APARCH,
    Family.FGARCH: _core.FGARCH,
}

PARAM_NAMES = {
    Family.STANDARD: ("omega", "lambda", "alpha1", "beta1"),
    Family.GJR: ("omega", "lambda", "alpha1", "beta1", "gamma1"),
    Family.TGARCH: ("omega", "lambda", "alpha1_plus", "alpha1_minus", "beta1"),
    Family.APARCH: ("omega", "lambda", "alpha1", "beta1", "eta1"),
    Family.FGARCH: ("omega", "lambda", "alpha1", "beta1", "eta1", "eta2"),
}

_FIXED_DELTA = {Family.STANDARD: 2.0, Family.GJR: 2.0, Family.TGARCH: 1.0}

_BOUNDS = {
    "omega": (1e-8, 1e4),
    "lambda": (0.0, 1e3),
    "alpha1": (0.0, 10.0),
    "beta1": (0.0, 0.9999),
    "gamma1": (0.0, 10.0),
    "alpha1_plus": (0.0, 10.0),
    "alpha1_minus": (0.0, 10.0),
    "eta1": (-0.999, 0.999),
    "eta2": (-10.0, 10.0),
}


@dataclass(frozen=True)
class UTransform:
    """Transform ``u1`` applied to the lagged covariate."""

    kind: str = "abs"
    power: float = 1.0

    KINDS = ("abs", "sqrt_abs", "square", "power_abs")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown u transform {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "power_abs" and not self.power > 0:
            raise ValueError("power_abs transform needs power > 0")

    @property
    def code(self) -> int:
        return self.KINDS.index(self.kind)

    @property
    def exponent(self) -> float:
        """Power of |x| that u1 grows like; used for moment checks."""
        return {"abs": 1.0, "sqrt_abs": 0.5, "square": 2.0}.get(self.kind, self.power)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "abs":
            return np.abs(x)
        if self.kind == "sqrt_abs":
            return np.sqrt(np.abs(x))
        if self.kind == "square":
            return x * x
        return np.abs(x) ** self.power

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "power_abs":
            d["power"] = self.power
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "UTransform":
        return cls(kind=d["kind"], power=float(d.get("power", 1.0)))


@dataclass(frozen=True)
class ModelSpec:
    """
    A concrete GARCHX family.

    Parameters
    ----------
    family : Family or str
    delta : float, optional
        Exponent of the volatility equation.  Fixed to 2 for the standard and
        GJR families and 1 for T-GARCH; required for apARCH and fGARCH.
    u_transform : UTransform, optional
    fgarch_gamma : float, optional
        Exponent of the fGARCH news-impact term (>= 1).  Defaults to ``delta``.
        Structural: it is not estimated.
    """

    family: Family
    delta: float | None = None
    u_transform: UTransform = field(default_factory=UTransform)
    fgarch_gamma: float | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        delta = self.delta
        if fam in _FIXED_DELTA:
            if delta is not None and float(delta) != _FIXED_DELTA[fam]:
                raise ValueError(f"{fam.value} requires delta={_FIXED_DELTA[fam]:g}, got {delta}")
            delta = _FIXED_DELTA[fam]
        elif delta is None:
            raise ValueError(f"{fam.value} requires an explicit delta")
        delta = float(delta)
        if not delta > 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "delta", delta)
        if isinstance(self.u_transform, str):
            object.__setattr__(self, "u_transform", UTransform(self.u_transform))
        gam = self.fgarch_gamma
        if fam is Family.FGARCH:
            gam = delta if gam is None else float(gam)
            if gam < 1.0:
                raise ValueError("fgarch_gamma must be >= 1")
        else:
            gam = delta
        object.__setattr__(self, "fgarch_gamma", float(gam))

    @property
    def param_names(self) -> tuple[str, ...]:
        return PARAM_NAMES[self.family]

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def index(self, name: str) -> int:
        return self.param_names.index(name)

    def theta(self, values: Mapping[str, float] | None = None, bounds=None, **kwargs) -> "ThetaVector":
        """Build a ThetaVector from named values; unspecified coordinates are 0 (omega: 0.1), clipped into the box."""
        vals = dict(values or {})
        vals.update(kwargs)
        unknown = set(vals) - set(self.param_names)
        if unknown:
            raise ValueError(f"unknown parameters for {self.family.value}: {sorted(unknown)}")
        lower, upper = default_bounds(self)
        if bounds:
            for name, (lo, hi) in bounds.items():
                i = self.index(name)
                lower[i], upper[i] = float(lo), float(hi)
        defaults = np.clip([0.1 if n == "omega" else 0.0 for n in self.param_names], lower, upper)
        v = np.array([float(vals.get(n, d)) for n, d in zip(self.param_names, defaults)])
        return ThetaVector(self, v, lower, upper)

    # kernel argument pack
    def _args(self):
        return self.family.code, self.delta, self.fgarch_gamma, self.u_transform.code, float(self.u_transform.power)

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "delta": self.delta, "u_transform": self.u_transform.to_dict()}
        if self.family is Family.FGARCH:
            d["fgarch_gamma"] = self.fgarch_gamma
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelSpec":
        u = d.get("u_transform", {"kind": "abs"})
        u = UTransform(u) if isinstance(u, str) else UTransform.from_dict(u)
        return cls(Family(d["family"]), d.get("delta"), u, d.get("fgarch_gamma"))


def default_bounds(spec: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Default parameter box for a family."""
    lower = np.array([_BOUNDS[n][0] for n in spec.param_names])
    upper = np.array([_BOUNDS[n][1] for n in spec.param_names])
    if spec.family in (Family.APARCH, Family.FGARCH):
        lower[spec.index("alpha1")] = 1e-6
    return lower, upper


@dataclass
class ThetaVector:
    """A point of the parameter box together with the box itself."""

    spec: ModelSpec
    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).copy()
        self.lower = np.asarray(self.lower, dtype=float).copy()
        self.upper = np.asarray(self.upper, dtype=float).copy()
        m = self.spec.n_params
        if not (self.values.shape == self.lower.shape == self.upper.shape == (m,)):
            raise ValueError(f"{self.spec.family.value} needs {m} coordinates {self.spec.param_names}")
        self._check_box()
        if not self.in_box():
            bad = [
                n
                for n, v, lo, hi in zip(self.spec.param_names, self.values, self.lower, self.upper)
                if not lo <= v <= hi
            ]
            raise ValueError(f"parameters outside the box: {bad}")

    def _check_box(self):
        names = self.spec.param_names
        lo, hi = self.lower, self.upper
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        if not lo[0] > 0:
            raise ValueError("the lower bound on omega must be strictly positive")
        nonneg = {"lambda", "alpha1", "gamma1", "alpha1_plus", "alpha1_minus", "beta1"}
        for i, n in enumerate(names):
            if n in nonneg and lo[i] < 0:
                raise ValueError(f"{n} must be >= 0")
        ib = names.index("beta1")
        if hi[ib] >= 1.0:
            raise ValueError("beta1 must stay below 1")
        if self.spec.family in (Family.APARCH, Family.FGARCH):
            if not lo[names.index("alpha1")] > 0:
                raise ValueError("alpha1 must be strictly positive for apARCH/fGARCH")
            ie = names.index("eta1")
            if lo[ie] <= -1 or hi[ie] >= 1:
                raise ValueError("eta1 must lie in (-1, 1)")

    def in_box(self, values=None) -> bool:
        v = self.values if values is None else np.asarray(values, dtype=float)
        return bool(np.all(v >= self.lower) and np.all(v <= self.upper))

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.spec.index(name)])

    @property
    def names(self) -> tuple[str, ...]:
        return self.spec.param_names

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    def with_values(self, values: Sequence[float]) -> "ThetaVector":
        return ThetaVector(self.spec, np.asarray(values, dtype=float), self.lower, self.upper)

    def replace(self, **kwargs) -> "ThetaVector":
        v = self.values.copy()
        for k, val in kwargs.items():
            v[self.spec.index(k)] = val
        return self.with_values(v)

    @property
    def omega_floor(self) -> float:
        return float(self.lower[0])

    def bounds_dict(self) -> dict[str, list[float]]:
        return {n: [float(lo), float(hi)] for n, lo, hi in zip(self.names, self.lower, self.upper)}


def _pack(theta: ThetaVector):
    fam, delta, gam, ukind, upow = theta.spec._args()
    return fam, theta.values, delta, gam, ukind, upow


def g_eval(spec: ModelSpec, theta: ThetaVector, arg: float, representation: str = "innovation") -> float:
    """
    Evaluate ``g = omega + g1``.

    With ``representation="innovation"`` the argument is the lagged innovation
    and ``g`` is the constant ``omega`` for every family.  With
    ``representation="fit"`` the argument is the lagged observed return and
    the ARCH term is folded into ``g`` (smooth families only), e.g. for apARCH
    ``omega + alpha1 (|R| - eta1 R)^delta``.
    """
    fam, p, delta, gam, _, _ = _pack(theta)
    if representation == "innovation":
        return float(_core.g_value(fam, p, delta, gam, float(arg)))
    if representation == "fit":
        if not spec.family.smooth:
            raise ValueError("fGARCH has no return-driven representation")
        return float(_core.g_fit_value(fam, p, delta, float(arg)))
    raise ValueError(f"unknown representation {representation!r}")


def c_eval(spec: ModelSpec, theta: ThetaVector, eps) -> float | np.ndarray:
    """Evaluate ``c(eps)``; accepts a scalar or a 1-D array."""
    fam, p, delta, gam, _, _ = _pack(theta)
    if np.ndim(eps) == 0:
        return float(_core.c_value(fam, p, delta, gam, float(eps)))
    return _core.c_array(fam, p, delta, gam, np.ascontiguousarray(eps, dtype=float))


def u_eval(spec: ModelSpec, theta: ThetaVector, x) -> float | np.ndarray:
    """Evaluate ``u(x) = lambda * u1(x)``; accepts a scalar or a 1-D array."""
    _, p, _, _, ukind, upow = _pack(theta)
    if np.ndim(x) == 0:
        return float(_core.u_value(p, ukind, upow, float(x)))
    return _core.u_array(p, ukind, upow, np.ascontiguousarray(x, dtype=float))


def vol_step(spec: ModelSpec, theta: ThetaVector, sigma_delta_prev: float, eps_prev: float, x_prev: float) -> float:
    """One step of the volatility recursion, returning sigma_t^delta."""
    if sigma_delta_prev < 0:
        raise ValueError("sigma_delta_prev must be nonnegative")
    fam, p, delta, gam, ukind, upow = _pack(theta)
    return float(
        _core.vol_step_value(fam, p, delta, gam, ukind, upow, float(sigma_delta_prev), float(eps_prev), float(x_prev))
    )


def causal_volatility(
    spec: ModelSpec,
    theta: ThetaVector,
    eps_hist,
    x_hist,
    K: int,
    tol: float = 1e-14,
) -> tuple[float, int]:
    """
    Truncated causal (infinite-history) representation of sigma_t^delta.

    Parameters
    ----------
    eps_hist, x_hist : array_like
        Histories ordered newest first: ``eps_hist[k]`` is ``eps_{t-1-k}``.
        Both need at least ``K + 1`` entries.
    K : int
        Largest lag included.
    tol : float
        Stop as soon as the running product of ``c`` terms drops below ``tol``.

    Returns
    -------
    value : float
    k_used : int
        Index of the last lag included in the sum.
    """
    if K < 1:
        raise ValueError("K must be a positive integer")
    eps_hist = np.asarray(eps_hist, dtype=float)
    x_hist = np.asarray(x_hist, dtype=float)
    if eps_hist.shape[0] < K + 1 or x_hist.shape[0] < K + 1:
        raise ValueError("histories must hold at least K + 1 values")
    fam, p, delta, gam, ukind, upow = _pack(theta)
    g = _core.g_value
    total = 0.0
    prod = 1.0
    k_used = 0
    for k in range(K + 1):
        if k > 0:
            prod *= _core.c_value(fam, p, delta, gam, eps_hist[k - 1])
            if prod < tol or prod == 0.0:
                break
        total += prod * (g(fam, p, delta, gam, eps_hist[k]) + _core.u_value(p, ukind, upow, x_hist[k]))
        k_used = k
    return total, k_used
