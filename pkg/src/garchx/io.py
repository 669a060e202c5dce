"""
Series files, run configurations and fit results on disk.

Series are CSV files with the header ``t,R,x`` and optionally
``sigma_delta,eps``; reals are written with 17 significant digits so that
doubles round-trip exactly.  Configurations and fit results are JSON and are
validated against the schemas shipped in ``garchx/schemas``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np

from garchx.model import ModelSpec, ThetaVector
from garchx.qmle import FitResult
from garchx.simulate import InitialVol, SimConfig
from garchx.stochastic import ExogProcess, InnovationDist, SeedSpec

__all__ = [
    "ConfigError",
    "SeriesData",
    "RunConfig",
    "load_series",
    "read_series",
    "save_series",
    "load_config",
    "parse_config",
    "save_fit",
    "load_fit",
    "schema",
]

REQUIRED_COLUMNS = ("t", "R", "x")
OPTIONAL_COLUMNS = ("sigma_delta", "eps")


class ConfigError(ValueError):
    """Invalid configuration, series file or result document."""


@lru_cache(maxsize=None)
def schema(name: str) -> dict:
    """Load a shipped JSON schema (``run_config`` or ``fit_result``)."""
    text = resources.files("garchx").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _validate(doc: Any, name: str) -> None:
    try:
        jsonschema.validate(doc, schema(name))
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{name} schema violation at {where}: {err.message}") from None


# ---------------------------------------------------------------------------
# series


@dataclass
class SeriesData:
    t: np.ndarray
    R: np.ndarray
    x: np.ndarray
    sigma_delta: np.ndarray | None = None
    eps: np.ndarray | None = None


def read_series(path) -> SeriesData:
    """
    Read a series CSV.

    Raises
    ------
    ConfigError
        On a missing column, an empty file ("no data rows"), a row with the
        wrong number of fields, a non-finite value or non-increasing ``t``.
        Row numbers count data rows from 1.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigError(f"{path}: no data rows")
        header = [h.strip() for h in header]
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ConfigError(f"{path}: missing column(s) {missing}; expected header t,R,x")
        unknown = [c for c in header if c not in REQUIRED_COLUMNS + OPTIONAL_COLUMNS]
        if unknown:
            raise ConfigError(f"{path}: unknown column(s) {unknown}")
        cols: dict[str, list[float]] = {c: [] for c in header}
        for k, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise ConfigError(f"{path}: row {k} has {len(row)} fields, expected {len(header)}")
            for name, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise ConfigError(f"{path}: row {k}: {name}={cell!r} is not a number") from None
                if not math.isfinite(v):
                    raise ConfigError(f"{path}: row {k}: {name} is not finite")
                cols[name].append(v)
    if not cols["t"]:
        raise ConfigError(f"{path}: no data rows")
    t = np.array(cols["t"])
    if np.any(t != np.round(t)):
        raise ConfigError(f"{path}: t must be integer")
    steps = np.diff(t)
    if np.any(steps <= 0):
        k = int(np.flatnonzero(steps <= 0)[0]) + 2
        raise ConfigError(f"{path}: t is not strictly increasing at row {k}")
    opt = {c: np.array(cols[c]) if c in cols else None for c in OPTIONAL_COLUMNS}
    return SeriesData(t.astype(np.int64), np.array(cols["R"]), np.array(cols["x"]), **opt)


def load_series(path) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(R, x)`` from a series CSV."""
    s = read_series(path)
    return s.R, s.x


def save_series(path, R, x, t=None, sigma_delta=None, eps=None) -> None:
    R = np.asarray(R, dtype=float)
    x = np.asarray(x, dtype=float)
    if R.shape != x.shape or R.ndim != 1:
        raise ValueError("R and x must be 1-d arrays of equal length")
    t = np.arange(1, R.shape[0] + 1) if t is None else np.asarray(t)
    extra = [(n, np.asarray(a, dtype=float)) for n, a in (("sigma_delta", sigma_delta), ("eps", eps)) if a is not None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "R", "x"] + [n for n, _ in extra])
        for i in range(R.shape[0]):
            w.writerow([int(t[i]), f"{R[i]:.17g}", f"{x[i]:.17g}"] + [f"{a[i]:.17g}" for _, a in extra])


# ---------------------------------------------------------------------------
# configurations


@dataclass
class RunConfig:
    """A validated run configuration (the raw document is kept in ``raw``)."""

    spec: ModelSpec
    theta: ThetaVector
    innovation: InnovationDist
    exogenous: ExogProcess
    seed: SeedSpec
    raw: dict

    def block(self, name: str) -> dict:
        return dict(self.raw.get(name, {}))

    def sim_config(self, T: int | None = None, n_paths: int | None = None) -> SimConfig:
        b = self.block("simulate")
        if T is None and "T" not in b:
            raise ConfigError("simulate.T is required")
        s0: float | InitialVol | None = b.get("sigma0_delta")
        if "initial_law" in b:
            if s0 is not None:
                raise ConfigError("give either simulate.sigma0_delta or simulate.initial_law")
            s0 = InitialVol("lognormal", mu=b["initial_law"]["mu"], s=b["initial_law"]["s"])
        return SimConfig(
            T=int(T if T is not None else b["T"]),
            sigma0_delta=s0,
            eps0=float(b.get("eps0", 0.0)),
            n_paths=int(n_paths if n_paths is not None else b.get("n_paths", 1)),
            seed=self.seed,
            innovation=self.innovation,
            exogenous=self.exogenous,
        )


def _seed(doc) -> SeedSpec:
    if doc is None:
        return SeedSpec()
    if isinstance(doc, int):
        return SeedSpec(doc, 0)
    return SeedSpec(int(doc["master_seed"]), int(doc.get("stream_id", 0)))


def parse_config(doc: Mapping) -> RunConfig:
    """Validate a configuration document and build the library objects."""
    _validate(doc, "run_config")
    m = doc["model"]
    try:
        spec = ModelSpec.from_dict(m)
        theta = spec.theta(m.get("theta", {}), bounds=m.get("bounds"))
        innovation = InnovationDist.from_dict(doc.get("innovation", {"kind": "gaussian"}))
        exogenous = ExogProcess.from_dict(doc.get("exogenous", {"kind": "iid_gaussian"}))
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from None
    return RunConfig(spec, theta, innovation, exogenous, _seed(doc.get("seed")), dict(doc))


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON: {err}") from None
    return parse_config(doc)


# ---------------------------------------------------------------------------
# fit results


def save_fit(result: FitResult, path) -> None:
    doc = result.to_dict()
    _validate(doc, "fit_result")
    Path(path).write_text(json.dumps(doc, indent=2))


def load_fit(path) -> FitResult:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON: {err}") from None
    _validate(doc, "fit_result")
    try:
        return FitResult.from_dict(doc)
    except (ValueError, KeyError) as err:
        raise ConfigError(f"{path}: {err}") from None
