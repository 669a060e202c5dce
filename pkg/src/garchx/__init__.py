"""GARCHX(1,1) models: simulation, condition checks, QML estimation and value at risk."""

__version__ = "0.1.0"

from garchx.model import Family, ModelSpec, ThetaVector, UTransform, causal_volatility, c_eval, g_eval, u_eval, vol_step
from garchx.stochastic import ExogProcess, InnovationDist, SeedSpec, draw_exogenous, draw_innovations
from garchx.simulate import InitialVol, PathDivergedError, PathSample, SimConfig, simulate_batch, simulate_path
from garchx.diagnostics import (
    ConditionReport,
    ErgodicityFixedPoint,
    Verdict,
    check_moment,
    check_stationarity,
    forgetting_rate,
    tgarch_ergodicity_certificate,
)
from garchx.qmle import FitOptions, FitResult, confidence_region, derivatives, fit, neg_loglik
from garchx.var import VarMethod, VarRequest, VarResult, compare_methods, var_ergodic, var_independent

__all__ = [
    "Family", "ModelSpec", "ThetaVector", "UTransform", "causal_volatility", "c_eval", "g_eval", "u_eval",
    "vol_step", "ExogProcess", "InnovationDist", "SeedSpec", "draw_exogenous", "draw_innovations",
    "InitialVol", "PathDivergedError", "PathSample", "SimConfig", "simulate_batch", "simulate_path",
    "ConditionReport", "ErgodicityFixedPoint", "Verdict", "check_moment", "check_stationarity",
    "forgetting_rate", "tgarch_ergodicity_certificate", "FitOptions", "FitResult", "confidence_region",
    "derivatives", "fit", "neg_loglik", "VarMethod", "VarRequest", "VarResult", "compare_methods",
    "var_ergodic", "var_independent",
]
