"""
Command-line interface.

Exit codes: 0 on success, 1 on invalid input or usage, 2 on numerical
failure (path divergence, singular covariance).  Errors are reported on
stderr as a single JSON object ``{"error": ..., "kind": ..., "message": ...}``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from garchx import __version__
from garchx.diagnostics import check_moment, check_stationarity
from garchx.io import ConfigError, load_config, load_fit, load_series, save_fit
from garchx.qmle import FitOptions, confidence_region, fit
from garchx.simulate import PathDivergedError, default_threads, simulate_batch
from garchx.stochastic import SeedSpec
from garchx.var import VarMethod, VarRequest, compare_methods, compute_var

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class NumericalFailure(ArithmeticError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _seed(cfg_seed: SeedSpec, override: int | None) -> SeedSpec:
    return cfg_seed if override is None else SeedSpec(override, 0)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    sim = cfg.sim_config(T=args.T, n_paths=args.n_paths)
    if args.seed is not None:
        from dataclasses import replace

        sim = replace(sim, seed=SeedSpec(args.seed, 0))
    paths = simulate_batch(cfg.spec, cfg.theta, sim, threads=args.threads)
    out = Path(args.out)
    written = []
    for i, p in enumerate(paths):
        target = out if len(paths) == 1 else out.with_name(f"{out.stem}_{i}{out.suffix}")
        p.to_csv(target)
        written.append(str(target))
        if args.cache:
            c = Path(args.cache)
            p.to_cache(c if len(paths) == 1 else c.with_name(f"{c.stem}_{i}{c.suffix}"))
    summary = {"files": written, "T": sim.T, "n_paths": len(paths), "checksums": [p.checksum() for p in paths]}
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = load_config(args.model)
    R, x = load_series(args.data)
    b = cfg.block("fit")
    opts = FitOptions(
        max_iter=int(b.get("max_iter", 1000)),
        grad_tol=float(b.get("grad_tol", 1e-6)),
        newton_polish=bool(b.get("newton_polish", True)),
    )
    starts = args.starts if args.starts is not None else b.get("starts")
    init = starts if starts and starts > 1 else (cfg.theta if "theta" in cfg.raw["model"] else None)
    res = fit(cfg.spec, R, x, init=init, options=opts, fixed=b.get("fixed"), bounds=cfg.raw["model"].get("bounds"))
    if args.out:
        save_fit(res, args.out)
    se = res.std_errors() if res.B_n is not None else {}
    lines = [f"{'param':<14}{'estimate':>16}{'std.err':>14}"]
    for name in res.spec.param_names:
        s = f"{se[name]:14.6g}" if name in se else f"{'-':>14}"
        lines.append(f"{name:<14}{res.theta_hat[name]:16.8g}{s}")
    lines.append(f"loglik (mean)  {res.loglik:.10g}")
    lines.append(f"kappa_hat      {res.kappa_hat:.6g}")
    lines.append(f"n_obs          {res.n_obs}")
    lines.append(f"converged      {res.converged}")
    if res.boundary:
        lines.append("warning: estimate on the boundary of the parameter box")
    if res.singular:
        lines.append("warning: A_n is singular; no covariance reported")
    print("\n".join(lines))
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = load_config(args.model)
    b = cfg.block("check")
    n_mc = args.mc if args.mc is not None else int(b.get("n_mc", 1_000_000))
    seed = _seed(cfg.seed, args.seed)
    moment = args.moment if args.moment is not None else b.get("moment")
    if moment is not None:
        rep = check_moment(cfg.spec, cfg.theta, int(moment), cfg.innovation, cfg.exogenous, n_mc, seed)
    else:
        alpha = args.alpha if args.alpha is not None else float(b.get("alpha", 1.0))
        rep = check_stationarity(cfg.spec, cfg.theta, alpha, cfg.innovation, cfg.exogenous, n_mc, seed)
    print(rep.table())
    if args.out:
        _emit(rep.to_dict(), args.out)
    return EXIT_OK


def cmd_var(args) -> int:
    cfg = load_config(args.model)
    b = cfg.block("var")

    def pick(name, default):
        v = getattr(args, name)
        return v if v is not None else b.get(name, default)

    method = pick("method", "indep")
    req = VarRequest(
        level=float(pick("level", 0.99)),
        horizon=int(pick("horizon", 10)),
        n=int(pick("n", 100_000)),
        burn_in=int(pick("burn_in", 5000)),
        method=VarMethod.INDEPENDENT if method == "compare" else VarMethod(method),
        seed=_seed(cfg.seed, args.seed),
        sigma0_delta=b.get("sigma0_delta"),
        r0=float(b.get("r0", 0.0)),
        warmup=int(pick("warmup", 0)),
        price=float(pick("price", 1.0)),
        innovation=cfg.innovation,
        exogenous=cfg.exogenous,
    )
    if method == "compare":
        cmp = compare_methods(cfg.spec, cfg.theta, req, int(pick("reps", 100)), threads=args.threads)
        d = cmp.to_dict()
        print(
            "\n".join(
                [
                    f"reps          {cmp.reps}",
                    f"mean VaR m1   {d['mean_m1']:.6g} (sd {d['sd_m1']:.4g})",
                    f"mean VaR m2   {d['mean_m2']:.6g} (sd {d['sd_m2']:.4g})",
                    f"Welch t       {cmp.t_stat:.4f}",
                    f"p-value       {cmp.p_value:.4f}",
                ]
            )
        )
        if args.out:
            _emit(d, args.out)
        return EXIT_OK
    res = compute_var(cfg.spec, cfg.theta, req, threads=args.threads)
    print(res.table())
    if args.out:
        _emit(res.to_dict(), args.out)
    return EXIT_OK


def cmd_ci(args) -> int:
    res = load_fit(args.fit)
    if res.B_n is None:
        raise NumericalFailure("fit result carries no covariance (singular A_n or derivative-free fit)")
    params = [p.strip() for p in args.params.split(",")] if args.params else None
    try:
        region = confidence_region(res, params, p=1.0 - args.level)
    except np.linalg.LinAlgError as err:
        raise NumericalFailure(str(err)) from None
    lines = [
        f"{int(round(args.level * 100))}% confidence region for {', '.join(region.names)}",
        f"n = {region.n_obs}, chi2 quantile ({len(region.names)} df) = {region.chi2_quantile:.6g}",
        f"{'param':<14}{'estimate':>16}{'lower':>16}{'upper':>16}",
    ]
    for name, (lo, hi) in region.intervals().items():
        lines.append(f"{name:<14}{res.theta_hat[name]:16.8g}{lo:16.8g}{hi:16.8g}")
    print("\n".join(lines))
    if args.out:
        _emit(region.to_dict(), args.out)
    return EXIT_OK


def cmd_version(args) -> int:
    print(f"garchx {__version__}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $GARCHX_THREADS or the CPU count)")

    p = _Parser(prog="garchx", description="Simulate, fit, diagnose and compute VaR for GARCHX(1,1) models.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="simulate paths to CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--T", type=int)
    s.add_argument("--n-paths", dest="n_paths", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--cache", help="also write a binary .npz cache")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", parents=[common], help="quasi-maximum-likelihood fit")
    f.add_argument("--data", required=True)
    f.add_argument("--model", required=True)
    f.add_argument("--out")
    f.add_argument("--starts", type=int)
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("check", parents=[common], help="stationarity / moment conditions")
    c.add_argument("--model", required=True)
    g = c.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float)
    g.add_argument("--moment", type=int)
    c.add_argument("--mc", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("var", parents=[common], help="value at risk")
    v.add_argument("--model", required=True)
    v.add_argument("--method", choices=["indep", "ergodic", "compare"])
    v.add_argument("--level", type=float)
    v.add_argument("--horizon", type=int)
    v.add_argument("--n", type=int)
    v.add_argument("--burn-in", dest="burn_in", type=int)
    v.add_argument("--warmup", type=int)
    v.add_argument("--reps", type=int)
    v.add_argument("--price", type=float)
    v.add_argument("--seed", type=int)
    v.add_argument("--out")
    v.set_defaults(func=cmd_var)

    i = sub.add_parser("ci", parents=[common], help="confidence region from a fit")
    i.add_argument("--fit", required=True)
    i.add_argument("--params")
    i.add_argument("--level", type=float, default=0.95)
    i.add_argument("--out")
    i.set_defaults(func=cmd_ci)

    sub.add_parser("version", help="print the version").set_defaults(func=cmd_version)
    return p


def _error(kind: str, err: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(err).__name__, "kind": kind, "message": str(err)}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        sys.stderr.write(str(err) + "\n")
        return _error("usage", err, EXIT_INVALID)
    if args.command is None:
        sys.stderr.write(parser.format_usage())
        return _error("usage", UsageError("no subcommand given"), EXIT_INVALID)
    if getattr(args, "threads", None) is None:
        args.threads = default_threads()
    try:
        return args.func(args)
    except (PathDivergedError, NumericalFailure, FloatingPointError, np.linalg.LinAlgError) as err:
        return _error("numerical", err, EXIT_NUMERICAL)
    except (ConfigError, ValueError, KeyError, OSError) as err:
        return _error("validation", err, EXIT_INVALID)


if __name__ == "__main__":
    sys.exit(main())
