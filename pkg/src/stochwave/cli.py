"""Command-line entry point: ``python -m stochwave <command> --config FILE``.

Exit status 0 on success, 2 for a bad configuration and 3 when too many
paths went non-finite.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import analysis
from .circle_kernel import (InitialData, dalembert_row, kernel_space_integral,
                            space_quadrature)
from .girsanov import constant_shift_weight, reweight_estimate
from .grid import GridSpec
from .harness import (ConfigError, ExperimentConfig, NumericalFailure,
                      atomic_write, check_invalid_budget, emit, fmt_real,
                      load_config, refine_study, run_paths, run_sweep)
from .noise import NoiseGrid, generate, shift
from .solver import ModelParams, run_batch, run_path

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must fit in 64 unsigned bits")
        cfg.base_seed = args.seed
    if args.alpha_list:
        try:
            cfg.alpha_list = [float(a) for a in args.alpha_list.split(",")]
        except ValueError as e:
            raise ConfigError(f"--alpha-list: {e}") from e
        cfg.validate()
    return cfg


def _out(args, cfg, default):
    return args.out or cfg.output or default


def _write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=1, default=analysis._jsonable,
                                  sort_keys=True) + "\n")


def cmd_simulate(args, cfg):
    spec = cfg.spec()
    rec = run_path(cfg.params(), cfg.initial_data(spec), spec,
                   seed=cfg.base_seed, hit_level=cfg.hit_level,
                   record_history=True)
    path = _out(args, cfg, "field.csv")
    hist = rec.history
    if args.format == "json":
        _write_json(path, {"seed": rec.seed, "alpha": rec.alpha,
                           "stop_reason": rec.stop_reason, "dt": spec.dt,
                           "dx": spec.dx, "field": hist})
    else:
        lines = ["t," + ",".join(f"x{j}" for j in range(spec.nx))]
        for n, row in enumerate(hist):
            lines.append(",".join(fmt_real(v) for v in [n * spec.dt, *row]))
        atomic_write(path, "\n".join(lines) + "\n")
    print(f"seed {rec.seed}: {rec.stop_reason} at t={rec.stop_index * spec.dt:.6g}"
          f", min {rec.min_over_run:.6g}")
    check_invalid_budget([rec])


def cmd_sweep(args, cfg):
    res = run_sweep(cfg, workers=args.workers)
    emit(res, args.format, _out(args, cfg, f"sweep.{args.format}"))
    if args.paths_out:
        recs = [r for a in cfg.alpha_list for r in res.records[float(a)]]
        emit(recs, args.format, args.paths_out)
    for r in res.rows:
        print(f"alpha={r.alpha:g}: {r.n_hit}/{r.n_paths} hit, "
              f"95% CI [{r.ci_lo:.4f}, {r.ci_hi:.4f}], invalid {r.invalid_count}")
    check_invalid_budget([r for v in res.records.values() for r in v])


def cmd_refine(args, cfg):
    table = refine_study(cfg, levels=args.levels)
    emit(table, args.format, _out(args, cfg, f"refine.{args.format}"))
    for L in table:
        print(f"nx={L.nx}: {L.n_hit}/{L.n_paths} hit, "
              f"mean singular integral {L.mean_singular_integral:.6g}")


def cmd_holder(args, cfg):
    spec = cfg.spec()
    params = cfg.params().replace(drift_enabled=False)
    seeds = [cfg.base_seed + i for i in range(cfg.n_paths)]
    recs = run_batch(params, cfg.initial_data(spec), spec, seeds=seeds,
                     hit_level=-math.inf, record_history=True)
    stack = np.stack([r.history for r in recs])
    out = {}
    for d in ("time", "space"):
        try:
            est = analysis.holder_estimate(stack, d)
        except ValueError as e:
            raise ConfigError(f"grid too coarse for a {d} fit: {e}") from e
        out[d] = est
        print(f"{d}: beta_hat = {est.beta_hat:.4f} +- {est.stderr:.4f}")
    _write_json(_out(args, cfg, "holder.json"),
                {k: analysis.asdict(v) for k, v in out.items()})


def cmd_girsanov_check(args, cfg):
    spec = cfg.spec()
    init = cfg.initial_data(spec)
    params = cfg.params().replace(drift_enabled=False)
    K = args.shift
    probe = float(np.mean(init.u0))
    lw, plain, shifted = [], [], []
    for i in range(cfg.n_paths):
        nz = generate(spec, cfg.base_seed + i)
        lw.append(constant_shift_weight(K, nz).log_density)
        plain.append(_mean_indicator(params, init, spec, nz, probe))
        shifted.append(_mean_indicator(params, init, spec, shift(nz, K), probe))
    dens = np.exp(lw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rw = reweight_estimate(plain, lw)
    direct = float(np.mean(shifted))
    direct_se = float(np.std(shifted, ddof=1) / math.sqrt(len(shifted)))
    rep = {"K": K, "n_paths": cfg.n_paths,
           "density_mean": float(dens.mean()),
           "density_se": float(dens.std(ddof=1) / math.sqrt(dens.size)),
           "reweighted": rw.estimate, "reweighted_se": rw.stderr,
           "ess": rw.ess, "low_ess": rw.low_ess, "direct": direct, "direct_se": direct_se}
    _write_json(_out(args, cfg, "girsanov.json"), rep)
    print(json.dumps(rep, indent=1))


def _mean_indicator(params, init, spec, noise, level):
    """Bounded functional: 1 if the spatial mean at the horizon exceeds level."""
    rec = run_path(params, init, spec, noise=noise, hit_level=-math.inf,
                   record_history=True)
    return float(np.mean(rec.history[-1]) > level)


def cmd_diagnose(args, cfg):
    spec = cfg.spec()
    params = cfg.params()
    rec = run_path(params, cfg.initial_data(spec), spec, seed=cfg.base_seed,
                   hit_level=cfg.hit_level, record_history=True)
    hist = rec.history
    reports = []
    m = hist.shape[0] - 1
    if m >= 2:
        apex = (m, int(np.argmin(hist[m])))
        reports.append(analysis.report_record(
            rec.seed, "cone_monotonicity",
            analysis.cone_monotonicity_check(hist, apex, 100, params, spec,
                                             seed=cfg.base_seed)))
    a = params.alpha
    eps = min(0.25, 0.45 * (1 - a)) if a < 1 else 0.25
    K = float(max(np.max(hist), 1.0))
    reports.append(analysis.report_record(
        rec.seed, "dyadic",
        analysis.dyadic_counts(hist, K, eps, 30, spec,
                               alpha=a if a < 1 else None)))
    if a > 3:
        eps_s = 0.5 * (a - 3) / (2 * (a + 1))
        # lowest level reached after the start, so the cone is non-empty
        delta = float(np.min(rec.minima[1:])) if rec.minima.size > 1 else 0.0
        try:
            reports.append(analysis.report_record(
                rec.seed, "sector",
                analysis.sector_diagnostic(hist, params, spec, delta, eps_s)))
        except ValueError as e:
            reports.append(analysis.report_record(rec.seed, "sector",
                                                  {"skipped": str(e)}))
    _write_json(_out(args, cfg, "diagnose.json"), reports)
    for r in reports:
        print(r["diagnostic"], "done")


def kernel_selftest() -> list[tuple[str, bool, str]]:
    """Quick checks of the kernel and the noise-free solver."""
    results = []
    for J in (1.0, 2.0):
        for t in (0.3, 0.7, 1.9):
            q = space_quadrature(t, J, x=0.3137 * J, n=10**4)
            err = abs(q - kernel_space_integral(t, J)) / t
            results.append((f"space integral t={t} J={J}", err < 1e-6,
                            f"rel err {err:.2e}"))
    spec = GridSpec(1.0, 64, 256)
    init = InitialData.cosine(spec, 1.0, 0.5, mode=2)
    params = ModelParams(alpha=1.0, drift_enabled=False)
    rec = run_path(params, init, spec, noise=NoiseGrid.zeros(spec),
                   hit_level=-math.inf, record_history=True)
    err = float(np.max(np.abs(rec.history[-1] - dalembert_row(init, spec.nt))))
    results.append(("noise-free leapfrog vs d'Alembert", err < 1e-10,
                    f"sup err {err:.2e}"))
    return results


def cmd_kernel_selftest(args, cfg):
    ok = True
    for name, passed, detail in kernel_selftest():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if ok else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "refine": cmd_refine,
    "holder": cmd_holder,
    "girsanov-check": cmd_girsanov_check,
    "diagnose": cmd_diagnose,
    "kernel-selftest": cmd_kernel_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stochwave",
                                description="Stochastic wave equation with a "
                                            "singular drift on the circle.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, help="overrides base_seed")
    p.add_argument("--alpha-list", metavar="CSV")
    p.add_argument("--paths-out", metavar="PATH",
                   help="sweep: also write the per-path table here")
    p.add_argument("--levels", type=int, default=3, help="refine: grid levels")
    p.add_argument("--shift", type=float, default=1.0,
                   help="girsanov-check: constant shift K")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = _config(args)
        code = COMMANDS[args.command](args, cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
