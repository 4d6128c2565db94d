"""Command-line entry point.

Exit codes: 0 success (stopping events are results), 1 invalid configuration,
2 runtime blow-up or a failed check battery.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .core import ConfigError, ModelConfig, load_config, validate_config
from .ensemble import run_ensemble, worker_count
from .io import write_columns, write_csv, write_json, write_manifest
from .kernel_checks import run_battery
from .meanfield import beta_equivalence_check, meanfield_from_config, meanfield_moments
from .picard import PicardDivergence, picard_check
from .stefan import SimulationBlowUp, simulate

log = logging.getLogger("stefan_spread")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2


def _times(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="model configuration JSON")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--paths", type=int, default=None, help="number of paths / seeds")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--snapshot-times", type=_times, default=[], metavar="T1,T2,...",
                        help="times at which field snapshots are written")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="stefan-spread", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="one trajectory")
    sub.add_parser("ensemble", parents=[common], help="Monte Carlo ensemble")
    p = sub.add_parser("picard-check", parents=[common], help="Picard contraction and stepper agreement")
    p.add_argument("--propagator", choices=("grid", "exact"), default="grid")
    sub.add_parser("meanfield", parents=[common], help="large-alpha asymptotic system")
    sub.add_parser("kernel-test", parents=[common], help="Green's function property battery")
    return ap


def _load(args) -> ModelConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = validate_config(cfg.with_seed(args.seed))
    return cfg


def cmd_simulate(cfg: ModelConfig, args) -> int:
    out = Path(args.out)
    tr = simulate(cfg, 0, snapshot_times=args.snapshot_times)
    write_columns(out / "trajectory.csv", {
        "step": np.rint(tr.times / cfg.grid.dt).astype(int),
        "t": tr.times,
        "s_plus": tr.s_plus,
        "s_minus": tr.s_minus,
        "spread": tr.spread,
        "g1": tr.g1,
        "g2": tr.g2,
        "eta1_total": tr.eta1_total,
        "eta2_total": tr.eta2_total,
    })
    write_json(out / "stop.json", tr.stop.to_dict() if tr.stop else {"kind": None})
    y = np.concatenate(([0.0], cfg.grid.y, [cfg.lam]))
    for t in args.snapshot_times:
        k = int(round(t / cfg.grid.dt))
        key = next((s for s in tr.snapshots if abs(s - k * cfg.grid.dt) < 1e-12), None)
        if key is None:
            log.warning("no snapshot at t=%g (after the stop or outside the horizon)", t)
            continue
        v1, v2 = tr.snapshots[key]
        pad = lambda v: np.concatenate(([0.0], v, [cfg.far_field_level]))  # noqa: E731
        write_columns(out / f"snapshot_{k:06d}.csv", {"y": y, "v1": pad(v1), "v2": pad(v2)})
    fn = tr.functionals
    cols = {"step": np.arange(1, len(next(iter(fn.values.values()), [])) + 1)}
    for name in fn.forms:
        cols[f"{name}_sup"] = np.asarray(fn.values[name])
        cols[f"{name}_threshold"] = np.asarray(fn.thresholds[name])
    write_columns(out / "stopping_functionals.csv", cols)
    write_manifest(out, cfg, "simulate", {"backend": kernels.BACKEND,
                                          "functional_first_fire": fn.first_fire})
    print(f"stop: {tr.stop.kind.value if tr.stop else 'none'}; "
          f"{tr.n_accepted} accepted times; final spread "
          f"{tr.spread[-1] if tr.n_accepted else float('nan'):.6g}")
    return EXIT_OK


def cmd_ensemble(cfg: ModelConfig, args) -> int:
    out = Path(args.out)
    n = args.paths or 100
    summ = run_ensemble(cfg, n)
    write_columns(out / "summary.csv", summ.summary_columns())
    write_csv(out / "paths.csv",
              ["path", "stop_kind", "stop_step", "stop_time", "triggering_value",
               "n_accepted", "terminal_spread"],
              ([r.path_index, r.stop_kind, r.stop_step, r.stop_time, r.triggering_value,
                r.n_accepted, r.spread[-1] if r.n_accepted else float("nan")]
               for r in summ.records))
    write_json(out / "stop_histogram.json", summ.histogram)
    write_manifest(out, cfg, "ensemble", {"n_paths": n})
    print(f"{n} paths on {worker_count(n)} worker(s); stops: {summ.histogram}")
    return EXIT_OK


def cmd_picard(cfg: ModelConfig, args) -> int:
    out = Path(args.out)
    n = args.paths or 1
    runs = []
    for p in range(n):
        try:
            runs.append(picard_check(cfg, p, propagator=args.propagator))
        except PicardDivergence as exc:
            log.error("path %d: %s", p, exc)
            return EXIT_BLOWUP
        r = runs[-1]
        print(f"path {p}: {r['iterations']} iterations, decreasing={r['strictly_decreasing']}, "
              f"residual={r['residual']:.2e}, stepper diff={r['stepper_sup_diff']:.2e}")
    write_json(out / "picard.json", runs)
    write_manifest(out, cfg, "picard-check", {"propagator": args.propagator, "n_paths": n})
    return EXIT_OK


def cmd_meanfield(cfg: ModelConfig, args) -> int:
    out = Path(args.out)
    path = meanfield_from_config(cfg)
    write_columns(out / "meanfield.csv", {
        "step": np.arange(len(path.times)), "t": path.times,
        "w_inf": path.w_inf, "spread": path.spread})
    extra = {"beta_defect": beta_equivalence_check(path)}
    if args.paths and args.paths > 1:
        batch = meanfield_from_config(cfg, n_paths=args.paths, keep_increments=False)
        x = batch.w_inf[:, -1]
        mean, var = meanfield_moments(cfg.alpha, cfg.lam, cfg.far_field_level, cfg.horizon_T)
        extra["moments"] = {
            "n_paths": args.paths, "t": cfg.horizon_T,
            "sample_mean": float(x.mean()), "closed_form_mean": mean,
            "sample_variance": float(x.var(ddof=1)), "closed_form_variance": var,
        }
    write_json(out / "meanfield.json", extra)
    write_manifest(out, cfg, "meanfield")
    return EXIT_OK


def cmd_kernel_test(cfg: ModelConfig, args) -> int:
    results = run_battery(cfg.alpha, cfg.lam, cfg.grid.ny, seed=cfg.seed,
                          ito_paths=args.paths if args.paths is not None else 10_000)
    for r in results:
        print(r.line())
    write_json(Path(args.out) / "kernel_test.json",
               [{"name": r.name, "value": r.value, "tol": r.tol, "passed": r.passed} for r in results])
    write_manifest(args.out, cfg, "kernel-test")
    return EXIT_OK if all(r.passed for r in results) else EXIT_BLOWUP


COMMANDS = {
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "picard-check": cmd_picard,
    "meanfield": cmd_meanfield,
    "kernel-test": cmd_kernel_test,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _load(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args)
    except (SimulationBlowUp, PicardDivergence) as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
