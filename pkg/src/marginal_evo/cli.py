"""Command-line entry point.

Subcommands:

  run        evolve a population and write generations.csv, best_psd.csv,
             config.txt and manifest.json into --out-dir
  psd-check  estimate the spectrum at a fixed genotype (no evolution) and
             write psd.csv; prints the band RelMSE against the theory curve
  sweep      mean spectral abscissa over a genotype grid; writes sweep.csv

Exit codes: 0 success, 2 configuration error, 3 I/O error.  All artifacts
are written inside --out-dir via write-then-rename.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace as dc_replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import artifacts
from .config import (
    DynamicsParams,
    ExperimentConfig,
    config_text,
    load_config,
    reference_config,
)
from .diagnostics import abscissa_sweep
from .errors import MarginalEvoError
from .evolution import run_evolution, snapshot_spectrum
from .spectra import relmse_band, usable_band

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

THREADS_ENV = "MARGINAL_EVO_THREADS"


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marginal-evo")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an evolution experiment")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="experiment file to load")
    src.add_argument("--model", choices=("A", "B", "C"), help="reference config shortcut")
    run.add_argument("--seed", type=int, default=None, help="master seed override")
    run.add_argument("--out-dir", default=None, help="output directory")
    run.add_argument("--generations", type=int, default=None, help="override generation count")
    run.add_argument("--population", type=int, default=None, help="override population size")
    run.add_argument("--threads", type=int, default=_default_threads(),
                     help="evaluation workers (0 = one per CPU)")

    psd = sub.add_parser("psd-check", help="spectrum snapshot at a fixed genotype")
    psd.add_argument("--sigma-w2", type=float, required=True)
    psd.add_argument("--seed", type=int, default=0)
    psd.add_argument("--seeds", type=int, default=8, help="seeds averaged")
    psd.add_argument("--out-dir", default="out")
    psd.add_argument("--n-units", type=int, default=None)
    psd.add_argument("--n-steps", type=int, default=None)
    psd.add_argument("--dt", type=float, default=None)
    psd.add_argument("--gamma", type=float, default=None)
    psd.add_argument("--kappa", type=float, default=None)

    sweep = sub.add_parser("sweep", help="spectral abscissa over a genotype grid")
    sweep.add_argument("--sigma-grid", required=True, metavar="LO:HI:N")
    sweep.add_argument("--seeds", type=int, default=16, help="matrices per grid point")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--n-units", type=int, default=256)
    sweep.add_argument("--gamma", type=float, default=1.0)
    sweep.add_argument("--out-dir", default="out")
    return parser


def _ensure_out_dir(out_dir: str) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dynamics_overrides(args, base: DynamicsParams) -> DynamicsParams:
    kv = {}
    for name in ("n_units", "n_steps", "dt", "gamma", "kappa"):
        value = getattr(args, name)
        if value is not None:
            kv[name] = value
    params = DynamicsParams(**{**{f: getattr(base, f) for f in
                                  ("n_units", "n_steps", "dt", "gamma", "kappa")}, **kv})
    params.validate()
    return params


def cmd_run(args) -> int:
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        cfg = reference_config(args.model)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    evo_over = {}
    if args.generations is not None:
        evo_over["generations"] = args.generations
    if args.population is not None:
        evo_over["population"] = args.population
    if evo_over:
        overrides["evolution"] = dc_replace(cfg.evolution, **evo_over)
    if overrides:
        cfg = cfg.replace(**overrides)
    cfg.validate()

    out = _ensure_out_dir(cfg.out_dir)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    gen_times: list[float] = []
    last = [t0]

    def sink(record):
        now = time.perf_counter()
        gen_times.append(now - last[0])
        last[0] = now
        print(
            f"gen {record.generation:4d}  best_F={record.best_total:.6g}  "
            f"mean_sigma={record.mean_sigma:.6g}  best_lambda={record.best_lambda:.6g}",
            flush=True,
        )

    records = run_evolution(cfg, progress_sink=sink, threads=args.threads)
    final = records[-1]
    # the published spectrum is averaged harder than a fitness evaluation so
    # the figure is not dominated by single near-critical matrix draws
    best_pair = snapshot_spectrum(
        final.best_sigma, cfg, max(cfg.evolution.n_seeds, 16)
    )
    finished = datetime.now(timezone.utc).isoformat()

    artifacts.atomic_write(out / "config.txt", config_text(cfg))
    artifacts.write_generations_csv(records, out / "generations.csv")
    artifacts.write_psd_csv(best_pair, out / "best_psd.csv")
    paths = [str(out / name) for name in
             ("config.txt", "generations.csv", "best_psd.csv", "manifest.json")]
    artifacts.write_manifest(
        cfg, paths, started, finished, time.perf_counter() - t0, gen_times,
        out / "manifest.json",
    )
    return EXIT_OK


def cmd_psd_check(args) -> int:
    if not (args.sigma_w2 >= 0.0):
        raise MarginalEvoError(f"sigma_w2 must be >= 0, got {args.sigma_w2}")
    if args.seeds < 1:
        raise MarginalEvoError(f"seeds must be >= 1, got {args.seeds}")
    base = reference_config("C")
    params = _dynamics_overrides(args, base.dynamics)
    cfg = ExperimentConfig(
        dynamics=params,
        evolution=base.evolution,
        fitness=base.fitness,
        variant=base.variant,
        master_seed=args.seed,
        out_dir=args.out_dir,
    )
    out = _ensure_out_dir(args.out_dir)
    pair = snapshot_spectrum(args.sigma_w2, cfg, args.seeds)
    artifacts.write_psd_csv(pair, out / "psd.csv")

    keep = usable_band(
        pair.omega, cfg.fitness.band_min, cfg.fitness.band_max, params.gamma, args.sigma_w2
    )
    value = relmse_band(
        pair.x_sim[keep], pair.x_th[keep], pair.omega[keep],
        cfg.fitness.band_min, cfg.fitness.band_max,
    )
    print(f"band RelMSE = {value:.6g}", flush=True)
    return EXIT_OK


def _parse_grid(spec: str) -> np.ndarray:
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError:
        raise MarginalEvoError(f"--sigma-grid expects LO:HI:N, got {spec!r}")
    if n < 1 or not (hi >= lo) or lo < 0:
        raise MarginalEvoError(f"invalid sigma grid {spec!r}")
    return np.linspace(lo, hi, n)


def cmd_sweep(args) -> int:
    grid = _parse_grid(args.sigma_grid)
    if args.seeds < 1:
        raise MarginalEvoError(f"seeds must be >= 1, got {args.seeds}")
    out = _ensure_out_dir(args.out_dir)
    rows = abscissa_sweep(grid, args.n_units, args.gamma, args.seeds, args.seed)
    artifacts.write_sweep_csv(rows, out / "sweep.csv")
    for sigma_w2, lam_mean, lam_std in rows:
        print(f"sigma_w2={sigma_w2:.6g}  lambda_mean={lam_mean:.6g}  "
              f"lambda_std={lam_std:.6g}", flush=True)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "psd-check":
            return cmd_psd_check(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        parser.error(f"unknown command {args.command!r}")
    except MarginalEvoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
