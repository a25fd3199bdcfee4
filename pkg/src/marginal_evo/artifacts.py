"""Output files: CSVs, run manifest, atomic writes.

Every file is written to a temporary sibling and renamed into place, so a
failed run never leaves a partial artifact.  Numeric CSV fields use 17
significant digits, which round-trips 64-bit floats exactly.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import fields
from pathlib import Path

from .config import DynamicsParams, EvolutionParams, ExperimentConfig, FitnessWeights
from .dynamics import TrajectoryStats
from .evolution import GenerationRecord
from .spectra import SpectrumPair

TOOL_VERSION = "0.1.0"

GENERATIONS_HEADER = (
    "generation,mean_sigma,std_sigma,best_sigma,mean_lambda,best_lambda,"
    "beta,mut_std,best_total,mean_total"
)
PSD_HEADER = "omega,x_sim,x0,x1,x_th"
SWEEP_HEADER = "sigma_w2,lambda_mean,lambda_std"
TRAJECTORY_HEADER = "step,unit,value"


def fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_generations_csv(records: list[GenerationRecord], path: str | Path) -> None:
    lines = [GENERATIONS_HEADER]
    for r in records:
        lines.append(
            ",".join(
                fmt(v)
                for v in (
                    r.generation,
                    r.mean_sigma,
                    r.std_sigma,
                    r.best_sigma,
                    r.mean_lambda,
                    r.best_lambda,
                    r.beta,
                    r.mut_std,
                    r.best_total,
                    r.mean_total,
                )
            )
        )
    atomic_write(path, "\n".join(lines) + "\n")


def write_psd_csv(pair: SpectrumPair, path: str | Path) -> None:
    lines = [PSD_HEADER]
    for i in range(len(pair.omega)):
        lines.append(
            ",".join(
                fmt(float(col[i]))
                for col in (pair.omega, pair.x_sim, pair.x0, pair.x1, pair.x_th)
            )
        )
    atomic_write(path, "\n".join(lines) + "\n")


def write_sweep_csv(rows: list[tuple[float, float, float]], path: str | Path) -> None:
    lines = [SWEEP_HEADER]
    for sigma_w2, lam_mean, lam_std in rows:
        lines.append(f"{fmt(sigma_w2)},{fmt(lam_mean)},{fmt(lam_std)}")
    atomic_write(path, "\n".join(lines) + "\n")


def write_trajectory_csv(stats: TrajectoryStats, path: str | Path) -> None:
    """Debug dump of a recorded trajectory; step indices are absolute."""
    if stats.samples is None:
        raise ValueError("trajectory carries no recorded samples")
    lines = [TRAJECTORY_HEADER]
    for i, row in enumerate(stats.samples):
        step = stats.burn_in + 1 + i
        lines.extend(f"{step},{unit},{fmt(float(v))}" for unit, v in enumerate(row))
    atomic_write(path, "\n".join(lines) + "\n")


def config_dict(cfg: ExperimentConfig) -> dict:
    return {
        "variant": {"tag": cfg.variant.tag, "ensemble": cfg.variant.ensemble,
                    "phase_std": cfg.variant.phase_std},
        "dynamics": {f.name: getattr(cfg.dynamics, f.name) for f in fields(DynamicsParams)},
        "evolution": {f.name: getattr(cfg.evolution, f.name) for f in fields(EvolutionParams)},
        "fitness": {f.name: getattr(cfg.fitness, f.name) for f in fields(FitnessWeights)},
        "master_seed": cfg.master_seed,
        "out_dir": cfg.out_dir,
    }


def write_manifest(
    cfg: ExperimentConfig,
    artifact_paths: list[str],
    started: str,
    finished: str,
    wall_seconds: float,
    generation_seconds: list[float],
    path: str | Path,
) -> None:
    manifest = {
        "tool_version": TOOL_VERSION,
        "master_seed": cfg.master_seed,
        "config": config_dict(cfg),
        "started": started,
        "finished": finished,
        "wall_seconds": wall_seconds,
        "generation_seconds": generation_seconds,
        "artifacts": artifact_paths,
    }
    atomic_write(path, json.dumps(manifest, indent=2) + "\n")
