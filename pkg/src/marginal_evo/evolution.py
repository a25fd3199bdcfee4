"""Fitness evaluation and the evolutionary generation loop.

The genotype is a single scalar, the weight variance sigma_w2.  One fitness
evaluation samples n_seeds connectivity matrices from the variant's ensemble,
simulates each, averages the simulated spectra, and assembles

    total = w_spec * RelMSE_band(X_sim, X_th)
          + w_lambda * lambda^2
          + w_crit * (sigma_w2 - gamma^2)^2

with lambda the mean spectral abscissa over the sampled matrices.  A run that
trips the overflow guard is absorbed into a finite penalty fitness
(DIVERGENCE_PENALTY + lambda^2) so supercritical genotypes stay rankable.

Selection is Boltzmann-weighted with annealed inverse temperature; mutation
is Gaussian with a geometrically decaying schedule followed by projection
onto the admissible interval.  Every random draw uses a seed derived from
(master_seed, generation, individual, stream lane), so results are
bit-identical across repeated runs and independent of worker scheduling.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import EvolutionParams, ExperimentConfig, derive_seed
from .diagnostics import lyapunov_spectral
from .dynamics import default_burn_in, simulate
from .ensembles import sample_variant
from .errors import DivergenceError, EmptyBand, InvalidInput, PoleError, ZeroTheory
from .spectra import (
    MIN_BAND_POINTS,
    SpectrumPair,
    default_segments,
    estimate_psd,
    finite_width_coefficient,
    relmse_band,
    usable_band,
    x0,
    x1,
    x_theory,
)

logger = logging.getLogger(__name__)

#: a genotype is a bare weight-variance value
Genotype = float

DIVERGENCE_PENALTY = 1e6

# stream lanes for draws that are not per-replica evaluations; chosen far
# outside the population / replica index ranges so tuples never collide
_INIT_STREAM = 1_000_000
_SELECT_STREAM = 1_000_001
_SNAPSHOT_STREAM = 1_000_002
_MUTATE_LANE = 1_000_000


@dataclass(frozen=True)
class FitnessBreakdown:
    """One individual's fitness terms; weighted terms sum to total."""

    spec_term: float
    lambda_term: float
    crit_term: float
    total: float
    lambda_value: float
    relmse: float
    diverged: bool = False


@dataclass
class GenerationRecord:
    """Population statistics of one generation (recorded before selection)."""

    generation: int
    genotypes: np.ndarray
    fitness: list[FitnessBreakdown]
    mean_sigma: float
    std_sigma: float
    best_sigma: float
    mean_lambda: float
    best_lambda: float
    beta: float
    mut_std: float

    @property
    def best_total(self) -> float:
        return min(f.total for f in self.fitness)

    @property
    def mean_total(self) -> float:
        return float(np.mean([f.total for f in self.fitness]))


def evaluate(
    genotype: Genotype, cfg: ExperimentConfig, generation: int, individual: int
) -> FitnessBreakdown:
    """Seed-averaged three-term fitness of one genotype.

    Matrix and noise streams for replica r use lanes 2r and 2r+1.  Numerical
    failures (overflow, unusable band) are converted into the penalty
    fitness with a logged flag; only configuration errors propagate.
    """
    params = cfg.dynamics
    n_seeds = cfg.evolution.n_seeds
    weights = cfg.fitness
    n_recorded = params.n_steps - default_burn_in(params)
    segments = default_segments(n_recorded, params.dt, weights.band_max)

    lambdas = np.empty(n_seeds)
    psd_sum: np.ndarray | None = None
    grid: np.ndarray | None = None
    clean_runs = 0
    diverged = False
    for r in range(n_seeds):
        m_seed = derive_seed(cfg.master_seed, generation, individual, 2 * r)
        n_seed = derive_seed(cfg.master_seed, generation, individual, 2 * r + 1)
        cm = sample_variant(cfg.variant, params.n_units, genotype, m_seed)
        lambdas[r] = lyapunov_spectral(params, cm).value
        try:
            stats = simulate(params, cm, n_seed)
        except DivergenceError as exc:
            logger.warning(
                "gen %d ind %d replica %d diverged (%s); applying penalty fitness",
                generation,
                individual,
                r,
                exc,
            )
            diverged = True
            continue
        grid, psd = estimate_psd(stats, params, segments)
        psd_sum = psd if psd_sum is None else psd_sum + psd
        clean_runs += 1

    lam = float(lambdas.mean())
    if not diverged:
        avg_psd = psd_sum / clean_runs
        keep = usable_band(grid, weights.band_min, weights.band_max, params.gamma, genotype)
        try:
            if int(keep.sum()) < MIN_BAND_POINTS:
                raise EmptyBand("near-pole exclusion left too few band points")
            theory = x_theory(grid[keep], params, genotype)
            relmse = relmse_band(
                avg_psd[keep], theory, grid[keep], weights.band_min, weights.band_max
            )
        except (EmptyBand, ZeroTheory, PoleError) as exc:
            logger.warning(
                "gen %d ind %d spectral metric unusable (%s); applying penalty fitness",
                generation,
                individual,
                exc,
            )
            diverged = True

    if diverged:
        return FitnessBreakdown(
            spec_term=0.0,
            lambda_term=0.0,
            crit_term=0.0,
            total=DIVERGENCE_PENALTY + lam**2,
            lambda_value=lam,
            relmse=float("inf"),
            diverged=True,
        )

    spec_term = weights.w_spec * relmse
    lambda_term = weights.w_lambda * lam**2
    crit_term = weights.w_crit * (genotype - params.gamma**2) ** 2
    return FitnessBreakdown(
        spec_term=spec_term,
        lambda_term=lambda_term,
        crit_term=crit_term,
        total=spec_term + lambda_term + crit_term,
        lambda_value=lam,
        relmse=relmse,
    )


def select(fitness: np.ndarray, beta: float, seed: int, count: int) -> np.ndarray:
    """Boltzmann-weighted parent indices, sampled with replacement.

    Probabilities are proportional to exp(-beta * (F - min F)); shifting by
    the minimum keeps the weights in (0, 1] for numerical stability without
    changing the distribution.
    """
    fitness = np.asarray(fitness, dtype=float)
    if fitness.size == 0:
        raise InvalidInput("fitness list is empty")
    if np.isnan(fitness).any():
        raise InvalidInput("fitness contains NaN")
    if not (beta >= 0.0):
        raise InvalidInput(f"beta must be >= 0, got {beta}")
    if count < 1:
        raise InvalidInput(f"count must be >= 1, got {count}")
    weights = np.exp(-beta * (fitness - fitness.min()))
    p = weights / weights.sum()
    rng = np.random.default_rng(seed)
    return rng.choice(fitness.size, size=count, replace=True, p=p)


def mutate(parent: Genotype, generation: int, evo: EvolutionParams, seed: int) -> Genotype:
    """Gaussian perturbation with the generation-k schedule, then projection."""
    std = evo.mut_std_at(generation)
    rng = np.random.default_rng(seed)
    child = parent + std * rng.standard_normal()
    return float(np.clip(child, evo.clip_low, evo.clip_high))


def _evaluate_population(
    pop: np.ndarray,
    cfg: ExperimentConfig,
    generation: int,
    executor: ThreadPoolExecutor | None,
) -> list[FitnessBreakdown]:
    if executor is None:
        return [evaluate(g, cfg, generation, i) for i, g in enumerate(pop)]
    futures = [
        executor.submit(evaluate, g, cfg, generation, i) for i, g in enumerate(pop)
    ]
    return [f.result() for f in futures]


def _make_record(
    generation: int, pop: np.ndarray, fits: list[FitnessBreakdown], evo: EvolutionParams
) -> GenerationRecord:
    totals = np.array([f.total for f in fits])
    best = int(np.argmin(totals))
    return GenerationRecord(
        generation=generation,
        genotypes=pop.copy(),
        fitness=fits,
        mean_sigma=float(pop.mean()),
        std_sigma=float(pop.std()),
        best_sigma=float(pop[best]),
        mean_lambda=float(np.mean([f.lambda_value for f in fits])),
        best_lambda=fits[best].lambda_value,
        beta=evo.beta_at(generation),
        mut_std=evo.mut_std_at(generation),
    )


def run_evolution(
    cfg: ExperimentConfig,
    progress_sink=None,
    threads: int = 1,
) -> list[GenerationRecord]:
    """Full generation loop; bit-identical results for a given master_seed.

    progress_sink, when given, is called with each GenerationRecord as it is
    produced.  threads > 1 (or 0 for one worker per CPU) evaluates the
    population concurrently; per-task seed derivation keeps the outcome
    independent of scheduling.
    """
    cfg.validate()
    evo = cfg.evolution
    rng_init = np.random.default_rng(derive_seed(cfg.master_seed, 0, _INIT_STREAM, 0))
    pop = rng_init.uniform(evo.init_low, evo.init_high, evo.population)

    workers = threads if threads > 0 else (os.cpu_count() or 1)
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    records: list[GenerationRecord] = []
    try:
        for k in range(evo.generations):
            fits = _evaluate_population(pop, cfg, k, executor)
            record = _make_record(k, pop, fits, evo)
            records.append(record)
            if progress_sink is not None:
                progress_sink(record)
            if k == evo.generations - 1:
                break
            totals = np.array([f.total for f in fits])
            parents = select(
                totals, evo.beta_at(k), derive_seed(cfg.master_seed, k, _SELECT_STREAM, 0), evo.population
            )
            children = np.empty(evo.population)
            for j, parent_idx in enumerate(parents):
                children[j] = mutate(
                    pop[parent_idx], k, evo, derive_seed(cfg.master_seed, k, j, _MUTATE_LANE)
                )
            if evo.elitism:
                children[0] = pop[int(np.argmin(totals))]  # carried over unmutated
            pop = children
    finally:
        if executor is not None:
            executor.shutdown()
    return records


def snapshot_spectrum(
    genotype: Genotype, cfg: ExperimentConfig, n_seeds: int
) -> SpectrumPair:
    """Averaged simulated spectrum plus theory curves for one genotype.

    Used for final best-individual output.  Diverged seeds are skipped;
    DivergenceError propagates only if every seed diverges.
    """
    if n_seeds < 1:
        raise InvalidInput(f"n_seeds must be >= 1, got {n_seeds}")
    params = cfg.dynamics
    n_recorded = params.n_steps - default_burn_in(params)
    segments = default_segments(n_recorded, params.dt, cfg.fitness.band_max)
    psd_sum: np.ndarray | None = None
    grid: np.ndarray | None = None
    used = 0
    last_divergence: DivergenceError | None = None
    for r in range(n_seeds):
        m_seed = derive_seed(cfg.master_seed, cfg.evolution.generations, _SNAPSHOT_STREAM, 2 * r)
        n_seed = derive_seed(
            cfg.master_seed, cfg.evolution.generations, _SNAPSHOT_STREAM, 2 * r + 1
        )
        cm = sample_variant(cfg.variant, params.n_units, genotype, m_seed)
        try:
            stats = simulate(params, cm, n_seed)
        except DivergenceError as exc:
            logger.warning("snapshot replica %d diverged (%s); skipping", r, exc)
            last_divergence = exc
            continue
        grid, psd = estimate_psd(stats, params, segments)
        psd_sum = psd if psd_sum is None else psd_sum + psd
        used += 1
    if used == 0:
        raise last_divergence
    x_sim = psd_sum / used
    g, k = params.gamma, params.kappa
    curve0 = x0(grid, g, k, genotype)
    curve1 = x1(grid, g, k, genotype)
    x_th = curve0 + finite_width_coefficient(params) * curve1
    return SpectrumPair(
        omega=grid, x_sim=x_sim, x0=curve0, x1=curve1, x_th=x_th, n_seeds_averaged=used
    )
