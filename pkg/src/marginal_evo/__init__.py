"""Evolutionary search of a stochastic linear network toward marginal stability."""

from .config import (
    DynamicsParams,
    EvolutionParams,
    ExperimentConfig,
    FitnessWeights,
    ModelVariant,
    derive_seed,
    load_config,
    reference_config,
    save_config,
)
from .diagnostics import (
    LyapunovEstimate,
    MeanFieldResult,
    critical_sigma,
    lyapunov_replica,
    lyapunov_spectral,
    meanfield_chi,
)
from .dynamics import TrajectoryStats, simulate, simulate_two_replica
from .ensembles import (
    ConnectivityMatrix,
    sample_ginibre,
    sample_phased_ginibre,
    sample_real_symmetric,
)
from .evolution import (
    FitnessBreakdown,
    GenerationRecord,
    evaluate,
    mutate,
    run_evolution,
    select,
    snapshot_spectrum,
)
from .spectra import SpectrumPair, estimate_psd, relmse_band, x0, x1, x_theory

__version__ = "0.1.0"

__all__ = [
    "ConnectivityMatrix",
    "DynamicsParams",
    "EvolutionParams",
    "ExperimentConfig",
    "FitnessBreakdown",
    "FitnessWeights",
    "GenerationRecord",
    "LyapunovEstimate",
    "MeanFieldResult",
    "ModelVariant",
    "SpectrumPair",
    "TrajectoryStats",
    "critical_sigma",
    "derive_seed",
    "estimate_psd",
    "evaluate",
    "load_config",
    "lyapunov_replica",
    "lyapunov_spectral",
    "meanfield_chi",
    "mutate",
    "reference_config",
    "relmse_band",
    "run_evolution",
    "sample_ginibre",
    "sample_phased_ginibre",
    "sample_real_symmetric",
    "save_config",
    "select",
    "simulate",
    "simulate_two_replica",
    "snapshot_spectrum",
    "x0",
    "x1",
    "x_theory",
]
