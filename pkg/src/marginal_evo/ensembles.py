"""Connectivity-matrix ensembles.

Three samplers, all deterministic given (n, genotype, seed):

* ginibre           - i.i.d. Gaussian entries, mean 0, variance sigma_w2/n
* real_symmetric    - GOE-type: symmetric, off-diagonal variance sigma_w2/n,
                      diagonal variance 2*sigma_w2/n
* phased_ginibre    - G_ij * cos(theta_ij) with G a fresh ginibre draw and
                      independent theta_ij ~ N(0, phase_std**2)

The phase field modulates entry magnitudes and keeps the ensemble zero-mean;
dropping the signs instead would leave an almost-everywhere-positive matrix
whose rank-one mean component carries a spectral outlier of order
sqrt(2n/pi) * sigma_w, far outside the stability regime the phased variant
is meant to explore.  No variance renormalization is applied, so the entry
second moment shrinks by E[cos^2 theta] = (1 + exp(-2*phase_std**2)) / 2
and the marginal-stability point sits at sigma_w2 = gamma^2 / E[cos^2 theta].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import GINIBRE, PHASED_GINIBRE, REAL_SYMMETRIC, ModelVariant
from .errors import InvalidParameter


@dataclass(frozen=True, eq=False)
class ConnectivityMatrix:
    entries: np.ndarray  # (n, n), float64
    genotype: float  # generating variance sigma_w2
    ensemble: str
    seed: int

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _check_args(n: int, sigma_w2: float) -> None:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidParameter(f"n must be an integer >= 2, got {n}")
    if not (sigma_w2 >= 0.0):
        raise InvalidParameter(f"sigma_w2 must be >= 0, got {sigma_w2}")


def sample_ginibre(n: int, sigma_w2: float, seed: int) -> ConnectivityMatrix:
    """Ginibre matrix: independent N(0, sigma_w2/n) entries."""
    _check_args(n, sigma_w2)
    rng = np.random.default_rng(seed)
    entries = rng.standard_normal((n, n)) * np.sqrt(sigma_w2 / n)
    return ConnectivityMatrix(entries, float(sigma_w2), GINIBRE, seed)


def sample_real_symmetric(n: int, sigma_w2: float, seed: int) -> ConnectivityMatrix:
    """Symmetric GOE-type matrix; W equals its transpose exactly.

    Off-diagonal pairs share a single N(0, sigma_w2/n) draw; the diagonal
    is drawn with doubled variance (GOE convention).
    """
    _check_args(n, sigma_w2)
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.standard_normal((n, n)), k=1) * np.sqrt(sigma_w2 / n)
    entries = upper + upper.T
    diag = rng.standard_normal(n) * np.sqrt(2.0 * sigma_w2 / n)
    entries[np.diag_indices(n)] = diag
    return ConnectivityMatrix(entries, float(sigma_w2), REAL_SYMMETRIC, seed)


def sample_phased_ginibre(
    n: int, sigma_w2: float, phase_std: float, seed: int
) -> ConnectivityMatrix:
    """Phase-modulated Ginibre matrix: G_ij * cos(theta_ij).

    The Gaussian field and the phase field are drawn from the same stream,
    Gaussian first.  phase_std = 0 reduces exactly to the ginibre draw.
    """
    _check_args(n, sigma_w2)
    if not (phase_std >= 0.0):
        raise InvalidParameter(f"phase_std must be >= 0, got {phase_std}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) * np.sqrt(sigma_w2 / n)
    theta = rng.standard_normal((n, n)) * phase_std
    entries = g * np.cos(theta)
    return ConnectivityMatrix(entries, float(sigma_w2), PHASED_GINIBRE, seed)


def sample_variant(variant: ModelVariant, n: int, sigma_w2: float, seed: int) -> ConnectivityMatrix:
    """Sample from the ensemble selected by a model variant."""
    if variant.ensemble == GINIBRE:
        return sample_ginibre(n, sigma_w2, seed)
    if variant.ensemble == REAL_SYMMETRIC:
        return sample_real_symmetric(n, sigma_w2, seed)
    if variant.ensemble == PHASED_GINIBRE:
        return sample_phased_ginibre(n, sigma_w2, variant.phase_std, seed)
    raise InvalidParameter(f"unknown ensemble {variant.ensemble!r}")


def dump_matrix(matrix: ConnectivityMatrix, path: str | Path) -> None:
    """Debug dump, row-major: '.npy' binary or CSV with a metadata header."""
    path = Path(path)
    if path.suffix == ".npy":
        np.save(path, matrix.entries)
        return
    header = (
        f"ensemble={matrix.ensemble} n={matrix.n} "
        f"sigma_w2={matrix.genotype:.17g} seed={matrix.seed}"
    )
    np.savetxt(path, matrix.entries, delimiter=",", header=header)
