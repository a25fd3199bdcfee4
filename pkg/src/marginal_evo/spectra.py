"""Power spectra: theoretical kernels, Welch estimation, band metrics.

Convention: all spectra are two-sided spectral densities in angular
frequency omega (1/depth units), so the noise-only process (W = 0) has the
exact Lorentzian baseline 2*kappa / (omega^2 + gamma^2) and the process
variance is the integral of the density over all omega divided by 2*pi.

The theoretical curves are

    c(w)  = 2*kappa / (w^2 + gamma^2)
    X0(w) = c(w) * (w^2 + gamma^2) / (w^2 + gamma^2 - sigma_w2)
    X1(w) = (sigma_w2 / 2) * c(w) * (w^2 + gamma^2) / (w^2 + gamma^2 - sigma_w2)^2
    Xth   = X0 + (gamma * T / N) * X1,    T = n_steps * dt

The estimator is a Welch averaged periodogram: Hann window, 50% overlap,
8 segments by default (fewer for short recordings, so the analysis band
keeps at least four grid points), mean removed per unit, averaged over
segments and units.  With physical sampling interval dt the density
normalization is

    psd(w_m) = dt * |rfft(win * x)[m]|^2 / sum(win^2)

on the grid w_m = 2*pi*m / (segment * dt), m = 1 .. segment/2 (the DC bin
is dropped; the returned grid is strictly positive).  The segment length is
the largest multiple of 16 not exceeding 2*L/(segments+1), which keeps the
FFT size friendly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .config import DynamicsParams
from .dynamics import TrajectoryStats
from .errors import EmptyBand, InsufficientData, InvalidParameter, PoleError, ZeroTheory

logger = logging.getLogger(__name__)

#: kernel denominator magnitudes below this raise PoleError
POLE_GUARD = 1e-12
#: band points with w^2 + gamma^2 - sigma_w2 below this are excluded from metrics
NEAR_POLE_EXCLUSION = 1e-6

MIN_SEGMENT = 16
MIN_BAND_POINTS = 3


@dataclass(frozen=True, eq=False)
class SpectrumPair:
    """Simulated and theoretical spectra on a shared positive grid."""

    omega: np.ndarray
    x_sim: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    x_th: np.ndarray
    n_seeds_averaged: int


def _denominator(omega, gamma: float, sigma_w2: float) -> np.ndarray:
    denom = np.asarray(omega, dtype=float) ** 2 + gamma**2 - sigma_w2
    if np.any(np.abs(denom) < POLE_GUARD):
        raise PoleError(
            f"kernel pole: |omega^2 + gamma^2 - sigma_w2| < {POLE_GUARD} "
            f"(gamma={gamma}, sigma_w2={sigma_w2})"
        )
    return denom


def x0(omega, gamma: float, kappa: float, sigma_w2: float):
    """Leading frequency-space kernel, 2*kappa / (w^2 + gamma^2 - sigma_w2)."""
    return 2.0 * kappa / _denominator(omega, gamma, sigma_w2)


def x1(omega, gamma: float, kappa: float, sigma_w2: float):
    """Finite-width correction kernel, sigma_w2*kappa / (w^2+gamma^2-sigma_w2)^2."""
    return sigma_w2 * kappa / _denominator(omega, gamma, sigma_w2) ** 2


def finite_width_coefficient(params: DynamicsParams) -> float:
    """Prefactor gamma * T / N of the correction term."""
    return params.gamma * params.horizon / params.n_units


def x_theory(omega, params: DynamicsParams, sigma_w2: float):
    """Dressed prediction X0 + (gamma*T/N) * X1 on the given grid."""
    k = params.kappa
    return x0(omega, params.gamma, k, sigma_w2) + finite_width_coefficient(params) * x1(
        omega, params.gamma, k, sigma_w2
    )


def segment_length(n_samples: int, segments: int) -> int:
    """Welch segment length for a 50%-overlap split into `segments` pieces."""
    if segments < 1:
        raise InvalidParameter(f"segments must be >= 1, got {segments}")
    raw = 2 * n_samples // (segments + 1)
    return (raw // MIN_SEGMENT) * MIN_SEGMENT


DEFAULT_SEGMENTS = 8
#: band points required of the default grid; one above MIN_BAND_POINTS so the
#: near-pole exclusion of supercritical genotypes cannot empty the band
_DEFAULT_MIN_POINTS = MIN_BAND_POINTS + 1


def default_segments(
    n_samples: int,
    dt: float,
    band_max: float = 2.0,
    max_segments: int = DEFAULT_SEGMENTS,
) -> int:
    """Largest workable Welch segment count for a recording.

    Prefers max_segments (variance reduction) but backs off when the grid
    spacing 2*pi/(segment*dt) would leave fewer than four points in the
    analysis band [0, band_max]; short recordings otherwise lose the band
    entirely.  At the reference geometry this returns max_segments.
    """
    for segments in range(max_segments, 2, -1):
        m = segment_length(n_samples, segments)
        if m >= MIN_SEGMENT and band_max * m * dt / (2.0 * np.pi) >= _DEFAULT_MIN_POINTS:
            return segments
    return 3


def estimate_psd(
    stats: TrajectoryStats, params: DynamicsParams, segments: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Welch PSD of a recorded trajectory, averaged over segments and units.

    Returns (omega, psd) on the strictly positive grid defined above.
    segments=None picks the default count for the recording length.
    Deterministic given the trajectory. Raises InsufficientData when the
    recording is too short for the requested segment count.
    """
    if stats.samples is None:
        raise InsufficientData("trajectory carries no recorded samples")
    x = np.asarray(stats.samples, dtype=float)
    n_rec = x.shape[0]
    if segments is None:
        segments = default_segments(n_rec, params.dt)
    m = segment_length(n_rec, segments)
    if m < MIN_SEGMENT or n_rec < 2 * m:
        raise InsufficientData(
            f"{n_rec} recorded samples are too few for {segments} Welch segments"
        )

    x = x - x.mean(axis=0)
    hop = m // 2
    # (n_segments, n_units, m) strided view over the recording
    segs = np.lib.stride_tricks.sliding_window_view(x, m, axis=0)[::hop]
    win = np.hanning(m)
    spec = scipy.fft.rfft(segs * win, axis=-1)
    power = (np.abs(spec) ** 2).mean(axis=(0, 1))
    psd = params.dt * power / np.sum(win**2)

    omega = 2.0 * np.pi * np.arange(1, m // 2 + 1) / (m * params.dt)
    return omega, psd[1 : m // 2 + 1]


def usable_band(
    grid: np.ndarray,
    band_min: float,
    band_max: float,
    gamma: float,
    sigma_w2: float,
) -> np.ndarray:
    """In-band mask with near-pole grid points excluded (exclusions logged)."""
    grid = np.asarray(grid, dtype=float)
    mask = (grid >= band_min) & (grid <= band_max)
    near_pole = grid**2 + gamma**2 - sigma_w2 < NEAR_POLE_EXCLUSION
    dropped = mask & near_pole
    if dropped.any():
        logger.debug(
            "excluding %d near-pole band points at sigma_w2=%.6g",
            int(dropped.sum()),
            sigma_w2,
        )
    return mask & ~near_pole


def relmse_band(
    sim: np.ndarray,
    theory: np.ndarray,
    grid: np.ndarray,
    band_min: float,
    band_max: float,
) -> float:
    """Mean of ((sim - theory) / theory)^2 over band grid points."""
    sim = np.asarray(sim, dtype=float)
    theory = np.asarray(theory, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if not sim.shape == theory.shape == grid.shape:
        raise InvalidParameter("sim, theory and grid must share one shape")
    mask = (grid >= band_min) & (grid <= band_max)
    count = int(mask.sum())
    if count < MIN_BAND_POINTS:
        raise EmptyBand(
            f"band [{band_min}, {band_max}] holds {count} grid points, "
            f"needs >= {MIN_BAND_POINTS}"
        )
    th = theory[mask]
    if np.any(np.abs(th) < POLE_GUARD):
        raise ZeroTheory("theoretical curve vanishes inside the band")
    return float(np.mean(((sim[mask] - th) / th) ** 2))
