"""Stability diagnostics: Lyapunov estimates and the mean-field gain.

All Lyapunov values are continuous-time rates (1/depth units).  The spectral
route takes the spectral abscissa of the drift W - gamma*I, i.e.
max Re(eig(W)) - gamma, from a full nonsymmetric eigen-decomposition.  The
empirical route divides the mean per-step separation log growth of a
two-replica run by dt, which makes the two estimators directly comparable.

The mean-field gain chi solves the variance self-consistency

    q = sigma_w2 * E[phi(sqrt(q) Z)^2],      Z ~ N(0, 1)

and evaluates chi = sigma_w2 * E[phi'(sqrt(q*) Z)^2].  Gaussian expectations
use Gauss-Hermite quadrature rescaled to the standard normal measure:
with hermgauss nodes x_i and weights v_i for the e^{-x^2} weight,
z_i = sqrt(2) x_i and w_i = v_i / sqrt(pi) give E[f(Z)] ~ sum w_i f(z_i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import DynamicsParams, derive_seed
from .dynamics import TrajectoryStats
from .ensembles import ConnectivityMatrix, sample_ginibre
from .errors import EigenFailure, InvalidParameter, MissingData, NonConvergence

SPECTRAL_ABSCISSA = "spectral_abscissa"
TWO_REPLICA = "two_replica"

LINEAR = "linear"
TANH = "tanh"

GH_ORDER = 64
FIXED_POINT_DAMPING = 0.5
FIXED_POINT_MAX_ITER = 10_000


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float  # continuous-time rate, 1/depth
    method: str
    stderr: float = 0.0


@dataclass(frozen=True)
class MeanFieldResult:
    q_star: float
    chi: float
    converged: bool
    iterations: int


def lyapunov_spectral(params: DynamicsParams, w: ConnectivityMatrix) -> LyapunovEstimate:
    """Spectral abscissa of W - gamma*I via full eigen-decomposition."""
    if w.entries.shape != (params.n_units, params.n_units):
        raise EigenFailure(
            f"matrix is {w.entries.shape}, expected square of size {params.n_units}"
        )
    try:
        eig = scipy.linalg.eigvals(w.entries.copy(), check_finite=False, overwrite_a=True)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenFailure(str(exc)) from exc
    return LyapunovEstimate(
        value=float(eig.real.max() - params.gamma), method=SPECTRAL_ABSCISSA
    )


def lyapunov_replica(stats: TrajectoryStats, dt: float) -> LyapunovEstimate:
    """Empirical indicator: mean per-step log growth divided by dt."""
    g = stats.replica_log_growth
    if g is None or len(g) == 0:
        raise MissingData("TrajectoryStats carries no replica log-growth record")
    value = float(np.mean(g) / dt)
    stderr = float(np.std(g) / (np.sqrt(len(g)) * dt))
    return LyapunovEstimate(value=value, method=TWO_REPLICA, stderr=stderr)


def _gh_nodes(order: int = GH_ORDER) -> tuple[np.ndarray, np.ndarray]:
    x, v = np.polynomial.hermite.hermgauss(order)
    return np.sqrt(2.0) * x, v / np.sqrt(np.pi)


def meanfield_chi(
    sigma_w2: float,
    activation: str = TANH,
    tolerance: float = 1e-10,
    max_iter: int = FIXED_POINT_MAX_ITER,
    damping: float = FIXED_POINT_DAMPING,
) -> MeanFieldResult:
    """Variance fixed point and amplification factor for one gain value.

    The linear activation short-circuits: q* = 0 is the only finite fixed
    point and chi = sigma_w2 exactly.  For tanh the damped iteration

        q <- (1 - damping) * q + damping * sigma_w2 * E[tanh(sqrt(q) Z)^2]

    runs from q = 1 until the update falls below the tolerance; hitting the
    iteration cap returns the best iterate with converged=False.
    """
    if not (sigma_w2 >= 0.0):
        raise InvalidParameter(f"sigma_w2 must be >= 0, got {sigma_w2}")
    if not (tolerance > 0.0):
        raise InvalidParameter(f"tolerance must be > 0, got {tolerance}")
    if activation == LINEAR:
        return MeanFieldResult(q_star=0.0, chi=float(sigma_w2), converged=True, iterations=0)
    if activation != TANH:
        raise InvalidParameter(f"unknown activation {activation!r}")

    z, wts = _gh_nodes()
    q = 1.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        m2 = float(wts @ np.tanh(np.sqrt(q) * z) ** 2)
        q_next = (1.0 - damping) * q + damping * sigma_w2 * m2
        if abs(q_next - q) < tolerance:
            q = q_next
            converged = True
            break
        q = q_next
    dphi2 = float(wts @ (1.0 - np.tanh(np.sqrt(q) * z) ** 2) ** 2)
    return MeanFieldResult(
        q_star=q, chi=float(sigma_w2 * dphi2), converged=converged, iterations=iterations
    )


def critical_sigma(
    activation: str = TANH,
    tolerance: float = 1e-6,
    bracket: tuple[float, float] = (0.25, 4.0),
) -> float:
    """Gain value where chi crosses 1, by bisection on sigma_w2.

    For the linear activation this is exactly 1.  The tanh branch first
    checks that chi is nondecreasing on a coarse grid over the bracket,
    then bisects until the interval is narrower than the tolerance.
    """
    if not (tolerance > 0.0):
        raise InvalidParameter(f"tolerance must be > 0, got {tolerance}")
    if activation == LINEAR:
        return 1.0
    if activation != TANH:
        raise InvalidParameter(f"unknown activation {activation!r}")

    lo, hi = bracket
    grid = np.linspace(lo, hi, 9)
    chis = [meanfield_chi(s, activation).chi for s in grid]
    if any(b < a - 1e-9 for a, b in zip(chis, chis[1:])):
        raise NonConvergence("chi is not nondecreasing on the searched interval")

    f_lo = chis[0] - 1.0
    f_hi = chis[-1] - 1.0
    if not (f_lo < 0.0 < f_hi):
        raise NonConvergence(f"chi - 1 does not change sign on [{lo}, {hi}]")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if meanfield_chi(mid, activation).chi - 1.0 > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def abscissa_sweep(
    sigma_grid: np.ndarray,
    n_units: int,
    gamma: float,
    n_seeds: int,
    master_seed: int = 0,
) -> list[tuple[float, float, float]]:
    """Mean and std of the spectral abscissa over Ginibre draws per genotype.

    Returns (sigma_w2, lambda_mean, lambda_std) rows; the matrix seeds are
    derived per (grid index, seed index), so rows are reproducible and
    independent of evaluation order.
    """
    params = DynamicsParams(n_units=n_units, n_steps=2, dt=1.0, gamma=gamma)
    rows = []
    for i, sigma_w2 in enumerate(np.asarray(sigma_grid, dtype=float)):
        lams = np.empty(n_seeds)
        for j in range(n_seeds):
            seed = derive_seed(master_seed, i, j, 0)
            cm = sample_ginibre(n_units, float(sigma_w2), seed)
            lams[j] = lyapunov_spectral(params, cm).value
        rows.append((float(sigma_w2), float(lams.mean()), float(lams.std())))
    return rows
