from __future__ import annotations

import numpy as np
import pytest

from marginal_evo.config import DynamicsParams
from marginal_evo.diagnostics import (
    abscissa_sweep,
    critical_sigma,
    lyapunov_replica,
    lyapunov_spectral,
    meanfield_chi,
)
from marginal_evo.dynamics import TrajectoryStats, simulate_two_replica
from marginal_evo.ensembles import ConnectivityMatrix, sample_ginibre
from marginal_evo.errors import InvalidParameter, MissingData

PARAMS = DynamicsParams(n_units=64, n_steps=2000, dt=0.05, gamma=1.0, kappa=1.0)


def _matrix(entries):
    return ConnectivityMatrix(np.asarray(entries, dtype=float), 0.0, "ginibre", 0)


class TestSpectral:
    def test_zero_matrix(self):
        est = lyapunov_spectral(PARAMS, _matrix(np.zeros((64, 64))))
        assert est.value == -1.0
        assert est.method == "spectral_abscissa"
        assert est.stderr == 0.0

    def test_diagonal_matrix(self):
        est = lyapunov_spectral(PARAMS, _matrix(0.5 * np.eye(64)))
        assert est.value == pytest.approx(-0.5, abs=1e-12)

    def test_ginibre_near_marginal_at_unit_variance(self):
        params = DynamicsParams(n_units=256, n_steps=2000, dt=0.05)
        values = [
            lyapunov_spectral(params, sample_ginibre(256, 1.0, seed)).value
            for seed in range(16)
        ]
        assert -0.15 < np.mean(values) < 0.15

    def test_orthogonal_similarity_invariance(self):
        rng = np.random.default_rng(3)
        w = sample_ginibre(64, 0.8, 42)
        q, _ = np.linalg.qr(rng.standard_normal((64, 64)))
        rotated = _matrix(q @ w.entries @ q.T)
        a = lyapunov_spectral(PARAMS, w).value
        b = lyapunov_spectral(PARAMS, rotated).value
        assert abs(a - b) < 1e-8


class TestReplica:
    def test_constant_sequence(self):
        stats = TrajectoryStats(samples=None, burn_in=0, dt=0.05,
                                replica_log_growth=np.full(100, -0.02))
        est = lyapunov_replica(stats, 0.05)
        assert est.value == pytest.approx(-0.4)
        assert est.stderr == pytest.approx(0.0, abs=1e-12)
        assert est.method == "two_replica"

    def test_scalar_contraction_closed_form(self):
        stats = simulate_two_replica(PARAMS, _matrix(np.zeros((64, 64))), seed=2)
        est = lyapunov_replica(stats, PARAMS.dt)
        assert est.value == pytest.approx(np.log(0.95) / 0.05, rel=1e-6)

    def test_missing_record(self):
        stats = TrajectoryStats(samples=None, burn_in=0, dt=0.05)
        with pytest.raises(MissingData):
            lyapunov_replica(stats, 0.05)

    def test_agrees_with_spectral_for_random_matrices(self):
        # light version of the acceptance sweep: 8 matrices across the range.
        # agreement this tight needs a simple, reasonably separated leading
        # eigenvalue; draws with near-degenerate top moduli converge slower.
        for i, sigma_w2 in enumerate(np.linspace(0.3, 1.3, 8)):
            w = sample_ginibre(64, float(sigma_w2), 5000 + i)
            spec = lyapunov_spectral(PARAMS, w).value
            rep = lyapunov_replica(simulate_two_replica(PARAMS, w, seed=i), PARAMS.dt).value
            assert abs(rep - spec) <= max(0.05 * abs(spec), 0.02)


class TestMeanField:
    def test_linear_is_exact(self):
        for sigma_w2 in (0.0, 0.5, 1.0, 1.7):
            res = meanfield_chi(sigma_w2, "linear")
            assert res.chi == sigma_w2
            assert res.q_star == 0.0
            assert res.converged

    def test_tanh_small_gain_limit(self):
        res = meanfield_chi(1e-6, "tanh")
        assert res.converged
        assert res.q_star == pytest.approx(0.0, abs=1e-8)
        assert res.chi == pytest.approx(1e-6, rel=1e-3)

    def test_tanh_against_monte_carlo(self):
        # smaller-sample version of the acceptance oracle
        quad = meanfield_chi(1.5, "tanh")
        rng = np.random.default_rng(7)
        z = rng.standard_normal(1_000_000)
        q = 1.0
        for _ in range(400):
            q = 0.5 * q + 0.5 * 1.5 * np.mean(np.tanh(np.sqrt(q) * z) ** 2)
        chi_mc = 1.5 * np.mean((1.0 - np.tanh(np.sqrt(q) * z) ** 2) ** 2)
        assert quad.q_star == pytest.approx(q, rel=5e-3)
        assert quad.chi == pytest.approx(chi_mc, rel=5e-3)

    def test_deterministic(self):
        assert meanfield_chi(1.3, "tanh") == meanfield_chi(1.3, "tanh")

    def test_iteration_cap_returns_best_iterate(self):
        res = meanfield_chi(1.5, "tanh", max_iter=3)
        assert not res.converged
        assert res.iterations == 3
        assert np.isfinite(res.chi)

    def test_continuity_on_grid(self):
        grid = np.linspace(0.4, 2.0, 17)
        chis = np.array([meanfield_chi(s, "tanh").chi for s in grid])
        slopes = np.abs(np.diff(chis) / np.diff(grid))
        assert slopes.max() < 5.0

    def test_invalid_arguments(self):
        with pytest.raises(InvalidParameter):
            meanfield_chi(-0.5, "tanh")
        with pytest.raises(InvalidParameter):
            meanfield_chi(1.0, "tanh", tolerance=0.0)
        with pytest.raises(InvalidParameter):
            meanfield_chi(1.0, "relu")


class TestCriticalSigma:
    def test_linear_exact(self):
        assert critical_sigma("linear") == 1.0

    def test_tanh_root_self_consistent(self):
        root = critical_sigma("tanh")
        assert abs(meanfield_chi(root, "tanh").chi - 1.0) < 1e-3

    def test_invalid_activation(self):
        with pytest.raises(InvalidParameter):
            critical_sigma("relu")


def test_abscissa_sweep_rows():
    rows = abscissa_sweep(np.array([0.0, 0.5]), n_units=64, gamma=1.0, n_seeds=3)
    assert len(rows) == 2
    sigma0, mean0, std0 = rows[0]
    assert sigma0 == 0.0 and mean0 == -1.0 and std0 == 0.0
    assert rows[1][1] > mean0
