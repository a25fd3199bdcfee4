from __future__ import annotations

import numpy as np
import pytest

from marginal_evo.config import DynamicsParams
from marginal_evo.dynamics import simulate, simulate_two_replica
from marginal_evo.ensembles import ConnectivityMatrix, sample_ginibre
from marginal_evo.errors import DimensionMismatch, DivergenceError, InvalidParameter

REF = DynamicsParams(n_units=64, n_steps=2000, dt=0.05, gamma=1.0, kappa=1.0)


def _matrix(entries):
    n = entries.shape[0]
    return ConnectivityMatrix(np.asarray(entries, dtype=float), 0.0, "ginibre", 0)


def zero_matrix(n):
    return _matrix(np.zeros((n, n)))


def test_vanishing_noise_keeps_state_at_zero():
    params = DynamicsParams(n_units=16, n_steps=200, dt=0.05, gamma=1.0, kappa=1e-30)
    stats = simulate(params, zero_matrix(16), seed=3)
    assert np.all(np.abs(stats.samples) < 1e-12)


def test_ou_stationary_variance():
    # W = 0: exactly discretized Ornstein-Uhlenbeck, stationary variance kappa/gamma
    variances = []
    for seed in range(4):
        stats = simulate(REF, zero_matrix(64), seed=seed)
        variances.append(stats.samples.var())
    assert abs(np.mean(variances) - 1.0) < 0.1


def test_ou_autocorrelation_decay():
    stats = simulate(REF, zero_matrix(64), seed=9)
    x = stats.samples - stats.samples.mean(axis=0)
    var = (x * x).mean()
    for lag in (10, 20):
        acf = (x[:-lag] * x[lag:]).mean() / var
        assert abs(acf - np.exp(-REF.gamma * lag * REF.dt)) < 0.05


def test_determinism():
    a = simulate(REF, zero_matrix(64), seed=123)
    b = simulate(REF, zero_matrix(64), seed=123)
    assert np.array_equal(a.samples, b.samples)


def test_recording_window_and_finiteness():
    stats = simulate(REF, zero_matrix(64), seed=1, burn_in=700)
    assert stats.samples.shape == (2000 - 700, 64)
    assert np.all(np.isfinite(stats.samples))
    assert stats.burn_in == 700 and stats.dt == REF.dt


def test_bad_burn_in():
    with pytest.raises(InvalidParameter):
        simulate(REF, zero_matrix(64), seed=1, burn_in=2000)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        simulate(REF, zero_matrix(32), seed=1)


def test_divergence_reports_step():
    params = DynamicsParams(n_units=8, n_steps=2000, dt=0.05)
    unstable = _matrix(3.0 * np.eye(8))  # drift eigenvalue +2, grows as 1.1^t
    with pytest.raises(DivergenceError) as err:
        simulate(params, unstable, seed=0)
    assert 0 < err.value.step <= 2000


class TestTwoReplica:
    def test_pure_contraction_log_growth(self):
        # W = 0: the separation contracts by exactly (1 - gamma*dt) each step
        stats = simulate_two_replica(REF, zero_matrix(64), seed=5)
        expected = np.log(1.0 - REF.gamma * REF.dt)
        assert np.allclose(stats.replica_log_growth, expected, atol=1e-7)

    def test_noise_independence_for_scalar_map(self):
        # contraction rate cannot depend on the shared noise realization
        a = simulate_two_replica(REF, zero_matrix(64), seed=5)
        b = simulate_two_replica(REF, zero_matrix(64), seed=99)
        assert np.allclose(a.replica_log_growth, b.replica_log_growth, atol=1e-7)

    def test_offset_scale_invariance(self):
        w = sample_ginibre(64, 0.8, 7)
        a = simulate_two_replica(REF, w, seed=11, delta0=1e-8)
        b = simulate_two_replica(REF, w, seed=11, delta0=1e-7)
        assert np.allclose(a.replica_log_growth, b.replica_log_growth, atol=1e-6)

    def test_shared_noise_cancellation_matches_power_iteration(self):
        # the separation sequence equals the deterministic iteration of the
        # one-step map applied to the same initial offset
        params = DynamicsParams(n_units=32, n_steps=400, dt=0.05)
        w = sample_ginibre(32, 0.9, 21)
        stats = simulate_two_replica(params, w, seed=13)

        rng = np.random.default_rng(13)
        u = rng.standard_normal(32)
        u /= np.linalg.norm(u)
        a = (1.0 - params.gamma * params.dt) * np.eye(32) + params.dt * w.entries
        expected = np.empty(params.n_steps)
        v = u.copy()
        for t in range(params.n_steps):
            v = a @ v
            norm = np.linalg.norm(v)
            expected[t] = np.log(norm)
            v /= norm
        assert np.allclose(stats.replica_log_growth, expected[stats.burn_in:], atol=1e-5)

    def test_bad_delta0(self):
        with pytest.raises(InvalidParameter):
            simulate_two_replica(REF, zero_matrix(64), seed=1, delta0=0.0)

    def test_no_samples_recorded(self):
        stats = simulate_two_replica(REF, zero_matrix(64), seed=1)
        assert stats.samples is None
        assert np.all(np.isfinite(stats.replica_log_growth))


def test_trajectory_debug_dump(tmp_path):
    from marginal_evo.artifacts import write_trajectory_csv

    params = DynamicsParams(n_units=3, n_steps=12, dt=0.05)
    stats = simulate(params, zero_matrix(3), seed=1, burn_in=4)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(stats, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,unit,value"
    assert len(lines) == 1 + (12 - 4) * 3
    step, unit, value = lines[1].split(",")
    assert (int(step), int(unit)) == (5, 0)
    assert float(value) == stats.samples[0, 0]
