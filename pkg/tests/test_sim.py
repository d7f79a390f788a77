"""Stepping, seeding, exit detection and export of the simulation layer."""

import csv
import math

import numpy as np
import pytest

import stocbf as sb
from stocbf.calculus import constant_matrix_map, constant_vector_map
from stocbf.simulate import TRAJECTORY_COLUMNS, write_trajectories_csv


def linear_decay_plant():
    return sb.ControlAffineSDE(
        n=1, m=1, d=1,
        f=lambda x: -x,
        g=constant_matrix_map(0.0, 1, 1),
        sigma=constant_matrix_map(0.0, 1, 1),
        u_o=constant_vector_map(0.0, 1),
    )


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------

def test_euler_step_deterministic():
    x = sb.euler_maruyama_step(linear_decay_plant(), sb.zero_compensator(1, 1),
                               np.array([1.0]), 0.1, np.array([0.0]))
    assert x[0] == pytest.approx(0.9)


def test_euler_step_pure_diffusion():
    sys = sb.scalar_plant(u_o=0.0, c=0.1)
    x = sb.euler_maruyama_step(sys, sb.zero_compensator(1, 1),
                               np.array([2.0]), 0.01, np.array([0.2]))
    assert x[0] == pytest.approx(2.02)


def test_euler_step_saturated_drift(ex1):
    # below x_mu1 the closed loop drifts at exactly +u_max
    x0 = np.array([1.002])
    x1 = sb.euler_maruyama_step(ex1.sys, ex1.phi1, x0, 1e-3, np.array([0.0]))
    assert x1[0] - x0[0] == pytest.approx(1e-3, rel=1e-12)


def test_euler_step_validation(ex1):
    with pytest.raises(sb.ParameterError):
        sb.euler_maruyama_step(ex1.sys, ex1.phi1, np.array([2.0]), 0.0,
                               np.array([0.0]))
    with pytest.raises(sb.NumericalBlowupError):
        sb.euler_maruyama_step(ex1.sys, ex1.phi1, np.array([np.inf]), 0.1,
                               np.array([0.0]))


# ---------------------------------------------------------------------------
# seeding and determinism
# ---------------------------------------------------------------------------

def test_path_generator_is_stable():
    a = sb.path_generator(7, 3).standard_normal(4)
    b = sb.path_generator(7, 3).standard_normal(4)
    c = sb.path_generator(7, 4).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_same_seed_same_path(ex1):
    cfg = sb.SimConfig(dt=1e-3, horizon=0.3, n_paths=1, master_seed=11)
    p1 = sb.simulate_path(ex1.sys, ex1.phi1, np.array([2.0]), ex1.safe, cfg, 5)
    p2 = sb.simulate_path(ex1.sys, ex1.phi1, np.array([2.0]), ex1.safe, cfg, 5)
    assert np.array_equal(p1.states, p2.states)
    assert p1.exit_time_chi == p2.exit_time_chi


def test_path_matches_ensemble_member(ex1):
    cfg = sb.SimConfig(dt=1e-3, horizon=0.2, n_paths=6, master_seed=11,
                       record_stride=4)
    ens = sb.simulate_ensemble(ex1.sys, ex1.phi1, np.array([2.0]), ex1.safe, cfg)
    lone = sb.simulate_path(ex1.sys, ex1.phi1, np.array([2.0]), ex1.safe, cfg, 4)
    assert np.array_equal(lone.states, ens.paths[4].states)


def test_ensemble_reproducible(ex1):
    cfg = sb.SimConfig(dt=1e-3, horizon=0.2, n_paths=5, master_seed=9)
    a = sb.simulate_ensemble(ex1.sys, ex1.phi1, np.array([1.5]), ex1.safe, cfg)
    b = sb.simulate_ensemble(ex1.sys, ex1.phi1, np.array([1.5]), ex1.safe, cfg)
    for pa, pb in zip(a.paths, b.paths):
        assert np.array_equal(pa.states, pb.states)


# ---------------------------------------------------------------------------
# noise statistics and the deterministic reduction
# ---------------------------------------------------------------------------

def test_increments_are_standard_normal():
    # pure diffusion: increments are recoverable from the recorded states
    c = 0.3
    sys = sb.scalar_plant(u_o=0.0, c=c)
    safe = sb.SafeSet(h=sb.halfline_margin_field(-1e9), mu=0.0)
    cfg = sb.SimConfig(dt=0.01, horizon=2.0, n_paths=200, master_seed=5)
    ens = sb.simulate_ensemble(sys, sb.zero_compensator(1, 1),
                               np.array([0.0]), safe, cfg)
    states = ens.states_array()[:, :, 0]
    z = np.diff(states, axis=1) / (c * math.sqrt(cfg.dt))
    n = z.size
    assert abs(z.mean()) < 4.0 / math.sqrt(n)
    assert abs(z.var() - 1.0) < 4.0 * math.sqrt(2.0 / n)


def test_zero_noise_reduces_to_euler(ex1):
    sys0 = sb.scalar_plant(u_o=-1.0, c=0.0)
    cfg = sb.SimConfig(dt=1e-3, horizon=1.0, n_paths=1, master_seed=1)
    noisy_path = sb.simulate_path(sys0, ex1.phi1, np.array([4.0]), ex1.safe, cfg)
    euler = sb.simulate_deterministic(sys0, ex1.phi1, np.array([4.0]), ex1.safe, cfg)
    assert np.allclose(noisy_path.states, euler.states, rtol=0.0, atol=1e-14)


def test_deterministic_overlay_ignores_noise(ex1):
    cfg = sb.SimConfig(dt=1e-3, horizon=0.5, n_paths=1, master_seed=1)
    det = sb.simulate_deterministic(ex1.sys, ex1.phi1, np.array([4.0]), ex1.safe, cfg)
    det0 = sb.simulate_deterministic(
        sb.scalar_plant(u_o=-1.0, c=0.0), ex1.phi1, np.array([4.0]), ex1.safe, cfg)
    assert np.array_equal(det.states, det0.states)


# ---------------------------------------------------------------------------
# exit detection
# ---------------------------------------------------------------------------

def test_exit_at_start_when_outside(ex1):
    cfg = sb.SimConfig(dt=1e-3, horizon=0.1, n_paths=1, master_seed=2)
    path = sb.simulate_path(ex1.sys, ex1.phi1, np.array([0.5]), ex1.safe, cfg)
    assert path.exit_time_chi == 0.0
    assert path.exit_time_chi_mu == 0.0


def test_exit_never_sentinel(ex1):
    cfg = sb.SimConfig(dt=1e-3, horizon=0.2, n_paths=1, master_seed=3)
    path = sb.simulate_path(ex1.sys, ex1.phi1, np.array([4.0]), ex1.safe, cfg)
    assert path.exit_time_chi == math.inf
    assert path.exit_time_chi_mu == 0.0  # started above the layer


def test_layer_exit_precedes_chi_exit(ex1):
    # starts inside the layer: leaving chi also leaves the layer
    cfg = sb.SimConfig(dt=1e-4, horizon=0.5, n_paths=40, master_seed=4)
    x0 = np.array([1.0 + 0.5 * ex1.params.mu1])
    ens = sb.simulate_ensemble(ex1.sys, ex1.phi1, x0, ex1.safe, cfg)
    for p in ens.paths:
        assert p.exit_time_chi_mu <= p.exit_time_chi


def test_simulation_continues_after_exit(ex1):
    # the motivating zeroing design lets paths cross and come back; states
    # keep evolving after the frozen exit time
    phi_hs = ex1.phi_hs
    safe = sb.SafeSet(h=ex1.h_s, mu=0.0)
    cfg = sb.SimConfig(dt=1e-4, horizon=0.5, n_paths=30, master_seed=8)
    ens = sb.simulate_ensemble(ex1.sys, phi_hs, np.array([1.000001]), safe, cfg)
    exited = [p for p in ens.paths if p.exit_time_chi < math.inf]
    assert exited, "expected boundary crossings in this configuration"
    for p in exited[:5]:
        after = p.states[p.times > p.exit_time_chi]
        assert after.size > 0
        assert np.all(np.isfinite(after))


def test_blowup_is_reported_with_path_index(ex1):
    exploding = sb.Compensator(
        n=1, m=1,
        phi=lambda x: np.where(x[..., 0] > 2.0, np.inf, 0.0)[..., None],
        description="exploding test compensator",
    )
    cfg = sb.SimConfig(dt=0.5, horizon=3.0, n_paths=3, master_seed=0)
    with pytest.raises(sb.NumericalBlowupError) as err:
        sb.simulate_ensemble(sb.scalar_plant(u_o=1.0, c=0.0), exploding,
                             np.array([1.0]), ex1.safe, cfg)
    assert err.value.path_index is not None


# ---------------------------------------------------------------------------
# ensembles, refinement and export
# ---------------------------------------------------------------------------

def test_mean_trajectory(ex1):
    cfg = sb.SimConfig(dt=1e-3, horizon=0.2, n_paths=7, master_seed=12)
    ens = sb.simulate_ensemble(ex1.sys, ex1.phi1, np.array([2.0]), ex1.safe, cfg)
    stacked = ens.states_array()
    assert np.allclose(ens.mean_trajectory, stacked.mean(axis=0), atol=1e-12)
    single = sb.simulate_ensemble(
        ex1.sys, ex1.phi1, np.array([2.0]), ex1.safe,
        sb.SimConfig(dt=1e-3, horizon=0.2, n_paths=1, master_seed=12))
    assert np.array_equal(single.mean_trajectory, single.paths[0].states)


def test_exit_fraction_stable_under_dt_refinement(ex1):
    # halving dt moves the empirical exit fraction by < 3 pooled SEs
    safe = sb.SafeSet(h=ex1.h_s, mu=0.0)
    x0 = np.array([1.0 + 1e-6])
    fractions = []
    for dt in (1e-3, 5e-4):
        cfg = sb.SimConfig(dt=dt, horizon=0.25, n_paths=2000, master_seed=77)
        ens = sb.simulate_ensemble(ex1.sys, ex1.phi_hs, x0, safe, cfg)
        fractions.append(np.mean(ens.exit_times_chi() <= cfg.horizon))
    p_pooled = 0.5 * (fractions[0] + fractions[1])
    se = math.sqrt(2.0 * p_pooled * (1.0 - p_pooled) / 2000)
    assert abs(fractions[0] - fractions[1]) <= 3.0 * max(se, 1e-3)


def test_config_validation():
    with pytest.raises(sb.ParameterError):
        sb.SimConfig(dt=0.0, horizon=1.0)
    with pytest.raises(sb.ParameterError):
        sb.SimConfig(dt=0.1, horizon=0.05)
    with pytest.raises(sb.ParameterError):
        sb.SimConfig(dt=0.1, horizon=1.0, n_paths=0)
    with pytest.raises(sb.ParameterError):
        sb.SimConfig(dt=0.1, horizon=1.0, record_stride=0)


def test_trajectory_csv_schema(ex1, tmp_path):
    cfg = sb.SimConfig(dt=1e-3, horizon=0.05, n_paths=3, master_seed=6,
                       record_stride=10)
    ens = sb.simulate_ensemble(ex1.sys, ex1.phi1, np.array([2.0]), ex1.safe, cfg)
    out = tmp_path / "traj.csv"
    write_trajectories_csv(out, ens, ex1.sys, ex1.phi1, ex1.safe)
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TRAJECTORY_COLUMNS(1, 1)
    assert rows[0] == ["path_id", "t", "x_1", "u", "u_o", "h", "exited_chi"]
    n_rec = len(ens.times)
    assert len(rows) == 1 + 3 * n_rec
    # values round-trip exactly through repr
    first = rows[1]
    assert int(first[0]) == 0
    assert float(first[1]) == ens.times[0]
    assert float(first[2]) == ens.paths[0].states[0, 0]
    assert float(first[5]) == float(ex1.safe.h(ens.paths[0].states[0]))
    assert first[6] in {"0", "1"}


def test_ensemble_summary_schema(ex1):
    cfg = sb.SimConfig(dt=1e-3, horizon=0.05, n_paths=4, master_seed=6)
    ens = sb.simulate_ensemble(ex1.sys, ex1.phi1, np.array([2.0]), ex1.safe, cfg)
    summary = sb.ensemble_summary(ens, ex1.safe)
    assert set(summary) == {"n_paths", "exit_fraction_chi", "exit_fraction_chi_mu",
                            "ci_low", "ci_high", "config"}
    assert summary["n_paths"] == 4
    assert 0.0 <= summary["ci_low"] <= summary["ci_high"] <= 1.0
