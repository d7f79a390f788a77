"""Euler-Maruyama simulation with first-exit detection.

Discretization: x' = x + (f(x) + g(x)(u_o(x) + u)) dt + sigma(x) dW with
dW ~ Normal(0, dt I_d).  Each path owns a counter-based generator keyed
by (master_seed, path_index) -- numpy Philox over
SeedSequence([master_seed, path_index]), normals via
Generator.standard_normal -- so ensembles are reproducible for a fixed
config regardless of execution order, blocking or worker count.

Exits are detected on the step grid (h evaluated at every step, not only
recorded ones); sub-step crossings are missed, which makes exit counts
conservative.  Exit times freeze at the first crossing and simulation
continues afterwards; past a crossing the compensator is evaluated in
unguarded form so domain-restricted designs can extend the trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .calculus import ControlAffineSDE, _as_points
from .certificates import SafeSet
from .compensators import Compensator
from .errors import NumericalBlowupError, ParameterError

__all__ = [
    "SimConfig",
    "SamplePath",
    "PathEnsemble",
    "path_generator",
    "euler_maruyama_step",
    "simulate_path",
    "simulate_ensemble",
    "simulate_deterministic",
    "write_trajectories_csv",
    "TRAJECTORY_COLUMNS",
]

NEVER = math.inf

# Per-chunk budget for pre-drawn Wiener increments (float64 count).
_CHUNK_FLOATS = 1 << 24


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step simulation settings."""

    dt: float
    horizon: float
    n_paths: int = 1
    master_seed: int = 0
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if not self.horizon >= self.dt:
            raise ParameterError(
                f"horizon must be >= dt, got horizon={self.horizon}, dt={self.dt}"
            )
        if self.n_paths < 1:
            raise ParameterError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.record_stride < 1:
            raise ParameterError(f"record_stride must be >= 1, got {self.record_stride}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.horizon / self.dt)))

    def recorded_steps(self) -> np.ndarray:
        ks = np.arange(0, self.n_steps + 1, self.record_stride)
        if ks[-1] != self.n_steps:
            ks = np.append(ks, self.n_steps)
        return ks


@dataclass(frozen=True)
class SamplePath:
    """One simulated trajectory on the recorded time grid."""

    times: np.ndarray          # (R,)
    states: np.ndarray         # (R, n)
    exit_time_chi: float       # first t with h <= 0, or inf
    exit_time_chi_mu: float    # first t with h <= 0 or h > mu, or inf
    path_seed: int

    def exited_chi_by(self, t: float) -> bool:
        return self.exit_time_chi <= t


@dataclass(frozen=True)
class PathEnsemble:
    """A set of paths sharing the recorded time grid."""

    paths: List[SamplePath]
    config: SimConfig
    mean_trajectory: np.ndarray = field(default=None)  # (R, n)

    def __post_init__(self):
        if self.mean_trajectory is None:
            stacked = np.stack([p.states for p in self.paths])
            object.__setattr__(self, "mean_trajectory", stacked.mean(axis=0))

    @property
    def times(self) -> np.ndarray:
        return self.paths[0].times

    def states_array(self) -> np.ndarray:
        """All recorded states, shape (n_paths, R, n)."""
        return np.stack([p.states for p in self.paths])

    def exit_times_chi(self) -> np.ndarray:
        return np.array([p.exit_time_chi for p in self.paths])

    def exit_times_chi_mu(self) -> np.ndarray:
        return np.array([p.exit_time_chi_mu for p in self.paths])


def path_generator(master_seed: int, path_index: int) -> np.random.Generator:
    """The per-path generator: Philox keyed by (master_seed, path_index)."""
    ss = np.random.SeedSequence([int(master_seed), int(path_index)])
    return np.random.Generator(np.random.Philox(ss))


def euler_maruyama_step(sys: ControlAffineSDE, phi: Compensator, x, dt: float, dW):
    """One explicit step; raises on non-finite state or compensator output."""
    if not dt > 0.0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    x = _as_points(x, sys.n)
    dW = np.asarray(dW, dtype=float)
    if dW.shape[-1] != sys.d:
        raise ParameterError(f"dW has trailing axis {dW.shape[-1]}, expected {sys.d}")
    if not np.all(np.isfinite(x)):
        raise NumericalBlowupError("non-finite state", x=x)
    u = phi.raw(x)
    if not np.all(np.isfinite(u)):
        raise NumericalBlowupError("non-finite compensator output", x=x)
    fx, gx, uo = sys.drift_terms(x)
    sx = sys.noise_matrix(x)
    drift = fx + np.einsum("...nm,...m->...n", gx, uo + u)
    x_new = x + drift * dt + np.einsum("...nd,...d->...n", sx, dW)
    if not np.all(np.isfinite(x_new)):
        raise NumericalBlowupError("state became non-finite after step", x=x_new)
    return x_new


def _simulate_block(sys, phi, x0, safe: SafeSet, cfg: SimConfig,
                    path_indices) -> List[SamplePath]:
    """Core engine: vectorized over the given path indices."""
    idx = np.asarray(path_indices, dtype=int)
    P = idx.shape[0]
    n, d = sys.n, sys.d
    dt = cfg.dt
    sqrt_dt = math.sqrt(dt)
    n_steps = cfg.n_steps
    rec_ks = cfg.recorded_steps()
    rec_pos = {int(k): i for i, k in enumerate(rec_ks)}

    x0 = _as_points(np.asarray(x0, dtype=float), n)
    x = np.broadcast_to(x0, (P, n)).astype(float).copy()
    if not np.all(np.isfinite(x)):
        raise NumericalBlowupError("non-finite initial state", x=x0)

    rngs = [path_generator(cfg.master_seed, int(j)) for j in idx]

    states = np.empty((P, len(rec_ks), n))
    states[:, 0] = x

    # Validate map shapes once at x0, then run the loop on the raw
    # callables (maps are deterministic, so shapes cannot change).
    sys.drift_terms(x)
    sys.noise_matrix(x)
    phi.raw(x)
    f_map, g_map, uo_map, s_map = sys.f, sys.g, sys.u_o, sys.sigma
    phi_map, h_map, mu = phi.phi, safe.h.value, safe.mu

    hv = h_map(x)
    exit_chi = np.where(hv <= 0.0, 0, -1).astype(np.int64)
    out_mu = (hv <= 0.0) | (hv > mu)
    exit_mu = np.where(out_mu, 0, -1).astype(np.int64)

    chunk = max(1, int(_CHUNK_FLOATS // max(1, P * d)))
    k = 0
    while k < n_steps:
        span = min(chunk, n_steps - k)
        dw = np.empty((P, span, d))
        for j, rng in enumerate(rngs):
            dw[j] = rng.standard_normal((span, d))
        dw *= sqrt_dt
        for s in range(span):
            u = phi_map(x)
            if not np.all(np.isfinite(u)):
                bad = int(np.argmin(np.isfinite(u).all(axis=-1)))
                raise NumericalBlowupError(
                    f"compensator output non-finite on path {idx[bad]}",
                    x=x[bad], path_index=int(idx[bad]), t=k * dt,
                )
            drift = f_map(x) + np.einsum("pnm,pm->pn", g_map(x), uo_map(x) + u)
            x = x + drift * dt + np.einsum("pnd,pd->pn", s_map(x), dw[:, s])
            k += 1
            if not np.all(np.isfinite(x)):
                bad = int(np.argmin(np.isfinite(x).all(axis=-1)))
                raise NumericalBlowupError(
                    f"state non-finite on path {idx[bad]} at t = {k * dt}",
                    x=x[bad], path_index=int(idx[bad]), t=k * dt,
                )
            hv = h_map(x)
            fresh = exit_chi < 0
            exit_chi[fresh & (hv <= 0.0)] = k
            fresh_mu = exit_mu < 0
            exit_mu[fresh_mu & ((hv <= 0.0) | (hv > mu))] = k
            pos = rec_pos.get(k)
            if pos is not None:
                states[:, pos] = x

    times = rec_ks * dt
    out = []
    for j in range(P):
        out.append(SamplePath(
            times=times,
            states=states[j],
            exit_time_chi=float(exit_chi[j] * dt) if exit_chi[j] >= 0 else NEVER,
            exit_time_chi_mu=float(exit_mu[j] * dt) if exit_mu[j] >= 0 else NEVER,
            path_seed=int(idx[j]),
        ))
    return out


def simulate_path(sys, phi, x0, safe: SafeSet, cfg: SimConfig,
                  path_index: int = 0) -> SamplePath:
    """Simulate one path; bit-identical to the same index inside an ensemble."""
    return _simulate_block(sys, phi, x0, safe, cfg, [path_index])[0]


def simulate_ensemble(sys, phi, x0, safe: SafeSet, cfg: SimConfig) -> PathEnsemble:
    """Simulate cfg.n_paths independent paths from the shared x0."""
    paths = _simulate_block(sys, phi, x0, safe, cfg, np.arange(cfg.n_paths))
    return PathEnsemble(paths=paths, config=cfg)


def simulate_deterministic(sys, phi, x0, safe: SafeSet, cfg: SimConfig) -> SamplePath:
    """Explicit Euler of the drift only (the sigma' = 0 overlay)."""
    dt = cfg.dt
    n_steps = cfg.n_steps
    rec_ks = cfg.recorded_steps()
    rec_pos = {int(k): i for i, k in enumerate(rec_ks)}
    x = _as_points(np.asarray(x0, dtype=float), sys.n).reshape(1, sys.n).copy()
    states = np.empty((len(rec_ks), sys.n))
    states[0] = x[0]
    hv = safe.h(x)[0]
    exit_chi = 0 if hv <= 0.0 else -1
    exit_mu = 0 if (hv <= 0.0 or hv > safe.mu) else -1
    for k in range(1, n_steps + 1):
        u = phi.raw(x)
        if not np.all(np.isfinite(u)):
            raise NumericalBlowupError("compensator output non-finite",
                                       x=x[0], t=(k - 1) * dt)
        fx, gx, uo = sys.drift_terms(x)
        x = x + (fx + np.einsum("pnm,pm->pn", gx, uo + u)) * dt
        if not np.all(np.isfinite(x)):
            raise NumericalBlowupError("state non-finite", x=x[0], t=k * dt)
        hv = safe.h(x)[0]
        if exit_chi < 0 and hv <= 0.0:
            exit_chi = k
        if exit_mu < 0 and (hv <= 0.0 or hv > safe.mu):
            exit_mu = k
        pos = rec_pos.get(k)
        if pos is not None:
            states[pos] = x[0]
    return SamplePath(
        times=rec_ks * dt,
        states=states,
        exit_time_chi=float(exit_chi * dt) if exit_chi >= 0 else NEVER,
        exit_time_chi_mu=float(exit_mu * dt) if exit_mu >= 0 else NEVER,
        path_seed=-1,
    )


# ---------------------------------------------------------------------------
# trajectory export
# ---------------------------------------------------------------------------

def TRAJECTORY_COLUMNS(n: int, m: int = 1) -> List[str]:
    cols = ["path_id", "t"] + [f"x_{i + 1}" for i in range(n)]
    cols += ["u"] if m == 1 else [f"u_{i + 1}" for i in range(m)]
    cols += ["u_o"] if m == 1 else [f"u_o_{i + 1}" for i in range(m)]
    return cols + ["h", "exited_chi"]


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trajectories_csv(path, ens: PathEnsemble, sys: ControlAffineSDE,
                           phi: Compensator, safe: SafeSet) -> None:
    """One row per recorded step per path, frozen column schema.

    u and u_o are re-evaluated at the recorded states (the input applied
    on the step starting there); exited_chi flags whether the frozen
    chi-exit time lies at or before the row's time.
    """
    times = ens.times
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS(sys.n, sys.m)) + "\n")
        for p in ens.paths:
            u = phi.raw(p.states)
            _, _, uo = sys.drift_terms(p.states)
            hv = safe.h(p.states)
            for r, t in enumerate(times):
                row = [str(p.path_seed), _fmt(t)]
                row += [_fmt(v) for v in p.states[r]]
                row += [_fmt(v) for v in u[r]]
                row += [_fmt(v) for v in uo[r]]
                row += [_fmt(hv[r]), str(int(p.exit_time_chi <= t))]
                fh.write(",".join(row) + "\n")
