"""Experiment orchestration: configs, artifact files and the built-in runs.

Each run resolves a config (defaults, then config file, then flag
overrides), executes deterministically from the master seed, and writes
its artifacts into the output directory.  No timestamps are written, so
identical configs produce byte-identical files.

Artifact schemas (frozen):
    params.json               closed-form design constants
    certificates.json         list of certificate reports
    trajectories.csv          path_id,t,x_1..x_n,u,u_o,h,exited_chi
                              (path_id -1 is the noise-free overlay)
    verdict.json              exit-probability verdict vs the cap
    compensator_profile.csv   x,phi          (pre-input forced to 0)
    field_profile.csv         x,h
    mu_zone.csv               t,w_hat,mean_bb,se_bb
    sweep.csv                 a,cap,empirical,ci_low,ci_high,consistent
    comparison.json           paired exit fractions of the two
                              motivating compensators
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .analysis import (
    SWEEP_COLUMNS,
    compare_bound_sweep,
    ensemble_summary,
    estimate_exit_probability,
    mu_zone_trace,
)
from .calculus import scalar_plant
from .certificates import (
    SafeSet,
    check_as_rcbf,
    check_as_zcbf,
    check_fiip_condition,
    check_stochastic_zcbf,
    interval_grid,
    level_filtered_grid,
    safety_probability_bound,
)
from .compensators import (
    derive_example1_params,
    derive_example2_params,
    example1_compensator,
    example2_compensator,
    min_norm_compensator,
    motivating_compensators,
    zero_compensator,
)
from .errors import ParameterError
from .fields import (
    barrier_fields_example1,
    barrier_fields_example2,
    halfline_margin_field,
    halfline_reciprocal_field,
)
from .simulate import (
    SimConfig,
    simulate_deterministic,
    simulate_ensemble,
    write_trajectories_csv,
)

__all__ = [
    "ExperimentConfig",
    "BOUNDARY_OFFSET",
    "run_motivation",
    "run_example1",
    "run_example2",
    "run_sweep",
    "run_check",
    "run_fields",
    "run_experiment",
]

EXPERIMENTS = ("motivation", "example1", "example2", "sweep", "check", "fields")

# Starts placed exactly on the boundary are nudged inside by this offset
# so reciprocal designs are defined at t = 0 (same constant as the
# certificate-grid boundary clip).
BOUNDARY_OFFSET = 1e-6

# Grid sizes for the built-in certificate checks.
_GRID_N = 10_000
_BOUNDARY_CLIP = 1e-6
_PROFILE_N = 2001


@dataclass
class ExperimentConfig:
    """Resolved settings for one run; every field maps to a flag/JSON key."""

    experiment: str
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    c: float = 0.1
    u_max: float = 1.0
    n_cutoff: float = 1e10
    a_values: Sequence[float] = (1.0, 0.5, 0.0)
    dt: float = 1e-3
    horizon: float = 10.0
    n_paths: int = 10_000
    master_seed: int = 12345
    record_stride: Optional[int] = None
    x0: Optional[float] = None
    u_o: float = -1.0
    out_dir: str = "stocbf_out"
    # `check` selection
    plant: str = "example1"
    field: str = "h1"
    compensator: str = "phi_N"
    kind: str = "as_zcbf"
    b: Optional[float] = None
    mu: Optional[float] = None
    c1: float = 0.0
    c2: float = 0.0
    # grids / profiles
    lo: Optional[float] = None
    hi: Optional[float] = None
    points: int = _PROFILE_N

    _DEFAULTS = {
        "motivation": dict(alpha=1.0, gamma=1.0, c=0.1, u_o=-1.0, dt=1e-4,
                           horizon=1.0, n_paths=1000),
        "example1": dict(alpha=1.0, gamma=1.0, c=0.1, u_max=1.0, n_cutoff=1e10,
                         x0=4.0, u_o=-1.0, dt=1e-3, horizon=10.0, n_paths=10_000),
        "example2": dict(alpha=0.0, beta=1.0, c=0.01, u_max=1.0,
                         x0=0.99, u_o=1.0, dt=1e-4, horizon=10.0, n_paths=10_000),
        "sweep": dict(alpha=1.0, gamma=1.0, c=0.1, u_max=1.0, n_cutoff=1e10,
                      x0=4.0, u_o=-1.0, dt=1e-3, horizon=10.0, n_paths=10_000,
                      a_values=(1.0, 0.5, 0.0)),
        "check": dict(),
        "fields": dict(),
    }

    @classmethod
    def for_experiment(cls, experiment: str, **overrides) -> "ExperimentConfig":
        if experiment not in EXPERIMENTS:
            raise ParameterError(
                f"unknown experiment {experiment!r}; choose one of {EXPERIMENTS}"
            )
        values = dict(cls._DEFAULTS[experiment])
        if experiment in ("check", "fields"):
            plant = overrides.get("plant") or cls.plant
            if plant in cls._DEFAULTS:
                values.update(cls._DEFAULTS[plant])
        for key, val in overrides.items():
            if val is None:
                continue
            if not hasattr(cls, "__dataclass_fields__") or key not in cls.__dataclass_fields__:
                raise ParameterError(f"unknown config key {key!r}")
            values[key] = val
        return cls(experiment=experiment, **values)

    @classmethod
    def from_file(cls, path: str, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        if "experiment" not in data:
            raise ParameterError(f"config file {path} lacks the 'experiment' key")
        experiment = data.pop("experiment")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.for_experiment(experiment, **data)

    def sim_config(self) -> SimConfig:
        n_steps = max(1, int(round(self.horizon / self.dt)))
        stride = self.record_stride or max(1, n_steps // 1000)
        return SimConfig(dt=self.dt, horizon=self.horizon, n_paths=self.n_paths,
                         master_seed=self.master_seed, record_stride=stride)

    def to_json_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["a_values"] = list(self.a_values)
        return out


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def _write_json(path: str, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header: List[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _profile_rows(xs, ys):
    return ([repr(float(a)), repr(float(b))] for a, b in zip(xs, ys))


def _ensure_out(cfg: ExperimentConfig) -> str:
    out = os.path.join(cfg.out_dir, cfg.experiment)
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# built-in plant assembly
# ---------------------------------------------------------------------------

def _example1_setup(cfg: ExperimentConfig):
    p = derive_example1_params(cfg.alpha, cfg.gamma, cfg.c, cfg.u_max, cfg.n_cutoff)
    sys = scalar_plant(u_o=cfg.u_o, c=cfg.c, name="half-line plant")
    h1, B1 = barrier_fields_example1(p)
    safe = SafeSet(h=h1, mu=p.mu1)
    phi1 = example1_compensator(p, cfg.u_o)
    phiN = min_norm_compensator(sys, h1, cfg.gamma)
    return p, sys, h1, B1, safe, phi1, phiN


def _example2_setup(cfg: ExperimentConfig):
    p = derive_example2_params(cfg.alpha, cfg.beta, cfg.c, cfg.u_max)
    sys = scalar_plant(u_o=cfg.u_o, c=cfg.c, name="interval plant")
    h2, B2 = barrier_fields_example2(p)
    safe = SafeSet(h=h2, mu=p.mu2)
    phiN2, phi2 = example2_compensator(p, cfg.u_o)
    return p, sys, h2, B2, safe, phiN2, phi2


def _zone_grid(which: str, p, h, mu: float, lo: float, hi: float):
    """Sublevel grid {h <= mu}, with the boundary layer sampled finely.

    The interval design's layer is only ~1e-4 wide, so a uniform grid
    over the window would miss it entirely; dedicated strips through
    [boundary, x_mu] keep the check meaningful where it binds.
    """
    parts = [level_filtered_grid(h, lo, hi, _GRID_N, max_level=mu)]
    if which == "example2":
        left = np.linspace(p.alpha - p.beta, p.x_mu2_left, 2000)[:, None]
        right = np.linspace(p.x_mu2_right, p.alpha + p.beta, 2000)[:, None]
        for strip in (left, right):
            keep = h(strip) <= mu
            parts.append(strip[keep])
    else:
        strip = np.linspace(p.alpha, p.x_mu1, 2000)[:, None]
        parts.append(strip[h(strip) <= mu])
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

def run_motivation(cfg: ExperimentConfig) -> dict:
    """Paired runs of the two motivating compensators from the boundary.

    Both arms share per-path seeds.  The start is nudged to
    alpha + BOUNDARY_OFFSET: exactly on the boundary the exit time is
    trivially zero and the reciprocal design is undefined, while just
    inside, the zeroing design still starts as pure diffusion.
    """
    out = _ensure_out(cfg)
    phi_hs, phi_bs = motivating_compensators(cfg.alpha, cfg.gamma, cfg.c, cfg.u_o)
    sys = scalar_plant(u_o=cfg.u_o, c=cfg.c, name="half-line plant")
    h = halfline_margin_field(cfg.alpha)
    safe = SafeSet(h=h, mu=0.0)
    x0 = np.array([cfg.alpha + BOUNDARY_OFFSET if cfg.x0 is None else cfg.x0])
    sim = cfg.sim_config()

    results = {}
    for label, phi in (("phi_hs", phi_hs), ("phi_bs", phi_bs)):
        ens = simulate_ensemble(sys, phi, x0, safe, sim)
        write_trajectories_csv(os.path.join(out, f"trajectories_{label}.csv"),
                               ens, sys, phi, safe)
        results[label] = ensemble_summary(ens, safe)

    fa = results["phi_hs"]["exit_fraction_chi"]
    fb = results["phi_bs"]["exit_fraction_chi"]
    comparison = {
        "x0": float(x0[0]),
        "phi_hs": results["phi_hs"],
        "phi_bs": results["phi_bs"],
        "reciprocal_strictly_safer": bool(fb < fa),
    }
    _write_json(os.path.join(out, "comparison.json"), comparison)
    return {
        "out_dir": out,
        "comparison": comparison,
        "summary_lines": [
            f"exit fraction under zeroing design   : {fa:.4f}",
            f"exit fraction under reciprocal design: {fb:.4f}",
            f"strict ordering holds                : {fb < fa}",
        ],
    }


def _run_worked_example(cfg: ExperimentConfig, which: str) -> dict:
    out = _ensure_out(cfg)
    if which == "example1":
        p, sys, h, B, safe, phi_sat, phi_min = _example1_setup(cfg)
        gamma = cfg.gamma
        b, mu = p.b1, p.mu1
        chi_lo, chi_hi = cfg.alpha + _BOUNDARY_CLIP, cfg.alpha + 4.0
        zone_lo, zone_hi = cfg.alpha - 2.0, p.x_mu1
        prof_lo, prof_hi = cfg.alpha - 1.0, cfg.alpha + 3.0
        params_payload = p.as_dict()
    else:
        p, sys, h, B, safe, phi_min, phi_sat = _example2_setup(cfg)
        gamma = p.gamma2
        b, mu = p.b2, p.mu2
        chi_lo, chi_hi = cfg.alpha - cfg.beta, cfg.alpha + cfg.beta
        zone_lo, zone_hi = cfg.alpha - cfg.beta - 1.0, cfg.alpha + cfg.beta + 1.0
        prof_lo, prof_hi = cfg.alpha - cfg.beta - 1.0, cfg.alpha + cfg.beta + 1.0
        params_payload = p.as_dict()

    bound = safety_probability_bound(b, mu)
    cap = 1.0 - bound
    params_payload.update({
        "safety_probability_bound": bound,
        "exit_probability_cap": cap,
        "gamma": gamma,
    })
    _write_json(os.path.join(out, "params.json"), params_payload)

    chi_grid = level_filtered_grid(h, chi_lo, chi_hi, _GRID_N, min_level=_BOUNDARY_CLIP)
    zone_grid = _zone_grid(which, p, h, mu, zone_lo, zone_hi)
    reports = [
        check_as_rcbf(sys, phi_min, B, gamma, chi_grid),
        check_as_zcbf(sys, phi_min, h, gamma, chi_grid),
        check_stochastic_zcbf(sys, phi_sat, safe, b, zone_grid),
    ]
    _write_json(os.path.join(out, "certificates.json"),
                [r.to_json_dict() for r in reports])

    sim = cfg.sim_config()
    x0 = np.array([float(cfg.x0)])
    # The cap depends on where the run starts: above the layer it is
    # e^{-b mu}; inside the layer it weakens to e^{-b h(x0)}; outside
    # the safe set no bound applies.
    h0 = float(h(x0))
    if h0 > mu:
        run_cap, bound_kind = cap, "exp(-b*mu)"
    elif h0 > 0.0:
        run_cap, bound_kind = float(np.exp(-b * h0)), "exp(-b*h(x0))"
    else:
        run_cap, bound_kind = 1.0, "none (start outside chi)"
    ens = simulate_ensemble(sys, phi_sat, x0, safe, sim)
    verdict = estimate_exit_probability(ens, safe, sim.horizon, run_cap,
                                        bound_kind=bound_kind)
    _write_json(os.path.join(out, "verdict.json"), verdict.to_json_dict())

    fan = ens.paths[: min(10, len(ens.paths))]
    det = simulate_deterministic(sys, phi_sat, x0, safe, sim)
    fan_ens = type(ens)(paths=list(fan) + [det], config=sim)
    write_trajectories_csv(os.path.join(out, "trajectories.csv"),
                           fan_ens, sys, phi_sat, safe)

    prof_grid = interval_grid(prof_lo, prof_hi, cfg.points)
    if which == "example1":
        prof_phi = example1_compensator(p, 0.0)
    else:
        _, prof_phi = example2_compensator(p, 0.0)
    phi_vals = prof_phi.raw(prof_grid)[:, 0]
    _write_csv(os.path.join(out, "compensator_profile.csv"), ["x", "phi"],
               _profile_rows(prof_grid[:, 0], phi_vals))

    field_grid = interval_grid(prof_lo, prof_hi, cfg.points)
    _write_csv(os.path.join(out, "field_profile.csv"), ["x", "h"],
               _profile_rows(field_grid[:, 0], h(field_grid)))

    extra_lines = []
    if safe.h(x0) <= mu:
        trace = mu_zone_trace(ens, h, b, mu)
        rows = ([repr(float(t)), repr(float(w)), repr(float(m)), repr(float(s))]
                for t, w, m, s in zip(trace.times, trace.w_hat,
                                      trace.mean_bb, trace.se_bb))
        _write_csv(os.path.join(out, "mu_zone.csv"),
                   ["t", "w_hat", "mean_bb", "se_bb"], rows)
        extra_lines.append(
            f"boundary-layer trace: W(0) = {trace.w_hat[0]:.4f}, "
            f"log-trend slope {trace.trend_slope:.3g} (decaying: {trace.decaying})"
        )

    return {
        "out_dir": out,
        "reports": reports,
        "verdict": verdict,
        "summary_lines": [
            f"derived parameters: b = {b:.6g}, mu = {mu:.6g}",
            f"safety probability bound: {bound:.4f} (exit cap {cap:.4f})",
            *(f"certificate {r.kind}: passed={r.passed} "
              f"worst_margin={r.worst_margin:.3g}" for r in reports),
            f"empirical exit fraction: {verdict.empirical_exit_prob:.4f} "
            f"(99% CI [{verdict.ci_low:.4f}, {verdict.ci_high:.4f}])",
            f"verdict consistent with the bound: {verdict.consistent}",
            *extra_lines,
        ],
    }


def run_example1(cfg: ExperimentConfig) -> dict:
    return _run_worked_example(cfg, "example1")


def run_example2(cfg: ExperimentConfig) -> dict:
    return _run_worked_example(cfg, "example2")


def run_sweep(cfg: ExperimentConfig) -> dict:
    """Diffusion-scaling sweep on the half-line design."""
    out = _ensure_out(cfg)
    p, sys, h, B, safe, phi1, _ = _example1_setup(cfg)
    sim = cfg.sim_config()
    rows = compare_bound_sweep(sys, phi1, safe, p.b1, p.mu1,
                               np.array([float(cfg.x0)]), sim, cfg.a_values)
    _write_csv(os.path.join(out, "sweep.csv"), SWEEP_COLUMNS,
               (r.to_csv_row() for r in rows))
    return {
        "out_dir": out,
        "rows": rows,
        "summary_lines": [
            f"a={r.a:g}: empirical={r.empirical:.2e} cap={r.cap:.2e} "
            f"consistent={r.consistent}" for r in rows
        ],
    }


def run_check(cfg: ExperimentConfig) -> dict:
    """Generic certificate check on the built-in plants."""
    out = _ensure_out(cfg)
    if cfg.plant == "example1":
        p, sys, h1, B1, safe, phi1, phiN = _example1_setup(cfg)
        fields = {
            "h1": h1, "B1": B1,
            "hs": halfline_margin_field(cfg.alpha),
            "Bs": halfline_reciprocal_field(cfg.alpha),
        }
        phi_hs, phi_bs = motivating_compensators(cfg.alpha, cfg.gamma, cfg.c, cfg.u_o)
        compensators = {"phi_N": phiN, "phi1": phi1,
                        "phi_hs": phi_hs, "phi_Bs": phi_bs,
                        "zero": zero_compensator(1, 1)}
        gamma, b, mu = cfg.gamma, p.b1, p.mu1
        chi_lo, chi_hi = cfg.alpha + _BOUNDARY_CLIP, cfg.alpha + 4.0
        zone_lo, zone_hi = cfg.alpha - 2.0, p.x_mu1
    elif cfg.plant == "example2":
        p, sys, h2, B2, safe, phiN2, phi2 = _example2_setup(cfg)
        fields = {"h2": h2, "B2": B2}
        compensators = {"phi_N2": phiN2, "phi2": phi2,
                        "zero": zero_compensator(1, 1)}
        gamma, b, mu = p.gamma2, p.b2, p.mu2
        chi_lo, chi_hi = cfg.alpha - cfg.beta, cfg.alpha + cfg.beta
        zone_lo, zone_hi = cfg.alpha - cfg.beta - 1.0, cfg.alpha + cfg.beta + 1.0
    else:
        raise ParameterError(f"unknown plant {cfg.plant!r}")

    if cfg.field not in fields:
        raise ParameterError(
            f"unknown field {cfg.field!r} for plant {cfg.plant!r}; "
            f"choose one of {sorted(fields)}"
        )
    if cfg.compensator not in compensators:
        raise ParameterError(
            f"unknown compensator {cfg.compensator!r}; choose one of "
            f"{sorted(compensators)}"
        )
    fld = fields[cfg.field]
    phi = compensators[cfg.compensator]
    b = cfg.b if cfg.b is not None else b
    mu = cfg.mu if cfg.mu is not None else mu
    lo = cfg.lo if cfg.lo is not None else chi_lo
    hi = cfg.hi if cfg.hi is not None else chi_hi

    if cfg.kind == "as_rcbf":
        grid = level_filtered_grid(safe.h, lo, hi, _GRID_N, min_level=_BOUNDARY_CLIP)
        report = check_as_rcbf(sys, phi, fld, gamma, grid)
    elif cfg.kind == "as_zcbf":
        grid = level_filtered_grid(safe.h, lo, hi, _GRID_N, min_level=_BOUNDARY_CLIP)
        report = check_as_zcbf(sys, phi, fld, gamma, grid)
    elif cfg.kind == "stochastic":
        zone = SafeSet(h=safe.h, mu=mu)
        grid = _zone_grid(cfg.plant, p, safe.h, mu,
                          cfg.lo if cfg.lo is not None else zone_lo,
                          cfg.hi if cfg.hi is not None else zone_hi)
        report = check_stochastic_zcbf(sys, phi, zone, b, grid)
    elif cfg.kind == "fiip":
        grid = level_filtered_grid(safe.h, lo, hi, _GRID_N, min_level=_BOUNDARY_CLIP)
        report = check_fiip_condition(sys, phi, fld, cfg.c1, cfg.c2, grid)
    else:
        raise ParameterError(
            f"unknown check kind {cfg.kind!r}; choose as_rcbf, as_zcbf, "
            "stochastic or fiip"
        )

    _write_json(os.path.join(out, "certificates.json"), [report.to_json_dict()])
    return {
        "out_dir": out,
        "reports": [report],
        "summary_lines": [
            f"{report.kind} on {cfg.plant}/{cfg.field} with {cfg.compensator}: "
            f"passed={report.passed} worst_margin={report.worst_margin:.3g} "
            f"at x={report.worst_point}",
        ],
    }


def run_fields(cfg: ExperimentConfig) -> dict:
    """Dump a barrier-field profile CSV (for shape figures)."""
    out = _ensure_out(cfg)
    if cfg.plant == "example1":
        p = derive_example1_params(cfg.alpha, cfg.gamma, cfg.c, cfg.u_max, cfg.n_cutoff)
        h, _ = barrier_fields_example1(p)
        lo = cfg.lo if cfg.lo is not None else cfg.alpha + 1e-4
        hi = cfg.hi if cfg.hi is not None else cfg.alpha + 8.0
    elif cfg.plant == "example2":
        p = derive_example2_params(cfg.alpha, cfg.beta, cfg.c, cfg.u_max)
        h, _ = barrier_fields_example2(p)
        lo = cfg.lo if cfg.lo is not None else cfg.alpha - cfg.beta - 1.0
        hi = cfg.hi if cfg.hi is not None else cfg.alpha + cfg.beta + 1.0
    else:
        raise ParameterError(f"unknown plant {cfg.plant!r}")
    grid = interval_grid(lo, hi, cfg.points)
    _write_csv(os.path.join(out, "field_profile.csv"), ["x", "h"],
               _profile_rows(grid[:, 0], h(grid)))
    return {
        "out_dir": out,
        "summary_lines": [f"wrote field profile over [{lo:g}, {hi:g}] "
                          f"({cfg.points} points)"],
    }


_RUNNERS = {
    "motivation": run_motivation,
    "example1": run_example1,
    "example2": run_example2,
    "sweep": run_sweep,
    "check": run_check,
    "fields": run_fields,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    return _RUNNERS[cfg.experiment](cfg)
