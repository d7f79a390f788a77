"""Statistical verdicts from simulated ensembles.

The closed-form safety bounds hold over an infinite horizon; Monte Carlo
checks a finite one, so a verdict can only falsify a bound ("empirical
exits exceed the cap beyond the confidence interval"), never prove it.
Confidence intervals are exact Clopper-Pearson at 99% because exit
events can be rare and tail exactness matters there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy import stats

from .calculus import ControlAffineSDE, ScalarField
from .certificates import SafeSet, scaled_safety_bound
from .compensators import Compensator
from .errors import ParameterError
from .simulate import PathEnsemble, SimConfig, simulate_deterministic, simulate_ensemble

__all__ = [
    "SafetyVerdict",
    "MuZoneTrace",
    "SweepRow",
    "clopper_pearson",
    "estimate_exit_probability",
    "mu_zone_trace",
    "compare_bound_sweep",
    "ensemble_summary",
    "SWEEP_COLUMNS",
]

CONFIDENCE = 0.99
EPS_FLOOR = 1e-12


def clopper_pearson(k: int, n: int, confidence: float = CONFIDENCE):
    """Exact two-sided binomial interval for k successes out of n."""
    if n < 1:
        raise ParameterError(f"need n >= 1 trials, got {n}")
    if not 0 <= k <= n:
        raise ParameterError(f"k must lie in [0, {n}], got {k}")
    alpha = 1.0 - confidence
    low = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2.0, k, n - k + 1))
    high = 1.0 if k == n else float(stats.beta.ppf(1.0 - alpha / 2.0, k + 1, n - k))
    return low, high


@dataclass(frozen=True)
class SafetyVerdict:
    """Empirical exit probability compared against a closed-form cap."""

    empirical_exit_prob: float
    ci_low: float
    ci_high: float
    theoretical_exit_cap: float
    consistent: bool
    n_paths: int
    horizon: float
    bound_kind: str

    def to_json_dict(self) -> dict:
        return {
            "empirical_exit_prob": self.empirical_exit_prob,
            "ci": [self.ci_low, self.ci_high],
            "theoretical_exit_cap": self.theoretical_exit_cap,
            "consistent": bool(self.consistent),
            "n_paths": self.n_paths,
            "horizon": self.horizon,
            "bound_kind": self.bound_kind,
        }


def estimate_exit_probability(ens: PathEnsemble, safe: SafeSet, horizon: float,
                              cap: float, bound_kind: str = "exp(-b*mu)") -> SafetyVerdict:
    """Fraction of paths leaving chi by the horizon, with exact 99% CI.

    consistent means the interval's lower end does not exceed the cap,
    i.e. the data do not falsify the bound.
    """
    if not ens.paths:
        raise ParameterError("ensemble is empty")
    if horizon > ens.config.horizon * (1.0 + 1e-12):
        raise ParameterError(
            f"horizon {horizon} exceeds simulated horizon {ens.config.horizon}"
        )
    exits = ens.exit_times_chi()
    n = exits.shape[0]
    k = int(np.count_nonzero(exits <= horizon))
    low, high = clopper_pearson(k, n)
    return SafetyVerdict(
        empirical_exit_prob=k / n,
        ci_low=low,
        ci_high=high,
        theoretical_exit_cap=float(cap),
        consistent=bool(low <= cap),
        n_paths=n,
        horizon=float(horizon),
        bound_kind=bound_kind,
    )


# ---------------------------------------------------------------------------
# boundary-layer convergence trace
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MuZoneTrace:
    """W(t) = ([mean e^{-b h(x(t))} - e^{-b mu}]_+)^2 on the recorded grid."""

    times: np.ndarray
    w_hat: np.ndarray
    mu_b: float
    mean_bb: np.ndarray       # ensemble mean of e^{-b h}
    se_bb: np.ndarray         # standard error of that mean
    trend_slope: float
    trend_stderr: float
    decaying: bool            # slope <= 0 within 3 standard errors


def _log_trend(times, w_hat, eps=EPS_FLOOR):
    mask = w_hat > eps
    t = times[mask]
    if t.size < 2:
        return 0.0, 0.0
    y = np.log(w_hat[mask] + eps)
    tbar, ybar = t.mean(), y.mean()
    sxx = float(np.sum((t - tbar) ** 2))
    if sxx == 0.0:
        return 0.0, 0.0
    slope = float(np.sum((t - tbar) * (y - ybar)) / sxx)
    if t.size < 3:
        return slope, math.inf
    resid = y - (ybar + slope * (t - tbar))
    var = float(np.sum(resid**2)) / (t.size - 2)
    return slope, math.sqrt(var / sxx)


def mu_zone_trace(ens: PathEnsemble, h: ScalarField, b: float, mu: float) -> MuZoneTrace:
    """Ensemble estimate of the boundary-layer attraction statistic.

    Paths must start in {h <= mu}.  The trace substitutes the ensemble
    average for the true expectation; its Monte Carlo error is reported
    as the standard error of the mean.
    """
    b, mu = float(b), float(mu)
    if not b > 0.0:
        raise ParameterError(f"b must be > 0, got {b}")
    if not mu > 0.0:
        raise ParameterError(f"mu must be > 0, got {mu}")
    if not ens.paths:
        raise ParameterError("ensemble is empty")
    states = ens.states_array()          # (P, R, n)
    h0 = h(states[:, 0])
    if np.any(h0 > mu):
        raise ParameterError(
            f"mu-zone trace requires starts with h <= mu, found h = {h0.max()}"
        )
    bb = np.exp(-b * h(states))          # (P, R)
    mean_bb = bb.mean(axis=0)
    P = bb.shape[0]
    se_bb = bb.std(axis=0, ddof=1) / math.sqrt(P) if P > 1 else np.zeros_like(mean_bb)
    mu_b = float(np.exp(-b * mu))
    w_hat = np.square(np.clip(mean_bb - mu_b, 0.0, None))
    slope, stderr = _log_trend(ens.times, w_hat)
    return MuZoneTrace(
        times=ens.times,
        w_hat=w_hat,
        mu_b=mu_b,
        mean_bb=mean_bb,
        se_bb=se_bb,
        trend_slope=slope,
        trend_stderr=stderr,
        decaying=bool(slope <= 3.0 * stderr),
    )


# ---------------------------------------------------------------------------
# diffusion-scaling sweep
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ["a", "cap", "empirical", "ci_low", "ci_high", "consistent"]


@dataclass(frozen=True)
class SweepRow:
    a: float
    cap: float
    empirical: float
    ci_low: float
    ci_high: float
    consistent: bool

    def to_csv_row(self) -> List[str]:
        return [repr(self.a), repr(self.cap), repr(self.empirical),
                repr(self.ci_low), repr(self.ci_high), str(int(self.consistent))]


def compare_bound_sweep(sys: ControlAffineSDE, phi: Compensator, safe: SafeSet,
                        b: float, mu: float, x0, cfg: SimConfig,
                        a_values: Sequence[float]) -> List[SweepRow]:
    """Run the sigma' = a sigma plant per row under the unchanged compensator.

    The cap per row is e^{-b mu / a^2}; a = 0 runs the deterministic
    closed loop (expected exit-free).  Values outside [0, 1] are rejected.
    """
    rows = []
    for a in a_values:
        a = float(a)
        if not 0.0 <= a <= 1.0:
            raise ParameterError(f"sweep values must lie in [0, 1], got {a}")
        cap = 1.0 - scaled_safety_bound(b, mu, a) if a > 0.0 else 0.0
        if a == 0.0:
            path = simulate_deterministic(sys, phi, x0, safe, cfg)
            k, n = (1, 1) if path.exit_time_chi <= cfg.horizon else (0, 1)
        else:
            scaled = ControlAffineSDE(
                n=sys.n, m=sys.m, d=sys.d,
                f=sys.f, g=sys.g,
                sigma=(lambda x, _a=a: _a * np.asarray(sys.sigma(x), dtype=float)),
                u_o=sys.u_o,
                name=f"{sys.name} (sigma scaled by {a})",
            )
            ens = simulate_ensemble(scaled, phi, x0, safe, cfg)
            exits = ens.exit_times_chi()
            n = exits.shape[0]
            k = int(np.count_nonzero(exits <= cfg.horizon))
        low, high = clopper_pearson(k, n)
        rows.append(SweepRow(
            a=a, cap=float(cap), empirical=k / n,
            ci_low=low, ci_high=high, consistent=bool(low <= cap),
        ))
    return rows


def ensemble_summary(ens: PathEnsemble, safe: SafeSet) -> dict:
    """Summary record for an ensemble over its full horizon."""
    horizon = ens.config.horizon
    exits_chi = ens.exit_times_chi()
    exits_mu = ens.exit_times_chi_mu()
    n = exits_chi.shape[0]
    k = int(np.count_nonzero(exits_chi <= horizon))
    low, high = clopper_pearson(k, n)
    cfg = ens.config
    return {
        "n_paths": n,
        "exit_fraction_chi": k / n,
        "exit_fraction_chi_mu": int(np.count_nonzero(exits_mu <= horizon)) / n,
        "ci_low": low,
        "ci_high": high,
        "config": {
            "dt": cfg.dt, "horizon": cfg.horizon, "n_paths": cfg.n_paths,
            "master_seed": cfg.master_seed, "record_stride": cfg.record_stride,
        },
    }
