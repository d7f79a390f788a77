"""Safe sets and grid-sampled certificate checks.

Certificates are pointwise generator inequalities; they are verified on
finite point sets (rectangular grids plus random points), reporting the
worst margin and where it occurred.  Grid checking can falsify but not
prove a certificate; grids in chi are clipped away from the boundary
because reciprocal fields and min-norm compensators diverge there.

Margins are normalized by 1 plus the magnitudes of the inequality's
terms.  Near the boundary clip a reciprocal certificate compares
quantities of order 1/h^3, whose float64 cancellation noise dwarfs any
absolute tolerance; dividing by the local scale keeps the pass
tolerance meaningful uniformly while preserving the margin's sign.
The raw (unnormalized) worst margin is recorded in the report
parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .calculus import (
    Array,
    ControlAffineSDE,
    ScalarField,
    _as_points,
    diffusion_quadratic,
    drift_lie_derivative,
    generator,
    ito_correction,
    reciprocal_field,
)
from .compensators import Compensator
from .errors import DomainError, ParameterError

__all__ = [
    "SafeSet",
    "CertificateReport",
    "PASS_TOLERANCE",
    "STRICT_TOLERANCE",
    "check_as_rcbf",
    "check_as_zcbf",
    "check_stochastic_zcbf",
    "check_fiip_condition",
    "check_diffusion_robustness_as",
    "check_diffusion_robustness_stoch",
    "safety_probability_bound",
    "scaled_safety_bound",
    "interval_grid",
    "level_filtered_grid",
]

# Inequality slack absorbed as roundoff; strict variants need real slack.
PASS_TOLERANCE = 1e-9
STRICT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SafeSet:
    """The sets induced by a barrier field h and a boundary-layer level mu.

    chi            = {h > 0}
    chi_mu         = {0 < h <= mu}
    chi_above_mu   = {h > mu}
    sublevel_mu    = {h <= mu}
    """

    h: ScalarField
    mu: float = 0.0

    def __post_init__(self):
        if self.mu < 0.0:
            raise ParameterError(f"mu must be >= 0, got {self.mu}")

    def in_chi(self, x) -> Array:
        return self.h(x) > 0.0

    def in_chi_mu(self, x) -> Array:
        v = self.h(x)
        return (v > 0.0) & (v <= self.mu)

    def in_chi_above_mu(self, x) -> Array:
        return self.h(x) > self.mu

    def in_sublevel_mu(self, x) -> Array:
        return self.h(x) <= self.mu


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of one grid-sampled certificate check."""

    kind: str
    passed: bool
    worst_margin: float
    worst_point: list
    points_checked: int
    parameters: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "passed": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "worst_point": [float(v) for v in self.worst_point],
            "points_checked": int(self.points_checked),
            "parameters": self.parameters,
        }


def _grid_points(grid, n: int) -> Array:
    g = np.asarray(grid, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    g = _as_points(g, n).reshape(-1, n)
    if g.shape[0] == 0:
        raise ParameterError("certificate grid is empty")
    return g


def _scale(*terms: Array) -> Array:
    total = None
    for t in terms:
        a = np.abs(t)
        total = a if total is None else total + a
    return 1.0 + total


def _report(kind: str, margins: Array, scale: Array, grid: Array,
            parameters: dict) -> CertificateReport:
    scaled = margins / scale
    worst = int(np.argmin(scaled))
    parameters = dict(parameters)
    parameters["raw_worst_margin"] = float(margins[worst])
    return CertificateReport(
        kind=kind,
        passed=bool(scaled[worst] >= -PASS_TOLERANCE),
        worst_margin=float(scaled[worst]),
        worst_point=[float(v) for v in grid[worst]],
        points_checked=int(grid.shape[0]),
        parameters=parameters,
    )


# ---------------------------------------------------------------------------
# certificate checks
# ---------------------------------------------------------------------------

def check_as_rcbf(sys: ControlAffineSDE, phi: Compensator, B: ScalarField,
                  gamma: float, grid) -> CertificateReport:
    """Almost-sure reciprocal certificate: generator(B) <= gamma B on chi."""
    gamma = float(gamma)
    if not gamma > 0.0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    g = _grid_points(grid, sys.n)
    B.require_in_domain(g)
    u = phi(g)
    bound = gamma * B(g)
    ld = drift_lie_derivative(sys, B, g, u)
    li = ito_correction(sys, B, g)
    margins = bound - ld - li
    return _report("AS_RCBF", margins, _scale(bound, ld, li), g, {"gamma": gamma})


def check_as_zcbf(sys: ControlAffineSDE, phi: Compensator, h: ScalarField,
                  gamma: float, grid) -> CertificateReport:
    """Almost-sure zeroing certificate:

    generator(h) >= -gamma h + L^I(h) + h^2 L^I(1/h)  on chi.
    """
    gamma = float(gamma)
    if not gamma > 0.0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    g = _grid_points(grid, sys.n)
    hv = h(g)
    if np.any(hv <= 0.0):
        raise DomainError(
            f"AS-ZCBF grid point outside chi: {g[hv <= 0.0][0]}"
        )
    B = reciprocal_field(h)
    u = phi(g)
    lhs = generator(sys, h, g, u)
    decay = gamma * hv
    ito_h = ito_correction(sys, h, g)
    ito_b = hv**2 * ito_correction(sys, B, g)
    margins = lhs - (-decay + ito_h + ito_b)
    return _report("AS_ZCBF", margins, _scale(lhs, decay, ito_h, ito_b), g,
                   {"gamma": gamma})


def check_stochastic_zcbf(sys: ControlAffineSDE, phi: Compensator, safe: SafeSet,
                          b: float, grid, proper_on_rn: bool = True) -> CertificateReport:
    """Boundary-layer certificate: generator(h) >= b H_sigma(h) on {h <= mu}.

    The properness of h on all of R^n is a declared property of the
    field, asserted by the caller and recorded in the report.
    """
    b = float(b)
    if not b > 0.0:
        raise ParameterError(f"b must be > 0, got {b}")
    g = _grid_points(grid, sys.n)
    hv = safe.h(g)
    if np.any(hv > safe.mu):
        raise DomainError(
            f"stochastic ZCBF grid point with h > mu: {g[hv > safe.mu][0]}"
        )
    u = phi(g)
    lhs = generator(sys, safe.h, g, u)
    rhs = b * diffusion_quadratic(sys, safe.h, g)
    margins = lhs - rhs
    scale = _scale(lhs, rhs)
    params = {
        "b": b,
        "mu": float(safe.mu),
        "strict": bool(np.min(margins / scale) > STRICT_TOLERANCE),
        "proper_on_rn": bool(proper_on_rn),
    }
    return _report("STOCH_ZCBF", margins, scale, g, params)


def check_fiip_condition(sys: ControlAffineSDE, phi: Compensator, Y: ScalarField,
                         c1: float, c2: float, grid) -> CertificateReport:
    """Forward-invariance-in-probability condition: generator(Y) <= c1 Y + c2."""
    c1, c2 = float(c1), float(c2)
    if c1 < 0.0 or c2 < 0.0:
        raise ParameterError(f"c1 and c2 must be >= 0, got ({c1}, {c2})")
    g = _grid_points(grid, sys.n)
    yv = Y(g)
    if np.any(yv < 0.0):
        raise DomainError(f"FIiP witness is negative at {g[yv < 0.0][0]}")
    u = phi(g)
    bound = c1 * yv + c2
    gen = generator(sys, Y, g, u)
    return _report("FIIP", bound - gen, _scale(bound, gen), g, {"c1": c1, "c2": c2})


def _ito_under(sigma_map: Callable[[Array], Array], f: ScalarField, x: Array) -> Array:
    s = np.asarray(sigma_map(x), dtype=float)
    H = f.hessian(x)
    return 0.5 * np.einsum("...id,...jd,...ij->...", s, s, H)


def _diffusion_quadratic_under(sigma_map, f: ScalarField, x: Array) -> Array:
    s = np.asarray(sigma_map(x), dtype=float)
    ls = np.einsum("...i,...id->...d", f.gradient(x), s)
    return 0.5 * np.einsum("...d,...d->...", ls, ls)


def check_diffusion_robustness_as(B: ScalarField, sigma, sigma_prime,
                                  grid) -> CertificateReport:
    """AS transfer to a new diffusion: L^I_sigma(B) >= L^I_sigma'(B) on chi."""
    g = _grid_points(grid, B.n)
    g = B.require_in_domain(g)
    nominal = _ito_under(sigma, B, g)
    changed = _ito_under(sigma_prime, B, g)
    return _report("ROBUST_ZCBF", nominal - changed, _scale(nominal, changed), g, {})


def check_diffusion_robustness_stoch(h: ScalarField, sigma, sigma_prime,
                                     a: float, grid) -> CertificateReport:
    """Boundary-layer transfer to a new diffusion.

    Both hypotheses are checked: L^I_sigma(h) <= L^I_sigma'(h) and
    a^2 H_sigma(h) >= H_sigma'(h); the pointwise margin is their minimum.
    """
    a = float(a)
    if not 0.0 < a <= 1.0:
        raise ParameterError(f"a must lie in (0, 1], got {a}")
    g = _grid_points(grid, h.n)
    ito_nom = _ito_under(sigma, h, g)
    ito_new = _ito_under(sigma_prime, h, g)
    quad_nom = a**2 * _diffusion_quadratic_under(sigma, h, g)
    quad_new = _diffusion_quadratic_under(sigma_prime, h, g)
    margins = np.minimum((ito_new - ito_nom) / _scale(ito_nom, ito_new),
                         (quad_nom - quad_new) / _scale(quad_nom, quad_new))
    return _report("ROBUST_STOCH", margins, np.ones_like(margins), g, {"a": a})


# ---------------------------------------------------------------------------
# closed-form probability bounds
# ---------------------------------------------------------------------------

def safety_probability_bound(b: float, level: float) -> float:
    """Lower bound 1 - e^{-b level} on the probability of remaining in chi.

    With level = h(x0) this is the boundary-layer start bound; with
    level = mu it covers every start above the layer.
    """
    b, level = float(b), float(level)
    if not b > 0.0:
        raise ParameterError(f"b must be > 0, got {b}")
    if not level > 0.0:
        raise ParameterError(f"level must be > 0, got {level}")
    return 1.0 - float(np.exp(-b * level))


def scaled_safety_bound(b: float, mu: float, a: float) -> float:
    """Safety bound 1 - e^{-b mu / a^2} when the diffusion shrinks by a.

    a must lie in (0, 1]; the deterministic limit a = 0 is reported as
    exactly 1.
    """
    b, mu, a = float(b), float(mu), float(a)
    if not b > 0.0:
        raise ParameterError(f"b must be > 0, got {b}")
    if not mu > 0.0:
        raise ParameterError(f"mu must be > 0, got {mu}")
    if a == 0.0:
        return 1.0
    if not 0.0 < a <= 1.0:
        raise ParameterError(f"a must lie in [0, 1], got {a}")
    return 1.0 - float(np.exp(-b * mu / a**2))


# ---------------------------------------------------------------------------
# grid builders
# ---------------------------------------------------------------------------

def interval_grid(lo: float, hi: float, n_linear: int, n_random: int = 0,
                  seed: int = 0) -> Array:
    """1-D grid: n_linear evenly spaced points plus n_random uniform draws."""
    lo, hi = float(lo), float(hi)
    if not hi > lo:
        raise ParameterError(f"need hi > lo, got [{lo}, {hi}]")
    if n_linear < 1 and n_random < 1:
        raise ParameterError("grid must contain at least one point")
    parts = []
    if n_linear >= 1:
        parts.append(np.linspace(lo, hi, n_linear))
    if n_random >= 1:
        rng = np.random.Generator(np.random.Philox(seed))
        parts.append(rng.uniform(lo, hi, n_random))
    return np.concatenate(parts)[:, None]


def level_filtered_grid(h: ScalarField, lo: float, hi: float, n_linear: int,
                        min_level: Optional[float] = None,
                        max_level: Optional[float] = None,
                        n_random: int = 0, seed: int = 0) -> Array:
    """Interval grid restricted to {min_level <= h <= max_level}."""
    g = interval_grid(lo, hi, n_linear, n_random, seed)
    v = h(g)
    keep = np.ones(v.shape, dtype=bool)
    if min_level is not None:
        keep &= v >= min_level
    if max_level is not None:
        keep &= v <= max_level
    g = g[keep]
    if g.shape[0] == 0:
        raise ParameterError("level filter removed every grid point")
    return g
