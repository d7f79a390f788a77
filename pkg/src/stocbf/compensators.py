"""Closed-form safety compensators and the worked-example parameter sets.

The generic min-norm compensator phi_N implements

    I(x) = L_f h + L_g h . u_o(x)
    J(x) = -gamma h + h^2 L^I_sigma(1/h)
    phi_N(x) = -((I-J)/|L_g h|^2) (L_g h)^T   if I < J and L_g h != 0
               0                              otherwise

so the closed loop satisfies the zeroing-barrier generator inequality
with equality on the active branch.  The example compensators are the
saturated variants that keep |u_o + u| <= U_M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .calculus import (
    Array,
    ControlAffineSDE,
    ScalarField,
    _as_points,
    ito_correction,
    reciprocal_field,
)
from .errors import ConstructionError, DomainError, ParameterError, SingularityError
from .fields import interval_phase

__all__ = [
    "Compensator",
    "Example1Params",
    "Example2Params",
    "min_norm_compensator",
    "motivating_compensators",
    "example1_compensator",
    "example2_compensator",
    "derive_example1_params",
    "derive_example2_params",
    "zero_compensator",
]

UoSpec = Union[float, Callable[[Array], Array]]

# Denominator threshold below which L_g h is treated as zero in phi_N.
_SINGULAR_EPS = 1e-300


def _uo_1d(u_o: UoSpec):
    """Normalize a pre-input (constant or state callable) to s -> array."""
    if callable(u_o):
        return lambda s: np.asarray(u_o(s[..., None]), dtype=float)[..., 0]
    val = float(u_o)
    return lambda s: np.full(s.shape, val)


@dataclass(frozen=True)
class Compensator:
    """A state-feedback safety correction u = phi(x).

    ``phi`` maps points of shape (..., n) to inputs of shape (..., m).
    Calling the object enforces the validity region; ``raw`` evaluates
    the same closed form without the domain guard (used by the
    simulator to extend trajectories past a safe-set exit).
    """

    n: int
    m: int
    phi: Callable[[Array], Array]
    description: str
    validity: str = "R^n"
    domain: Optional[Callable[[Array], Array]] = None

    def __call__(self, x) -> Array:
        x = _as_points(x, self.n)
        if self.domain is not None:
            ok = np.asarray(self.domain(x), dtype=bool)
            if not np.all(ok):
                bad = x[~ok][0] if x.ndim > 1 else x
                raise DomainError(
                    f"{self.description} evaluated outside its validity region "
                    f"({self.validity}); offending point {bad}"
                )
        return self.raw(x)

    def raw(self, x) -> Array:
        x = _as_points(x, self.n)
        out = np.asarray(self.phi(x), dtype=float)
        if out.shape != x.shape[:-1] + (self.m,):
            raise ValueError(
                f"{self.description} returned shape {out.shape}, "
                f"expected {x.shape[:-1] + (self.m,)}"
            )
        return out


def zero_compensator(n: int, m: int) -> Compensator:
    return Compensator(
        n=n, m=m,
        phi=lambda x: np.zeros(x.shape[:-1] + (m,)),
        description="zero compensator",
    )


# ---------------------------------------------------------------------------
# generic min-norm compensator
# ---------------------------------------------------------------------------

def min_norm_compensator(sys: ControlAffineSDE, h: ScalarField, gamma: float) -> Compensator:
    """Min-norm compensator for a barrier field h on chi = {h > 0}."""
    gamma = float(gamma)
    if not gamma > 0.0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    B = reciprocal_field(h)

    def _phi(x):
        hv = h.value(x)
        grad = h.gradient(x)
        fx, gx, uo = sys.drift_terms(x)
        lgh = np.einsum("...i,...im->...m", grad, gx)
        I = np.einsum("...i,...i->...", grad, fx) + np.einsum("...m,...m->...", lgh, uo)
        J = -gamma * hv + hv**2 * ito_correction(sys, B, x)
        denom = np.einsum("...m,...m->...", lgh, lgh)
        active = I < J
        singular = active & (denom < _SINGULAR_EPS)
        if np.any(singular):
            raise SingularityError(
                "min-norm compensator requested where L_g h vanishes and the "
                "barrier inequality is violated (I < J); transversality fails "
                f"at {x[singular][0] if x.ndim > 1 else x}"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(active, -(I - J) / np.where(denom > 0.0, denom, 1.0), 0.0)
        return scale[..., None] * lgh

    def _domain(x):
        return h.in_domain(x) & (h.value(x) > 0.0)

    return Compensator(
        n=sys.n, m=sys.m, phi=_phi,
        description="min-norm compensator",
        validity=f"{{{h.name} > 0}}",
        domain=_domain,
    )


# ---------------------------------------------------------------------------
# motivating half-line compensators
# ---------------------------------------------------------------------------

def motivating_compensators(alpha: float, gamma: float, c: float, u_o: UoSpec):
    """Return (phi_hs, phi_Bs) for the scalar plant dx = (u_o + u) dt + c dw.

    phi_hs enforces the deterministic zeroing-barrier decay rate gamma on
    h_s = x - alpha and is total on R.  phi_Bs enforces the reciprocal
    certificate on B_s = 1/h_s; it diverges as x -> alpha+ and its
    validity region is x > alpha.
    """
    alpha, gamma, c = float(alpha), float(gamma), float(c)
    if not gamma > 0.0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    uo = _uo_1d(u_o)

    def _phi_hs(x):
        s = x[..., 0]
        u0 = uo(s)
        gap = u0 + gamma * (s - alpha)
        return np.where(gap < 0.0, -gap, 0.0)[..., None]

    def _phi_bs(x):
        s = x[..., 0]
        u0 = uo(s)
        hs = s - alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            big_phi = -gamma * hs + c**2 / hs
        return np.where(u0 < big_phi, -u0 + big_phi, 0.0)[..., None]

    phi_hs = Compensator(
        n=1, m=1, phi=_phi_hs,
        description="zeroing-barrier compensator (half line)",
    )
    phi_bs = Compensator(
        n=1, m=1, phi=_phi_bs,
        description="reciprocal-barrier compensator (half line)",
        validity="x > alpha",
        domain=lambda x: x[..., 0] > alpha,
    )
    return phi_hs, phi_bs


# ---------------------------------------------------------------------------
# Example 1: half line with input saturation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Example1Params:
    """Closed-form constants of the saturated half-line design."""

    alpha: float
    gamma: float
    c: float
    u_max: float
    n_cutoff: float
    mu1: float       # barrier level where the interior rate hits +u_max
    x_mu1: float     # alpha + mu1
    D: float         # barrier level where the interior rate hits -u_max
    x_D: float       # alpha + D
    b1: float        # exponential certificate rate 2 u_max / c^2

    def as_dict(self):
        return {
            "alpha": self.alpha, "gamma": self.gamma, "c": self.c,
            "u_max": self.u_max, "n_cutoff": self.n_cutoff,
            "mu1": self.mu1, "x_mu1": self.x_mu1, "D": self.D,
            "x_D": self.x_D, "b1": self.b1,
        }


def derive_example1_params(alpha, gamma, c, u_max, n_cutoff=1e10) -> Example1Params:
    """Derive mu1, D, x_mu1 and b1 from the half-line design constants.

    mu1 and D are the positive roots of gamma h^2 -/+ u_max h - c^2 = 0,
    i.e. the barrier levels at which J2(h) = -gamma h + c^2/h equals
    +u_max and -u_max.
    """
    alpha, gamma, c, u_max = float(alpha), float(gamma), float(c), float(u_max)
    n_cutoff = float(n_cutoff)
    if not gamma > 0.0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    if not u_max > 0.0:
        raise ParameterError(f"u_max must be > 0, got {u_max}")
    if c < 0.0:
        raise ParameterError(f"c must be >= 0, got {c}")
    disc = math.sqrt(u_max**2 + 4.0 * gamma * c**2)
    mu1 = (-u_max + disc) / (2.0 * gamma)
    D = (u_max + disc) / (2.0 * gamma)
    if not n_cutoff > D:
        raise ConstructionError(
            f"properness cutoff {n_cutoff} must exceed the saturation level D = {D}"
        )
    b1 = math.inf if c == 0.0 else 2.0 * u_max / c**2
    return Example1Params(
        alpha=alpha, gamma=gamma, c=c, u_max=u_max, n_cutoff=n_cutoff,
        mu1=mu1, x_mu1=alpha + mu1, D=D, x_D=alpha + D, b1=b1,
    )


def example1_compensator(p: Example1Params, u_o: UoSpec) -> Compensator:
    """Saturated half-line compensator phi_1 (total on R).

    Branches, first match wins:
      1. h_s <= 0, or u_o > u_max, or J2 > u_max      -> u_o + u = +u_max
      2. h_s > 0 and u_o <= -u_max and J2 <= -u_max   -> u_o + u = -u_max
      3. h_s > 0 and u_o < J2 in (-u_max, u_max)      -> u_o + u = J2
      4. otherwise                                    -> u = 0
    """
    uo = _uo_1d(u_o)
    alpha, gamma, c, U = p.alpha, p.gamma, p.c, p.u_max

    def _phi(x):
        s = x[..., 0]
        u0 = uo(s)
        hs = s - alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            j2 = -gamma * hs + c**2 / hs
        b1 = (hs <= 0.0) | (u0 > U) | (j2 > U)
        b2 = ~b1 & (u0 <= -U) & (j2 <= -U)
        b3 = ~b1 & ~b2 & (u0 < j2) & (-U < j2) & (j2 < U)
        out = np.where(b1, -u0 + U,
                       np.where(b2, -u0 - U,
                                np.where(b3, -u0 + j2, 0.0)))
        return out[..., None]

    return Compensator(
        n=1, m=1, phi=_phi,
        description="saturated half-line compensator",
    )


# ---------------------------------------------------------------------------
# Example 2: bounded interval with input saturation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Example2Params:
    """Closed-form constants of the bounded-interval design."""

    alpha: float
    beta: float
    c: float
    u_max: float
    theta_mu2: float   # phase at which the interior rate saturates
    mu2: float         # sin(theta_mu2)
    x_mu2_left: float
    x_mu2_right: float
    b2: float          # 4 beta u_max / (pi c^2)
    gamma2: float      # pi^2 c^2 / (8 beta^2)

    def as_dict(self):
        return {
            "alpha": self.alpha, "beta": self.beta, "c": self.c,
            "u_max": self.u_max, "theta_mu2": self.theta_mu2,
            "mu2": self.mu2, "x_mu2_left": self.x_mu2_left,
            "x_mu2_right": self.x_mu2_right, "b2": self.b2,
            "gamma2": self.gamma2,
        }


def derive_example2_params(alpha, beta, c, u_max) -> Example2Params:
    """Derive the interval-design constants; fails if tan(theta_mu2) >= sqrt(2).

    The exponential rate is b2 = min(b21, b22): b21 = 4 beta u_max /
    (pi c^2) binds outside the interval, while b22 is the minimum over
    the boundary layer of (b21 - tan(theta)) sec(theta).  That minimum
    sits slightly inside the layer (at tan(theta) = 2/(b21 +
    sqrt(b21^2 - 8))), so b2 falls below b21 by about 1/(2 b21) --
    invisible at reporting precision but required for the layer
    inequality to hold pointwise.
    """
    alpha, beta, c, u_max = float(alpha), float(beta), float(c), float(u_max)
    if not beta > 0.0:
        raise ParameterError(f"beta must be > 0, got {beta}")
    if not c > 0.0:
        raise ParameterError(f"c must be > 0, got {c}")
    if not u_max > 0.0:
        raise ParameterError(f"u_max must be > 0, got {u_max}")
    tan_theta = math.pi * c**2 / (2.0 * beta * u_max)
    if tan_theta >= math.sqrt(2.0):
        raise ConstructionError(
            f"saturation phase constraint violated: tan(theta_mu2) = {tan_theta} "
            ">= sqrt(2); increase u_max or beta, or decrease c"
        )
    theta = math.atan(tan_theta)
    mu2 = math.sin(theta)
    x_left = alpha - beta + 2.0 * beta * theta / math.pi
    x_right = alpha + beta - 2.0 * beta * theta / math.pi
    b21 = 4.0 * beta * u_max / (math.pi * c**2)

    def layer_rate(t):
        return (b21 - t) * math.sqrt(1.0 + t * t)

    candidates = [0.0, tan_theta]
    if b21 * b21 >= 8.0:
        t_star = 2.0 / (b21 + math.sqrt(b21 * b21 - 8.0))
        if 0.0 < t_star < tan_theta:
            candidates.append(t_star)
    b2 = min(b21, min(layer_rate(t) for t in candidates))
    gamma2 = math.pi**2 * c**2 / (8.0 * beta**2)
    return Example2Params(
        alpha=alpha, beta=beta, c=c, u_max=u_max,
        theta_mu2=theta, mu2=mu2, x_mu2_left=x_left, x_mu2_right=x_right,
        b2=b2, gamma2=gamma2,
    )


def example2_compensator(p: Example2Params, u_o: UoSpec):
    """Return (phi_N2, phi_2) for the bounded-interval plant.

    phi_N2 is the unsaturated min-norm form on chi_2 (diverges toward
    the boundary); phi_2 saturates it at +/-u_max and is total on R.
    The interior rate is Phi_2(x) = -(pi c^2 / 2 beta) tan(psi(x)).
    """
    uo = _uo_1d(u_o)
    alpha, beta, c, U = p.alpha, p.beta, p.c, p.u_max
    psi, k = interval_phase(alpha, beta)
    lo, hi = alpha - beta, alpha + beta

    def _interior(s, u0):
        pv = psi(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            big_phi = -(np.pi * c**2 / (2.0 * beta)) * np.tan(pv)
        lgh = -k * np.sin(pv)
        active = lgh * (u0 - big_phi) < 0.0   # I < J
        return big_phi, np.where(active, -u0 + big_phi, 0.0)

    def _phi_n2(x):
        s = x[..., 0]
        u0 = uo(s)
        _, val = _interior(s, u0)
        return val[..., None]

    phi_n2 = Compensator(
        n=1, m=1, phi=_phi_n2,
        description="interval min-norm compensator",
        validity="alpha - beta < x < alpha + beta",
        domain=lambda x: (x[..., 0] > lo) & (x[..., 0] < hi),
    )

    def _phi_2(x):
        s = x[..., 0]
        u0 = uo(s)
        big_phi, interior = _interior(s, u0)
        outside_left = s <= lo
        outside_right = s >= hi
        inside = ~(outside_left | outside_right)
        sat_up = outside_left | (inside & (big_phi >= U))
        sat_dn = outside_right | (inside & (big_phi <= -U))
        out = np.where(sat_up, -u0 + U,
                       np.where(sat_dn, -u0 - U, interior))
        return out[..., None]

    phi_2 = Compensator(
        n=1, m=1, phi=_phi_2,
        description="saturated interval compensator",
    )
    return phi_n2, phi_2
