"""Built-in 1-D barrier fields for the two worked example plants.

Example 1 (half-line safe set chi_1 = (alpha, inf)):
    h_s = x - alpha                      B_s = 1/h_s
    p_N  = (x-N)^4 for x >= N, else 0    (C^3 properness patch)
    B_1  = B_s + p_N                     h_1 = 1/B_1, total on R

Example 2 (bounded safe set chi_2 = (alpha-beta, alpha+beta)):
    h_2 piecewise: linear ramps outside chi_2, sin(theta(x)) inside,
    written as cos(psi) with psi = (pi/2beta)(x-alpha) so that the
    gradient vanishes exactly at x = alpha.
"""

from __future__ import annotations

import numpy as np

from .calculus import ScalarField, reciprocal_field
from .errors import ParameterError


def polynomial_field_1d(coeffs, name="poly") -> ScalarField:
    """Scalar field from 1-D polynomial coefficients (numpy order)."""
    c0 = np.asarray(coeffs, dtype=float)
    c1 = np.polyder(c0)
    c2 = np.polyder(c1)
    return ScalarField(
        n=1,
        value=lambda x: np.polyval(c0, x[..., 0]),
        gradient=lambda x: np.polyval(c1, x[..., 0])[..., None],
        hessian=lambda x: np.polyval(c2, x[..., 0])[..., None, None],
        name=name,
    )


def halfline_margin_field(alpha: float) -> ScalarField:
    """h_s(x) = x - alpha."""
    return polynomial_field_1d([1.0, -float(alpha)], name="h_s")


def halfline_reciprocal_field(alpha: float) -> ScalarField:
    """B_s = 1/(x - alpha) on x > alpha."""
    return reciprocal_field(halfline_margin_field(alpha), name="B_s")


def properness_patch_field(n_cutoff: float) -> ScalarField:
    """p_N(x) = (x-N)^4 for x >= N and 0 below; C^3 at x = N."""
    N = float(n_cutoff)

    def _value(x):
        q = x[..., 0] - N
        q2 = q * q
        return np.where(q > 0.0, q2 * q2, 0.0)

    def _gradient(x):
        q = x[..., 0] - N
        return np.where(q > 0.0, 4.0 * q * q * q, 0.0)[..., None]

    def _hessian(x):
        q = x[..., 0] - N
        return np.where(q > 0.0, 12.0 * q * q, 0.0)[..., None, None]

    return ScalarField(n=1, value=_value, gradient=_gradient, hessian=_hessian, name="p_N")


def barrier_fields_example1(params):
    """Return (h_1, B_1) for the half-line example.

    B_1 = 1/(x-alpha) + p_N(x), proper in chi_1 and valid on x > alpha;
    h_1 = (x-alpha)/(1 + (x-alpha) p_N(x)), defined on all of R.  Below
    the cutoff N both reduce to h_s and B_s.
    """
    alpha = float(params.alpha)
    N = float(params.n_cutoff)
    if not N > alpha:
        raise ParameterError(f"properness cutoff {N} must exceed alpha {alpha}")

    p_N = properness_patch_field(N)
    B_s = halfline_reciprocal_field(alpha)

    def _b1_value(x):
        return B_s.value(x) + p_N.value(x)

    def _b1_gradient(x):
        return B_s.gradient(x) + p_N.gradient(x)

    def _b1_hessian(x):
        return B_s.hessian(x) + p_N.hessian(x)

    def _b1_domain(x):
        return x[..., 0] > alpha

    B1 = ScalarField(
        n=1,
        value=_b1_value,
        gradient=_b1_gradient,
        hessian=_b1_hessian,
        domain=_b1_domain,
        domain_note="x > alpha (proper in chi_1)",
        name="B_1",
    )

    def _h1_value(x):
        q = x[..., 0] - alpha
        t = x[..., 0] - N
        t2 = t * t
        s = np.where(t > 0.0, t2 * t2, 0.0)
        return q / (1.0 + q * s)

    def _h1_gradient(x):
        q = x[..., 0] - alpha
        t = x[..., 0] - N
        above = t > 0.0
        t2 = t * t
        s = np.where(above, t2 * t2, 0.0)
        s1 = np.where(above, 4.0 * t2 * t, 0.0)
        r = 1.0 + q * s
        return ((1.0 - q * q * s1) / (r * r))[..., None]

    def _h1_hessian(x):
        q = x[..., 0] - alpha
        t = x[..., 0] - N
        above = t > 0.0
        t2 = t * t
        s = np.where(above, t2 * t2, 0.0)
        s1 = np.where(above, 4.0 * t2 * t, 0.0)
        s2 = np.where(above, 12.0 * t2, 0.0)
        r = 1.0 + q * s
        r1 = s + q * s1
        q2 = q * q
        num = (-2.0 * q * s1 - q2 * s2) * r - 2.0 * r1 * (1.0 - q2 * s1)
        return (num / (r * r * r))[..., None, None]

    h1 = ScalarField(
        n=1,
        value=_h1_value,
        gradient=_h1_gradient,
        hessian=_h1_hessian,
        domain_note="R (proper in chi_1; tends to 0 above the cutoff)",
        name="h_1",
    )
    return h1, B1


def interval_phase(alpha: float, beta: float):
    """Return psi(x) = (pi/2beta)(x - alpha) and the slope pi/2beta."""
    k = np.pi / (2.0 * float(beta))

    def _psi(s):
        return k * (s - float(alpha))

    return _psi, k


def barrier_fields_example2(params):
    """Return (h_2, B_2) for the bounded-interval example.

    h_2 is C^2 on R, proper on R, equal to cos(psi) inside chi_2 and to
    linear ramps of slope -/+ pi/2beta outside; B_2 = 1/h_2 on chi_2.
    """
    alpha, beta = float(params.alpha), float(params.beta)
    if not beta > 0.0:
        raise ParameterError(f"beta must be > 0, got {beta}")
    psi, k = interval_phase(alpha, beta)
    lo, hi = alpha - beta, alpha + beta

    def _branches(x):
        s = x[..., 0]
        left = s <= lo
        right = s >= hi
        inside = ~(left | right)
        return s, left, inside, right

    def _value(x):
        s, left, inside, right = _branches(x)
        p = psi(s)
        return np.where(left, p + np.pi / 2.0,
                        np.where(right, np.pi / 2.0 - p, np.cos(p)))

    def _gradient(x):
        s, left, inside, right = _branches(x)
        p = psi(s)
        g = np.where(left, k, np.where(right, -k, -k * np.sin(p)))
        return g[..., None]

    def _hessian(x):
        s, left, inside, right = _branches(x)
        p = psi(s)
        h = np.where(inside, -k**2 * np.cos(p), 0.0)
        return h[..., None, None]

    h2 = ScalarField(
        n=1,
        value=_value,
        gradient=_gradient,
        hessian=_hessian,
        domain_note="R (proper on R)",
        name="h_2",
    )
    B2 = reciprocal_field(h2, name="B_2")
    return h2, B2
