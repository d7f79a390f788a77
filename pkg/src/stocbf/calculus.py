"""Differential operators for scalar fields along control-affine SDEs.

The plant is  dx = { f(x) + g(x) (u_o(x) + u) } dt + sigma(x) dw  with
state dimension n, input dimension m and noise dimension d.  Scalar
fields carry analytic value/gradient/Hessian callables; every callable
is vectorized over leading axes, so a batch of points with shape
(..., n) produces values of shape (...,), gradients of shape (..., n)
and Hessians of shape (..., n, n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError, ParameterError

Array = np.ndarray


def _as_points(x, n: int) -> Array:
    """Coerce x to a float array of points with trailing axis n."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        if n != 1:
            raise DimensionError(f"scalar point given but state dimension is {n}")
        return x.reshape(1)
    if x.shape[-1] != n:
        raise DimensionError(f"point has trailing axis {x.shape[-1]}, expected {n}")
    return x


@dataclass(frozen=True)
class ScalarField:
    """A C^2 scalar field with analytic derivatives.

    value    : (..., n) -> (...,)
    gradient : (..., n) -> (..., n)     (row-vector semantics)
    hessian  : (..., n) -> (..., n, n)
    domain   : optional membership predicate; None means all of R^n.
    """

    n: int
    value: Callable[[Array], Array]
    gradient: Callable[[Array], Array]
    hessian: Callable[[Array], Array]
    domain: Optional[Callable[[Array], Array]] = None
    domain_note: str = "R^n"
    name: str = "field"

    def __call__(self, x) -> Array:
        return self.value(_as_points(x, self.n))

    def grad(self, x) -> Array:
        return self.gradient(_as_points(x, self.n))

    def hess(self, x) -> Array:
        return self.hessian(_as_points(x, self.n))

    def in_domain(self, x) -> Array:
        x = _as_points(x, self.n)
        if self.domain is None:
            return np.ones(x.shape[:-1], dtype=bool)
        return np.asarray(self.domain(x), dtype=bool)

    def require_in_domain(self, x) -> Array:
        x = _as_points(x, self.n)
        ok = self.in_domain(x)
        if not np.all(ok):
            bad = x[~ok][0] if x.ndim > 1 else x
            raise DomainError(
                f"{self.name} evaluated outside its validity region "
                f"({self.domain_note}); offending point {bad}"
            )
        return x


@dataclass(frozen=True)
class ControlAffineSDE:
    """The tuple (f, g, sigma, u_o) with dimensions (n, m, d).

    f     : (..., n) -> (..., n)
    g     : (..., n) -> (..., n, m)
    sigma : (..., n) -> (..., n, d)
    u_o   : (..., n) -> (..., m)      (pre-input state feedback)
    """

    n: int
    m: int
    d: int
    f: Callable[[Array], Array]
    g: Callable[[Array], Array]
    sigma: Callable[[Array], Array]
    u_o: Callable[[Array], Array]
    name: str = "plant"

    def __post_init__(self):
        for dim, label in ((self.n, "n"), (self.m, "m"), (self.d, "d")):
            if int(dim) < 1:
                raise ParameterError(f"dimension {label} must be >= 1, got {dim}")

    def drift_terms(self, x):
        """Return f(x), g(x), u_o(x) with shapes checked."""
        x = _as_points(x, self.n)
        base = x.shape[:-1]
        fx = np.asarray(self.f(x), dtype=float)
        gx = np.asarray(self.g(x), dtype=float)
        uo = np.asarray(self.u_o(x), dtype=float)
        if fx.shape != base + (self.n,):
            raise DimensionError(f"f returned shape {fx.shape}, expected {base + (self.n,)}")
        if gx.shape != base + (self.n, self.m):
            raise DimensionError(f"g returned shape {gx.shape}, expected {base + (self.n, self.m)}")
        if uo.shape != base + (self.m,):
            raise DimensionError(f"u_o returned shape {uo.shape}, expected {base + (self.m,)}")
        return fx, gx, uo

    def noise_matrix(self, x):
        x = _as_points(x, self.n)
        base = x.shape[:-1]
        sx = np.asarray(self.sigma(x), dtype=float)
        if sx.shape != base + (self.n, self.d):
            raise DimensionError(
                f"sigma returned shape {sx.shape}, expected {base + (self.n, self.d)}"
            )
        return sx


# ---------------------------------------------------------------------------
# map builders (constant / zero plumbing shared by plants, fields and tests)
# ---------------------------------------------------------------------------

def constant_vector_map(v, n: int):
    v = np.broadcast_to(np.asarray(v, dtype=float), (n,))

    def _map(x):
        return np.broadcast_to(v, x.shape[:-1] + (n,))

    return _map


def constant_matrix_map(M, rows: int, cols: int):
    M = np.broadcast_to(np.asarray(M, dtype=float), (rows, cols))

    def _map(x):
        return np.broadcast_to(M, x.shape[:-1] + (rows, cols))

    return _map


def scalar_plant(u_o=0.0, c=0.0, name="scalar plant"):
    """The 1-D integrator  dx = (u_o + u) dt + c dw."""
    return ControlAffineSDE(
        n=1, m=1, d=1,
        f=constant_vector_map(0.0, 1),
        g=constant_matrix_map(1.0, 1, 1),
        sigma=constant_matrix_map(float(c), 1, 1),
        u_o=constant_vector_map(float(u_o), 1),
        name=name,
    )


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def _input_vector(u, x, m: int) -> Array:
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        if m != 1:
            raise DimensionError(f"scalar input given but input dimension is {m}")
        u = u.reshape(1)
    if u.shape[-1] != m:
        raise DimensionError(f"input has trailing axis {u.shape[-1]}, expected {m}")
    return u


def drift_lie_derivative(sys: ControlAffineSDE, y: ScalarField, x, u) -> Array:
    """grad y . f  +  grad y . g . (u + u_o);  affine in u."""
    x = y.require_in_domain(_as_points(x, sys.n))
    u = _input_vector(u, x, sys.m)
    fx, gx, uo = sys.drift_terms(x)
    grad = y.gradient(x)
    total = u + uo
    return np.einsum("...i,...i->...", grad, fx) + np.einsum(
        "...i,...im,...m->...", grad, gx, total
    )


def ito_correction(sys: ControlAffineSDE, y: ScalarField, x) -> Array:
    """(1/2) tr[ sigma sigma^T Hess y ]."""
    x = y.require_in_domain(_as_points(x, sys.n))
    sx = sys.noise_matrix(x)
    H = y.hessian(x)
    return 0.5 * np.einsum("...id,...jd,...ij->...", sx, sx, H)


def generator(sys: ControlAffineSDE, y: ScalarField, x, u) -> Array:
    """Ito generator of the closed loop applied to y: drift term + correction."""
    return drift_lie_derivative(sys, y, x, u) + ito_correction(sys, y, x)


def diffusion_quadratic(sys: ControlAffineSDE, h: ScalarField, x) -> Array:
    """(1/2) (grad h . sigma)(grad h . sigma)^T >= 0."""
    x = h.require_in_domain(_as_points(x, sys.n))
    sx = sys.noise_matrix(x)
    grad = h.gradient(x)
    ls = np.einsum("...i,...id->...d", grad, sx)
    return 0.5 * np.einsum("...d,...d->...", ls, ls)


# ---------------------------------------------------------------------------
# derived fields
# ---------------------------------------------------------------------------

def reciprocal_field(h: ScalarField, name: Optional[str] = None) -> ScalarField:
    """B = 1/h on {h > 0}, with analytic derivatives.

    grad B = -h^-2 grad h
    Hess B = 2 h^-3 grad h^T grad h - h^-2 Hess h
    """

    def _value(x):
        v = h.value(x)
        return 1.0 / v

    def _gradient(x):
        v = h.value(x)[..., None]
        return -h.gradient(x) / v**2

    def _hessian(x):
        v = h.value(x)[..., None, None]
        g = h.gradient(x)
        outer = np.einsum("...i,...j->...ij", g, g)
        return 2.0 * outer / v**3 - h.hessian(x) / v**2

    def _domain(x):
        base = h.in_domain(x)
        with np.errstate(invalid="ignore"):
            pos = h.value(x) > 0.0
        return base & pos

    return ScalarField(
        n=h.n,
        value=_value,
        gradient=_gradient,
        hessian=_hessian,
        domain=_domain,
        domain_note=f"{{{h.name} > 0}}",
        name=name or f"1/{h.name}",
    )


def exponential_fields(h: ScalarField, b: float):
    """Return (e^{b h}, e^{-b h}) with analytic derivatives; requires b > 0."""
    b = float(b)
    if not b > 0.0:
        raise ParameterError(f"exponential rate b must be > 0, got {b}")

    def _make(sign, label):
        s = sign * b

        def _value(x):
            return np.exp(s * h.value(x))

        def _gradient(x):
            v = np.exp(s * h.value(x))[..., None]
            return s * v * h.gradient(x)

        def _hessian(x):
            v = np.exp(s * h.value(x))[..., None, None]
            g = h.gradient(x)
            outer = np.einsum("...i,...j->...ij", g, g)
            return s * v * (s * outer + h.hessian(x))

        return ScalarField(
            n=h.n,
            value=_value,
            gradient=_gradient,
            hessian=_hessian,
            domain=h.domain,
            domain_note=h.domain_note,
            name=label,
        )

    return _make(+1.0, f"exp(+b*{h.name})"), _make(-1.0, f"exp(-b*{h.name})")
