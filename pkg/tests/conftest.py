"""Shared fixtures: the two worked-example stacks and finite-difference oracles."""

import numpy as np
import pytest

import stocbf as sb

# Central-difference step per the derivative-checking contract.
FD_REL_STEP = 1e-5


def fd_gradient(field, x):
    """Central finite differences of the field value."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.shape[-1]):
        step = FD_REL_STEP * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        out[i] = (field(xp) - field(xm)) / (2.0 * step)
    return out


def fd_hessian(field, x):
    """Central finite differences of the analytic gradient."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    out = np.empty((n, n))
    for j in range(n):
        step = FD_REL_STEP * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        out[:, j] = (field.grad(xp) - field.grad(xm)) / (2.0 * step)
    return out


def fd_directional(field, x, direction):
    """Directional derivative of the field value along a vector."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    scale = max(1.0, float(np.max(np.abs(x))))
    step = FD_REL_STEP * scale / max(1.0, float(np.linalg.norm(d)))
    return (field(x + step * d) - field(x - step * d)) / (2.0 * step)


class Example1Stack:
    def __init__(self, u_o=-1.0, n_cutoff=1e10):
        self.u_o = u_o
        self.params = sb.derive_example1_params(1.0, 1.0, 0.1, 1.0, n_cutoff)
        self.sys = sb.scalar_plant(u_o=u_o, c=0.1)
        self.h_s = sb.halfline_margin_field(1.0)
        self.B_s = sb.halfline_reciprocal_field(1.0)
        self.h1, self.B1 = sb.barrier_fields_example1(self.params)
        self.safe = sb.SafeSet(h=self.h1, mu=self.params.mu1)
        self.phi1 = sb.example1_compensator(self.params, u_o)
        self.phi_N = sb.min_norm_compensator(self.sys, self.h1, 1.0)
        self.phi_hs, self.phi_Bs = sb.motivating_compensators(1.0, 1.0, 0.1, u_o)


class Example2Stack:
    def __init__(self, u_o=1.0):
        self.u_o = u_o
        self.params = sb.derive_example2_params(0.0, 1.0, 0.01, 1.0)
        self.sys = sb.scalar_plant(u_o=u_o, c=0.01)
        self.h2, self.B2 = sb.barrier_fields_example2(self.params)
        self.safe = sb.SafeSet(h=self.h2, mu=self.params.mu2)
        self.phi_N2, self.phi2 = sb.example2_compensator(self.params, u_o)


@pytest.fixture(scope="session")
def ex1():
    return Example1Stack()


@pytest.fixture(scope="session")
def ex1_patched():
    """Example 1 with a small properness cutoff so grids can cross it."""
    return Example1Stack(n_cutoff=7.0)


@pytest.fixture(scope="session")
def ex2():
    return Example2Stack()


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(20260811))
