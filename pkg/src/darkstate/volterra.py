"""Direct time stepping of the memory-kernel integro-differential equations.

    dc1/dt = -i J/2 c2 - z1(t),   z1(t) = int_0^t I(t - t') [g1^2 c1 + g1 g2 c2](t') dt'
    dc2/dt = -i J/2 c1 - z2(t),   z2(t) = int_0^t I(t - t') [g1 g2 c1 + g2^2 c2](t') dt'

Because ``I(tau) = exp(-a tau)`` is a single exponential, the trapezoid
history sums obey ``z(t + h) = I(h) z(t) + h/2 [I(h) u(t) + u(t + h)]`` and
each step costs O(1). This backend is a second-order validator for the
spectral and pseudomode solutions, not a production path.
"""
from __future__ import annotations

import cmath

import numpy as np

from .model import DarkstateError, InitialState, SystemParams, Trajectory


class StepSizeError(DarkstateError, ValueError):
    """Step too coarse for the rates in the problem."""


def max_step(params: SystemParams) -> float:
    """Largest allowed step: ``0.01 / max(1, |J|, g1^2, g2^2)`` in units of 1/gamma."""
    p = params.scaled()
    return 0.01 / max(1.0, abs(p.j), p.g1**2, p.g2**2) / params.gamma


class ConvolutionAccumulator:
    """Running trapezoid sums of the two kernel-weighted history integrals.

    ``push(u1, u2)`` appends the integrand value at the next grid point and
    returns the updated ``(z1, z2)``.
    """

    def __init__(self, params: SystemParams, h: float, u1_0: complex = 0j, u2_0: complex = 0j):
        if not h > 0:
            raise StepSizeError(f"step must be positive, got {h!r}")
        self.h = h
        self.decay = cmath.exp(-params.a * h)
        self.z1 = 0j
        self.z2 = 0j
        self._u1 = complex(u1_0)
        self._u2 = complex(u2_0)

    def peek(self, u1: complex, u2: complex) -> tuple[complex, complex]:
        """Sums that ``push(u1, u2)`` would produce, without committing."""
        e, hh = self.decay, 0.5 * self.h
        return (
            e * (self.z1 + hh * self._u1) + hh * u1,
            e * (self.z2 + hh * self._u2) + hh * u2,
        )

    def push(self, u1: complex, u2: complex) -> tuple[complex, complex]:
        self.z1, self.z2 = self.peek(u1, u2)
        self._u1, self._u2 = u1, u2
        return self.z1, self.z2


def direct_convolution(params: SystemParams, h: float, u: np.ndarray) -> np.ndarray:
    """O(N^2) composite-trapezoid history sums for an integrand sampled on ``k*h``.

    ``u`` has shape (N+1, ...); returns ``z`` of the same shape with
    ``z[n] = h * sum_k w_k I((n-k) h) u[k]`` and end weights 1/2.
    """
    u = np.asarray(u, dtype=complex)
    n_pts = u.shape[0]
    kern = np.exp(-params.a * h * np.arange(n_pts))
    z = np.zeros_like(u)
    for n in range(1, n_pts):
        w = kern[n::-1].copy()
        w[0] *= 0.5
        w[-1] *= 0.5
        z[n] = h * np.tensordot(w, u[: n + 1], axes=(0, 0))
    return z


def solve_volterra(
    params: SystemParams,
    init: InitialState,
    t_end: float,
    h: float,
    dt_out: float | None = None,
) -> Trajectory:
    """Predictor-corrector solution on the grid ``0, h, 2h, ...``.

    Each step takes a forward-Euler predictor, updates the history sums with
    the predicted integrand, then applies one trapezoidal corrector. The
    result is returned every ``dt_out`` (a multiple of ``h``; default every
    step). The pseudomode amplitude is reconstructed from the history sums.
    """
    if not h > 0:
        raise StepSizeError(f"step must be positive, got {h!r}")
    limit = max_step(params)
    if h > limit * (1 + 1e-12):
        raise StepSizeError(f"step h={h!r} exceeds the stability limit {limit:.3g} for these rates")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end!r}")
    n_steps = int(round(t_end / h))
    stride = 1
    if dt_out is not None:
        stride = int(round(dt_out / h))
        if stride < 1 or abs(stride * h - dt_out) > 1e-9 * dt_out:
            raise ValueError("dt_out must be a positive integer multiple of h")
        n_steps = stride * int(round(t_end / dt_out))

    g1, g2 = params.g1, params.g2
    g11, g12, g22 = g1 * g1, g1 * g2, g2 * g2
    ihalf_j = 0.5j * params.j
    hh = 0.5 * h

    c1, c2 = init.c1_0, init.c2_0
    acc = ConvolutionAccumulator(params, h, g11 * c1 + g12 * c2, g12 * c1 + g22 * c2)

    n_out = n_steps // stride + 1
    out = np.empty((3, n_out), dtype=complex)
    out[0, 0], out[1, 0], out[2, 0] = c1, c2, 0j
    gnorm = g11 + g22

    z1 = z2 = 0j
    for n in range(1, n_steps + 1):
        f1 = -ihalf_j * c2 - z1
        f2 = -ihalf_j * c1 - z2
        p1 = c1 + h * f1
        p2 = c2 + h * f2
        q1, q2 = acc.peek(g11 * p1 + g12 * p2, g12 * p1 + g22 * p2)
        c1 = c1 + hh * (f1 - ihalf_j * p2 - q1)
        c2 = c2 + hh * (f2 - ihalf_j * p1 - q2)
        z1, z2 = acc.push(g11 * c1 + g12 * c2, g12 * c1 + g22 * c2)
        if n % stride == 0:
            k = n // stride
            out[0, k] = c1
            out[1, k] = c2
            # z_i = g_i * int I (g1 c1 + g2 c2), and b = -i * int I (g1 c1 + g2 c2)
            out[2, k] = -1j * (g1 * z1 + g2 * z2) / gnorm if gnorm > 0 else 0j

    times = h * stride * np.arange(n_out)
    return Trajectory(t=times, c1=out[0], c2=out[1], b=out[2], source="volterra")
