"""Pseudomode reformulation integrated in the time domain.

A single damped auxiliary amplitude ``b`` with

    db/dt = -i g1 c1 - i g2 c2 - (gamma/2 + i delta_c) b,   b(0) = 0

reproduces the Lorentzian memory kernel exactly, so the qubit amplitudes obey
a closed 3x3 linear system ``d/dt (c1, c2, b) = M (c1, c2, b)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import DarkstateError, InitialState, SystemParams, Trajectory, output_grid

RTOL = 1e-10
ATOL = 1e-12


class IntegratorStallError(DarkstateError):
    """The adaptive integrator could not advance (step size underflow)."""


@dataclass(frozen=True)
class Generator:
    params: SystemParams
    m: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.m)


def build_generator(params: SystemParams) -> Generator:
    g1, g2, j = params.g1, params.g2, params.j
    m = np.array(
        [
            [0.0, -0.5j * j, -1j * g1],
            [-0.5j * j, 0.0, -1j * g2],
            [-1j * g1, -1j * g2, -params.a],
        ],
        dtype=complex,
    )
    m.setflags(write=False)
    return Generator(params, m)


def integrate(
    gen: Generator,
    init: InitialState,
    t_end: float,
    dt_out: float,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> Trajectory:
    """Integrate from ``(c1(0), c2(0), 0)`` and sample on ``0, dt_out, ..., t_end``.

    Uses the Dormand-Prince 8(5,3) pair with dense output.
    """
    times = output_grid(t_end, dt_out)
    m = np.array(gen.m)
    y0 = np.array([init.c1_0, init.c2_0, 0j])

    sol = solve_ivp(
        lambda _t, y: m @ y,
        (0.0, float(times[-1])),
        y0,
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if sol.status != 0:
        raise IntegratorStallError(f"integration stopped at t={sol.t[-1]:.6g}: {sol.message}")
    y = sol.y
    return Trajectory(t=times, c1=y[0], c2=y[1], b=y[2], source="ode")


def solve(params: SystemParams, init: InitialState, t_end: float, dt_out: float) -> Trajectory:
    return integrate(build_generator(params), init, t_end, dt_out)
