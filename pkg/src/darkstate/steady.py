"""Steady-state concurrence from the pole structure.

Only poles on the imaginary axis survive at long times, so the steady
amplitudes are the residue sum restricted to those poles. A single survivor
gives a constant concurrence. Two or more give a beating concurrence, which is
reported as its average over one beat period together with the envelope.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import ode, spectral
from .model import (
    DEFAULT_TOLERANCES,
    InitialState,
    ParameterError,
    SystemParams,
    Tolerances,
)

N_AVERAGE_SAMPLES = 4096
BASE_SETTLING = 50.0
SETTLING_BEATS = 10
MIN_BEAT_SPLITTING = 0.1


class DecoupledSystemWarning(UserWarning):
    """Both couplings vanish, so the qubits never reach a steady state."""


@dataclass(frozen=True)
class SteadyStateResult:
    ssc: float
    surviving_poles: tuple = ()
    oscillatory: bool = False
    ssc_min: float = 0.0
    ssc_max: float = 0.0
    source: str = "spectral"

    @property
    def n_surviving(self) -> int:
        return len(self.surviving_poles)

    @property
    def integrator_derived(self) -> bool:
        return self.source == "integrator"


def _clip(x: float) -> float:
    return min(max(float(x), 0.0), 1.0)


def _beat_period(im_parts, gamma: float) -> float:
    im_parts = sorted(im_parts)
    gaps = [b - a for a, b in zip(im_parts, im_parts[1:])]
    gap = max(min(gaps), MIN_BEAT_SPLITTING * gamma) if gaps else MIN_BEAT_SPLITTING * gamma
    return 2.0 * math.pi / gap


def settling_time(dec: spectral.PoleDecomposition) -> float:
    """``50/gamma`` plus ten beat periods of the two slowest poles."""
    slow = sorted(dec.poles, key=lambda s: abs(s.real))[:2]
    return BASE_SETTLING / dec.gamma + SETTLING_BEATS * _beat_period(
        [s.imag for s in slow], dec.gamma
    )


def steady_by_integration(
    params: SystemParams,
    init: InitialState,
    t_end: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SteadyStateResult:
    """Late-time concurrence from the ODE backend.

    Integrates to ``t_end`` (default: :func:`settling_time`) and averages the
    concurrence over the final beat period of the two slowest poles.
    """
    dec = spectral.decompose(params, init, tol)
    slow = sorted(dec.poles, key=lambda s: abs(s.real))[:2]
    window = _beat_period([s.imag for s in slow], params.gamma)
    if t_end is None:
        t_end = settling_time(dec)
    t_end = max(t_end, window)
    dt = window / 512
    traj = ode.solve(params, init, t_end, dt)
    tail = traj.concurrence[-513:-1]
    surv = tuple(dec.poles[k] for k in dec.surviving(tol))
    lo, hi = float(tail.min()), float(tail.max())
    return SteadyStateResult(
        ssc=_clip(tail.mean()),
        surviving_poles=surv,
        oscillatory=hi - lo > 1e-6,
        ssc_min=_clip(lo),
        ssc_max=_clip(hi),
        source="integrator",
    )


def steady_concurrence(
    params: SystemParams,
    init: InitialState,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SteadyStateResult:
    """Long-time concurrence from the surviving poles.

    Falls back to :func:`steady_by_integration` when the pole set is
    degenerate; the result then has ``source == "integrator"``.
    """
    dec = spectral.decompose(params, init, tol)
    if dec.degenerate:
        return steady_by_integration(params, init, tol=tol)

    idx = dec.surviving(tol)
    poles = tuple(dec.poles[k] for k in idx)
    if not idx:
        return SteadyStateResult(0.0)
    if len(idx) == 1:
        k = idx[0]
        c = _clip(2.0 * abs(dec.residues1[k]) * abs(dec.residues2[k]))
        return SteadyStateResult(c, poles, False, c, c)

    freqs = np.array([s.imag for s in poles])
    period = _beat_period(freqs, params.gamma)
    t = np.arange(N_AVERAGE_SAMPLES) * (period / N_AVERAGE_SAMPLES)
    phase = np.exp(1j * np.multiply.outer(t, freqs))
    c1 = phase @ np.array([dec.residues1[k] for k in idx])
    c2 = phase @ np.array([dec.residues2[k] for k in idx])
    conc = 2.0 * np.abs(c1) * np.abs(c2)
    return SteadyStateResult(
        _clip(conc.mean()), poles, True, _clip(conc.min()), _clip(conc.max())
    )


def dark_state_ssc(params: SystemParams, init: InitialState) -> float:
    """Closed-form steady concurrence for non-interacting qubits.

    With ``J = 0`` the combination ``g2|eg> - g1|ge>`` is decoupled from the
    reservoir, and the steady concurrence is
    ``2 |g1 g2| |g2 c1(0) - g1 c2(0)|^2 / (g1^2 + g2^2)^2``.
    """
    if params.j != 0:
        raise ParameterError("dark_state_ssc requires j == 0")
    g1, g2 = params.g1, params.g2
    gsq = g1 * g1 + g2 * g2
    if gsq == 0:
        warnings.warn(
            "g1 = g2 = 0: qubits are decoupled and never settle; returning 0",
            DecoupledSystemWarning,
            stacklevel=2,
        )
        return 0.0
    x = g2 * init.c1_0 - g1 * init.c2_0
    return 2.0 * abs(g1 * g2) * abs(x) ** 2 / gsq**2


class ScanMode(str, Enum):
    SYMMETRIC = "SYMMETRIC"
    ANTISYMMETRIC = "ANTISYMMETRIC"


@dataclass(frozen=True)
class ScanResult:
    """SSC along ``g2 = +-g1 + eps`` and the half-width at half maximum."""

    mode: ScanMode
    eps: np.ndarray
    ssc: np.ndarray
    hwhm: float
    results: tuple = field(default=(), repr=False)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.eps.tolist(), self.ssc.tolist()))


def half_width_half_max(x, y) -> float:
    """HWHM of the peak of ``y(x)`` with linear interpolation at the crossings.

    Returns NaN when the curve is identically zero or never drops below half
    its maximum on one side of the peak.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = int(np.argmax(y))
    peak = y[k]
    if not peak > 0:
        return math.nan
    half = 0.5 * peak

    def crossing(step):
        i = k
        while 0 <= i + step < len(y):
            n = i + step
            if y[n] < half:
                return x[i] + (half - y[i]) * (x[n] - x[i]) / (y[n] - y[i])
            i = n
        return None

    right, left = crossing(1), crossing(-1)
    if right is None or left is None:
        return math.nan
    return 0.5 * (right - left)


def instability_scan(
    params_base: SystemParams,
    init: InitialState,
    mode: ScanMode | str,
    eps_grid,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ScanResult:
    """Steady concurrence with ``g2 = g1 + eps`` (symmetric) or ``-g1 + eps``."""
    mode = ScanMode(mode.upper() if isinstance(mode, str) else mode)
    sign = 1.0 if mode is ScanMode.SYMMETRIC else -1.0
    eps = np.asarray(eps_grid, dtype=float)
    if not np.all(np.isfinite(eps)):
        raise ParameterError("eps grid must be finite")
    g1 = params_base.g1
    results = tuple(
        steady_concurrence(params_base.with_(g2=sign * g1 + e), init, tol) for e in eps
    )
    ssc = np.array([r.ssc for r in results])
    return ScanResult(mode, eps, ssc, half_width_half_max(eps, ssc), results)
