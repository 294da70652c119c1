"""Parameter space, initial states, memory kernel and concurrence.

All rates are angular frequencies. Every solver in the package measures its
numerical thresholds in units of the reservoir width ``gamma``, so the
natural choice is ``gamma = 1`` and every other rate given as a multiple of it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class DarkstateError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(DarkstateError, ValueError):
    """Invalid physical parameters or initial state."""


@dataclass(frozen=True)
class SystemParams:
    """The five rates that define one instance of the model.

    Parameters
    ----------
    g1, g2 : float
        Qubit-reservoir couplings. Either sign is allowed.
    j : float
        Qubit-qubit exchange strength.
    gamma : float
        Full width of the Lorentzian density of states, must be > 0.
    delta_c : float
        Detuning of the Lorentzian peak from the qubit transition.
    """

    g1: float
    g2: float
    j: float = 0.0
    gamma: float = 1.0
    delta_c: float = 0.0

    def __post_init__(self):
        for name in ("g1", "g2", "j", "gamma", "delta_c"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ParameterError(f"{name} must be a real number, got {value!r}") from None
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.gamma <= 0.0:
            raise ParameterError(f"gamma must be strictly positive, got {self.gamma!r}")

    @property
    def a(self) -> complex:
        """Kernel decay constant ``gamma/2 + i*delta_c``."""
        return complex(0.5 * self.gamma, self.delta_c)

    def scaled(self) -> "SystemParams":
        """Same physics with every rate divided by ``gamma`` (so ``gamma == 1``)."""
        s = 1.0 / self.gamma
        return SystemParams(self.g1 * s, self.g2 * s, self.j * s, 1.0, self.delta_c * s)

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


class StateName(str, Enum):
    E1G2 = "E1G2"
    G1E2 = "G1E2"
    PLUS = "PLUS"
    MINUS = "MINUS"
    PLUS_I = "PLUS_I"
    MINUS_I = "MINUS_I"


_SQRT_HALF = 1.0 / math.sqrt(2.0)

_LIBRARY = {
    StateName.E1G2: (1.0 + 0j, 0j),
    StateName.G1E2: (0j, 1.0 + 0j),
    StateName.PLUS: (complex(_SQRT_HALF), complex(_SQRT_HALF)),
    StateName.MINUS: (complex(_SQRT_HALF), complex(-_SQRT_HALF)),
    StateName.PLUS_I: (complex(_SQRT_HALF), complex(0.0, _SQRT_HALF)),
    StateName.MINUS_I: (complex(_SQRT_HALF), complex(0.0, -_SQRT_HALF)),
}

NORM_TOL = 1e-12


@dataclass(frozen=True)
class InitialState:
    """Excited-state amplitudes of qubit 1 and qubit 2 at ``t = 0``.

    The reservoir starts in vacuum, so the two amplitudes must carry the full
    norm. No silent renormalisation is done.
    """

    c1_0: complex
    c2_0: complex

    def __post_init__(self):
        c1, c2 = complex(self.c1_0), complex(self.c2_0)
        if not (cmath.isfinite(c1) and cmath.isfinite(c2)):
            raise ParameterError("initial amplitudes must be finite")
        norm = abs(c1) ** 2 + abs(c2) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ParameterError(
                f"initial state not normalised: |c1|^2 + |c2|^2 = {norm!r}"
            )
        object.__setattr__(self, "c1_0", c1)
        object.__setattr__(self, "c2_0", c2)

    def swapped(self) -> "InitialState":
        return InitialState(self.c2_0, self.c1_0)

    def as_array(self) -> np.ndarray:
        return np.array([self.c1_0, self.c2_0], dtype=complex)


def initial_state_library(name: str | StateName) -> InitialState:
    """Named initial states: E1G2, G1E2, PLUS, MINUS, PLUS_I, MINUS_I.

    Names are case-insensitive. Raises ``ParameterError`` for anything else.
    """
    try:
        key = StateName(name.upper() if isinstance(name, str) else name)
    except ValueError:
        choices = ", ".join(s.value for s in StateName)
        raise ParameterError(f"unknown initial state {name!r}; choose one of {choices}") from None
    return InitialState(*_LIBRARY[key])


@dataclass(frozen=True)
class AmplitudeState:
    """Instantaneous amplitudes: the two qubits and the pseudomode ``b``."""

    c1: complex
    c2: complex
    b: complex = 0j

    @property
    def norm(self) -> float:
        return abs(self.c1) ** 2 + abs(self.c2) ** 2 + abs(self.b) ** 2


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds, all in units of ``gamma``.

    pole_survival_eps
        Largest ``|Re s|/gamma`` for which a pole counts as non-decaying.
    backend_agreement_eps
        Allowed pointwise difference between trajectory backends.
    root_polish_eps
        Newton polishing stops once the step ``|Q/Q'|`` falls below this.
    """

    pole_survival_eps: float = 1e-9
    backend_agreement_eps: float = 1e-6
    root_polish_eps: float = 1e-13

    def __post_init__(self):
        for name in ("pole_survival_eps", "backend_agreement_eps", "root_polish_eps"):
            value = float(getattr(self, name))
            if not value > 0.0 or not math.isfinite(value):
                raise ParameterError(f"{name} must be a positive finite number, got {value!r}")
            object.__setattr__(self, name, value)


DEFAULT_TOLERANCES = Tolerances()


def kernel_eval(tau: float, params: SystemParams) -> complex:
    """Reservoir correlation function ``exp(-(gamma/2 + i*delta_c) * tau)``."""
    if tau < 0:
        raise ParameterError(f"kernel is only defined for tau >= 0, got {tau!r}")
    return cmath.exp(-params.a * tau)


def concurrence(c1, c2):
    """Concurrence ``2|c1 c2*|`` of a pure single-excitation state.

    Works elementwise on numpy arrays as well as on scalars.
    """
    if isinstance(c1, np.ndarray) or isinstance(c2, np.ndarray):
        return 2.0 * np.abs(c1) * np.abs(c2)
    return 2.0 * abs(c1) * abs(c2)


@dataclass(frozen=True)
class Trajectory:
    """Time series of the three amplitudes with the concurrence attached.

    ``source`` names the backend that produced it (``spectral``, ``ode`` or
    ``volterra``). The Volterra backend reconstructs ``b`` from its history
    integral.
    """

    t: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    b: np.ndarray
    source: str = "unknown"
    concurrence: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "concurrence", 2.0 * np.abs(self.c1) * np.abs(self.c2))

    def __len__(self):
        return len(self.t)

    def state(self, k: int) -> AmplitudeState:
        return AmplitudeState(complex(self.c1[k]), complex(self.c2[k]), complex(self.b[k]))

    @property
    def norm(self) -> np.ndarray:
        return np.abs(self.c1) ** 2 + np.abs(self.c2) ** 2 + np.abs(self.b) ** 2


def output_grid(t_end: float, dt_out: float) -> np.ndarray:
    """Sample times ``0, dt_out, ..., t_end`` (``t_end`` snapped to the grid)."""
    if not t_end > 0:
        raise ParameterError(f"t_end must be positive, got {t_end!r}")
    if not dt_out > 0:
        raise ParameterError(f"dt_out must be positive, got {dt_out!r}")
    n = int(round(t_end / dt_out))
    if n < 1:
        raise ParameterError("dt_out larger than t_end")
    return dt_out * np.arange(n + 1)
