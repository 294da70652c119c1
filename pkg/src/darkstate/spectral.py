"""Closed-form Laplace solution: rational amplitudes, poles and residues.

Eliminating the reservoir gives the Laplace-domain system

    [s(s+a) + g1^2] F1 + [iJ(s+a)/2 + g1 g2] F2 = (s+a) c1(0)
    [iJ(s+a)/2 + g1 g2] F1 + [s(s+a) + g2^2] F2 = (s+a) c2(0)

with ``a = gamma/2 + i*delta_c``. Its determinant ``P`` is a quartic that
always vanishes at ``s = -a``; dividing that factor out leaves the monic cubic
``Q`` whose roots are the only poles of ``F1`` and ``F2``. Polynomials are
stored as coefficient tuples, highest power first (``numpy.polyval`` order).
"""
from __future__ import annotations

import cmath
import logging
from dataclasses import dataclass

import numpy as np

from .model import (
    DEFAULT_TOLERANCES,
    DarkstateError,
    InitialState,
    SystemParams,
    Tolerances,
    Trajectory,
)

log = logging.getLogger(__name__)

DEGENERACY_DISTANCE = 1e-6
MAX_RESIDUE = 1e6
_MAX_NEWTON = 30


class DegeneratePolesError(DarkstateError):
    """Closed-form evaluation requested for a (nearly) defective pole set."""


def horner(coeffs, s):
    acc = 0j
    for c in coeffs:
        acc = acc * s + c
    return acc


def polyder(coeffs):
    n = len(coeffs) - 1
    return tuple(c * (n - k) for k, c in enumerate(coeffs[:-1]))


def deflate(coeffs, root):
    """Synthetic division by ``(s - root)``; returns (quotient, remainder)."""
    out = []
    acc = 0j
    for c in coeffs:
        acc = acc * root + c
        out.append(acc)
    return tuple(out[:-1]), out[-1]


def _polymul(p, q):
    out = [0j] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        for k, y in enumerate(q):
            out[i + k] += x * y
    return tuple(out)


def _polysub(p, q):
    n = max(len(p), len(q))
    p = (0j,) * (n - len(p)) + tuple(p)
    q = (0j,) * (n - len(q)) + tuple(q)
    return tuple(x - y for x, y in zip(p, q))


def _pad(p, n):
    return (0j,) * (n - len(p)) + tuple(complex(c) for c in p)


@dataclass(frozen=True)
class RationalSolution:
    """``F1 = num1/cubic_den`` and ``F2 = num2/cubic_den``.

    ``quartic`` keeps the unreduced determinant ``P = (s+a) Q`` and
    ``num_b`` the (linear) numerator of the pseudomode amplitude, both for
    diagnostics and trajectory output.
    """

    params: SystemParams
    init: InitialState
    quartic: tuple
    cubic_den: tuple
    num1: tuple
    num2: tuple
    num_b: tuple
    deflation_remainder: complex

    @property
    def a(self) -> complex:
        return self.params.a


def assemble(params: SystemParams, init: InitialState) -> RationalSolution:
    """Build the rational Laplace-domain solution by Cramer's rule."""
    g1, g2, j, a = params.g1, params.g2, params.j, params.a
    c1, c2 = init.c1_0, init.c2_0

    a11 = (1.0 + 0j, a, complex(g1 * g1))
    a22 = (1.0 + 0j, a, complex(g2 * g2))
    a12 = (0.5j * j, 0.5j * j * a + g1 * g2)

    quartic = _polysub(_polymul(a11, a22), _polymul(a12, a12))
    cubic, rem = deflate(quartic, -a)

    a12p = _pad(a12, 3)
    num1 = tuple(c1 * x - c2 * y for x, y in zip(a22, a12p))
    num2 = tuple(c2 * x - c1 * y for x, y in zip(a11, a12p))
    # b = -i (g1 F1 + g2 F2)/(s + a); the numerator always carries the (s + a) factor
    nb_full = tuple(-1j * (g1 * x + g2 * y) for x, y in zip(num1, num2))
    num_b, _ = deflate(nb_full, -a)

    return RationalSolution(
        params=params,
        init=init,
        quartic=quartic,
        cubic_den=cubic,
        num1=num1,
        num2=num2,
        num_b=num_b,
        deflation_remainder=rem,
    )


def cubic_roots(b: complex, c: complex, d: complex) -> list[complex]:
    """Unpolished roots of ``x^3 + b x^2 + c x + d`` from Cardano's formula."""
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = cmath.sqrt(0.25 * q * q + (p / 3.0) ** 3)
    w = -0.5 * q + disc
    w_alt = -0.5 * q - disc
    if abs(w_alt) > abs(w):
        w = w_alt
    if w == 0:
        return [-shift] * 3
    u = w ** (1.0 / 3.0)
    omega = complex(-0.5, 3**0.5 / 2.0)
    roots = []
    for k in range(3):
        uk = u * omega**k
        roots.append(uk - p / (3.0 * uk) - shift)
    return roots


def newton_polish(coeffs, root: complex, eps: float) -> complex:
    """Refine ``root`` until the Newton step is below ``eps * max(1, |root|)``."""
    dcoeffs = polyder(coeffs)
    last = float("inf")
    for _ in range(_MAX_NEWTON):
        dq = horner(dcoeffs, root)
        if dq == 0:
            break
        step = horner(coeffs, root) / dq
        size = abs(step)
        if size >= last:
            # round-off floor reached
            break
        root -= step
        if size < eps * max(1.0, abs(root)):
            break
        last = size
    return root


@dataclass(frozen=True)
class PoleDecomposition:
    """Poles of the reduced cubic and the residues of each amplitude.

    ``c_i(t) = sum_j residues_i[j] * exp(poles[j] * t)``. When the poles
    nearly collide, ``degenerate`` is set; if the residues have blown up as
    well, they are replaced by NaN and ``diagnostic`` reads ``near-defective``.
    """

    poles: tuple
    residues1: tuple
    residues2: tuple
    residues_b: tuple
    degenerate: bool
    gamma: float
    diagnostic: str | None = None
    init: tuple = (complex("nan"), complex("nan"))

    def surviving(self, tol: Tolerances = DEFAULT_TOLERANCES) -> list[int]:
        """Indices of poles with ``|Re s| <= pole_survival_eps * gamma``."""
        limit = tol.pole_survival_eps * self.gamma
        return [k for k, s in enumerate(self.poles) if abs(s.real) <= limit]


def find_poles(sol: RationalSolution, tol: Tolerances = DEFAULT_TOLERANCES) -> PoleDecomposition:
    """Roots of the cubic denominator, Newton-polished, plus residues."""
    gamma = sol.params.gamma
    one, q2, q1, q0 = sol.cubic_den
    if one != 1:
        raise ValueError("cubic denominator must be monic")
    # root-find in units of gamma
    scaled = (1.0 + 0j, q2 / gamma, q1 / gamma**2, q0 / gamma**3)
    raw = cubic_roots(*scaled[1:])
    polished = [newton_polish(scaled, r, tol.root_polish_eps) for r in raw]
    poles = sorted((r * gamma for r in polished), key=lambda s: (-s.real, s.imag))

    dmin = min(abs(poles[i] - poles[k]) for i in range(3) for k in range(i + 1, 3))
    degenerate = dmin < DEGENERACY_DISTANCE * gamma

    dq = polyder(sol.cubic_den)
    dvals = [horner(dq, s) for s in poles]
    res = [
        tuple(horner(num, s) / d if d != 0 else complex("nan") for s, d in zip(poles, dvals))
        for num in (sol.num1, sol.num2, sol.num_b)
    ]

    diagnostic = None
    if degenerate:
        worst = max(abs(r) if cmath.isfinite(r) else float("inf") for row in res for r in row)
        if worst > MAX_RESIDUE:
            diagnostic = "near-defective"
            log.warning(
                "near-defective pole set (min separation %.3g, residue %.3g); residues withheld",
                dmin,
                worst,
            )
            nan = complex("nan")
            res = [(nan,) * 3] * 3

    return PoleDecomposition(
        poles=tuple(poles),
        residues1=res[0],
        residues2=res[1],
        residues_b=res[2],
        degenerate=degenerate,
        gamma=gamma,
        diagnostic=diagnostic,
        init=(sol.init.c1_0, sol.init.c2_0),
    )


def decompose(
    params: SystemParams, init: InitialState, tol: Tolerances = DEFAULT_TOLERANCES
) -> PoleDecomposition:
    return find_poles(assemble(params, init), tol)


def _check_usable(dec: PoleDecomposition):
    if dec.degenerate:
        raise DegeneratePolesError(
            "pole set is (nearly) degenerate; use the ODE backend instead"
        )


def _modes(dec: PoleDecomposition, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("amplitudes are only defined for t >= 0")
    return np.exp(np.multiply.outer(t, np.asarray(dec.poles)))


def amplitudes_at(dec: PoleDecomposition, t):
    """Qubit amplitudes ``(c1(t), c2(t))`` as residue sums.

    ``t`` may be a scalar or an array. Degenerate decompositions are refused.
    """
    _check_usable(dec)
    e = _modes(dec, t)
    c1 = e @ np.asarray(dec.residues1)
    c2 = e @ np.asarray(dec.residues2)
    if np.ndim(t) == 0:
        return complex(c1), complex(c2)
    return c1, c2


def trajectory(dec: PoleDecomposition, times) -> Trajectory:
    """Evaluate all three amplitudes on ``times``.

    Samples at ``t == 0`` are set to the initial state exactly rather than to
    the (round-off perturbed) residue sums.
    """
    _check_usable(dec)
    times = np.asarray(times, dtype=float)
    e = _modes(dec, times)
    c1 = e @ np.asarray(dec.residues1)
    c2 = e @ np.asarray(dec.residues2)
    b = e @ np.asarray(dec.residues_b)
    at_zero = times == 0
    c1[at_zero], c2[at_zero], b[at_zero] = dec.init[0], dec.init[1], 0j
    return Trajectory(t=times, c1=c1, c2=c2, b=b, source="spectral")
