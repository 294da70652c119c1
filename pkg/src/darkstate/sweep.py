"""Steady-state concurrence over rectangular (g1, g2) grids.

Cells are independent, so the grid is cut into blocks of g1 rows and mapped
over a process pool. Every block writes into its own slice of preallocated
arrays, so the result does not depend on the worker count or on scheduling.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .model import DEFAULT_TOLERANCES, InitialState, ParameterError, SystemParams, Tolerances
from .steady import steady_concurrence

WORKERS_ENV = "DARKSTATE_WORKERS"


def axis(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` equally spaced values; exactly antisymmetric when ``lo == -hi``."""
    vals = np.linspace(lo, hi, n)
    if lo == -hi:
        vals = 0.5 * (vals - vals[::-1])
    return vals


def _check_range(name, rng):
    try:
        lo, hi, n = rng
        lo, hi = float(lo), float(hi)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be (min, max, n_points), got {rng!r}") from None
    if int(n) != n or n < 2:
        raise ParameterError(f"{name}: n_points must be an integer >= 2, got {n!r}")
    if not lo < hi:
        raise ParameterError(f"{name}: min must be below max, got {lo!r} >= {hi!r}")
    return lo, hi, int(n)


@dataclass(frozen=True)
class SweepSpec:
    g1_range: tuple
    g2_range: tuple
    init: InitialState
    j: float = 0.0
    gamma: float = 1.0
    delta_c: float = 0.0
    tol: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        object.__setattr__(self, "g1_range", _check_range("g1_range", self.g1_range))
        object.__setattr__(self, "g2_range", _check_range("g2_range", self.g2_range))
        # validates j, gamma, delta_c
        SystemParams(0.0, 0.0, self.j, self.gamma, self.delta_c)

    @property
    def g1_values(self) -> np.ndarray:
        return axis(*self.g1_range)

    @property
    def g2_values(self) -> np.ndarray:
        return axis(*self.g2_range)

    @property
    def shape(self) -> tuple[int, int]:
        return self.g1_range[2], self.g2_range[2]

    def params(self, g1: float, g2: float) -> SystemParams:
        return SystemParams(g1, g2, self.j, self.gamma, self.delta_c)


@dataclass(frozen=True)
class SweepResult:
    """Per-cell outputs as arrays of shape ``(n_g1, n_g2)``.

    Row-major order means g1 is the slow index and g2 the fast one.
    """

    spec: SweepSpec
    g1: np.ndarray
    g2: np.ndarray
    ssc: np.ndarray
    n_surviving: np.ndarray
    oscillatory: np.ndarray
    degenerate_fallback: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.ssc.shape

    def __len__(self):
        return self.ssc.size

    def cells(self):
        """Yield ``(g1, g2, ssc, n_surviving, oscillatory, degenerate_fallback)`` row-major."""
        n1, n2 = self.shape
        for i in range(n1):
            for k in range(n2):
                yield (
                    float(self.g1[i]),
                    float(self.g2[k]),
                    float(self.ssc[i, k]),
                    int(self.n_surviving[i, k]),
                    bool(self.oscillatory[i, k]),
                    bool(self.degenerate_fallback[i, k]),
                )


def _run_block(spec: SweepSpec, rows: range):
    g1s, g2s = spec.g1_values, spec.g2_values
    n2 = len(g2s)
    ssc = np.zeros((len(rows), n2))
    nsurv = np.zeros((len(rows), n2), dtype=np.int64)
    osc = np.zeros((len(rows), n2), dtype=bool)
    fallback = np.zeros((len(rows), n2), dtype=bool)
    for r, i in enumerate(rows):
        for k in range(n2):
            res = steady_concurrence(spec.params(g1s[i], g2s[k]), spec.init, spec.tol)
            ssc[r, k] = res.ssc
            nsurv[r, k] = res.n_surviving
            osc[r, k] = res.oscillatory
            fallback[r, k] = res.integrator_derived
    return ssc, nsurv, osc, fallback


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value is None:
        return 1
    try:
        n = int(value)
    except ValueError:
        raise ParameterError(f"{WORKERS_ENV} must be a positive integer, got {value!r}") from None
    if n < 1:
        raise ParameterError(f"{WORKERS_ENV} must be a positive integer, got {value!r}")
    return n


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate the steady concurrence on every grid cell."""
    if workers is None:
        workers = default_workers()
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers!r}")
    n1, n2 = spec.shape
    ssc = np.zeros((n1, n2))
    nsurv = np.zeros((n1, n2), dtype=np.int64)
    osc = np.zeros((n1, n2), dtype=bool)
    fallback = np.zeros((n1, n2), dtype=bool)

    n_blocks = min(n1, 4 * workers)
    edges = np.linspace(0, n1, n_blocks + 1).astype(int)
    blocks = [range(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]

    if workers == 1:
        parts = [_run_block(spec, rows) for rows in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, [spec] * len(blocks), blocks))

    for rows, (s, ns, o, f) in zip(blocks, parts):
        sl = slice(rows.start, rows.stop)
        ssc[sl], nsurv[sl], osc[sl], fallback[sl] = s, ns, o, f

    return SweepResult(spec, spec.g1_values, spec.g2_values, ssc, nsurv, osc, fallback)


def run_detuning_comparison(
    spec: SweepSpec, detunings, workers: int | None = None
) -> list[SweepResult]:
    """One sweep per detuning on the same grid."""
    return [run_sweep(replace(spec, delta_c=float(d)), workers) for d in detunings]
