"""CSV, JSON and PPM writers.

Numbers are written with ``repr``-level precision (17 significant digits,
shortest form) so files round-trip exactly and diff cleanly.
"""
from __future__ import annotations

import io
import json
import math
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ("t", "re_c1", "im_c1", "re_c2", "im_c2", "re_b", "im_b", "concurrence")
SWEEP_COLUMNS = ("g1", "g2", "ssc", "n_surviving", "oscillatory", "degenerate_fallback")
SCAN_COLUMNS = ("eps", "g2", "ssc", "n_surviving", "oscillatory")

# viridis anchor colours at 0, 1/4, 1/2, 3/4, 1
_RAMP = np.array(
    [
        [68, 1, 84],
        [59, 82, 139],
        [33, 145, 140],
        [94, 201, 98],
        [253, 231, 37],
    ],
    dtype=float,
)


class OutputError(OSError):
    pass


def fmt(x: float) -> str:
    x = float(x) + 0.0  # drops the sign of -0.0
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def fmt_time(t: float) -> str:
    return f"{float(t) + 0.0:.12f}"


def _write_text(path, text: str):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_bytes(path, data: bytes):
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def trajectory_csv(traj) -> str:
    buf = io.StringIO()
    buf.write(",".join(TRAJECTORY_COLUMNS) + "\n")
    for k in range(len(traj.t)):
        c1, c2, b = traj.c1[k], traj.c2[k], traj.b[k]
        row = [fmt_time(traj.t[k])] + [
            fmt(v) for v in (c1.real, c1.imag, c2.real, c2.imag, b.real, b.imag)
        ]
        row.append(fmt(traj.concurrence[k]))
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def sweep_csv(sweep) -> str:
    buf = io.StringIO()
    buf.write(",".join(SWEEP_COLUMNS) + "\n")
    for g1, g2, ssc, ns, osc, fb in sweep.cells():
        buf.write(f"{fmt(g1)},{fmt(g2)},{fmt(ssc)},{ns},{int(osc)},{int(fb)}\n")
    return buf.getvalue()


def scan_csv(scan, g1: float) -> str:
    sign = 1.0 if scan.mode.value == "SYMMETRIC" else -1.0
    buf = io.StringIO()
    buf.write(",".join(SCAN_COLUMNS) + "\n")
    for e, s, r in zip(scan.eps, scan.ssc, scan.results):
        buf.write(f"{fmt(e)},{fmt(sign * g1 + e)},{fmt(s)},{r.n_surviving},{int(r.oscillatory)}\n")
    return buf.getvalue()


def emit_csv(result, path, **kwargs):
    """Write a trajectory, sweep or scan result as CSV."""
    from .model import Trajectory
    from .steady import ScanResult
    from .sweep import SweepResult

    if isinstance(result, Trajectory):
        text = trajectory_csv(result)
    elif isinstance(result, SweepResult):
        text = sweep_csv(result)
    elif isinstance(result, ScanResult):
        text = scan_csv(result, **kwargs)
    else:
        raise TypeError(f"no CSV layout for {type(result).__name__}")
    _write_text(path, text)


def ramp(x) -> np.ndarray:
    """Map values in [0, 1] to RGB bytes along a viridis-like ramp."""
    x = np.clip(np.nan_to_num(np.asarray(x, dtype=float)), 0.0, 1.0)
    pos = x * (len(_RAMP) - 1)
    lo = np.minimum(pos.astype(int), len(_RAMP) - 2)
    frac = (pos - lo)[..., None]
    rgb = _RAMP[lo] * (1.0 - frac) + _RAMP[lo + 1] * frac
    return np.rint(rgb).astype(np.uint8)


def heatmap_bytes(sweep) -> bytes:
    """Binary PPM with g1 along x (ascending right) and g2 along y (ascending up)."""
    if sweep.ssc.size == 0:
        raise ValueError("empty sweep")
    n1, n2 = sweep.shape
    # image rows run top to bottom, i.e. g2 descending
    img = ramp(sweep.ssc.T[::-1])
    header = f"P6\n{n1} {n2}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(img).tobytes()


def emit_heatmap(sweep, path):
    _write_bytes(path, heatmap_bytes(sweep))


def read_ppm(path) -> np.ndarray:
    """Read back a binary PPM written by :func:`emit_heatmap` as (rows, cols, 3)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)


def complex_pair(z: complex) -> list[float]:
    return [float(z.real) + 0.0, float(z.imag) + 0.0]
