"""Command-line front end.

    darkstate poles      --g1 G1 --g2 G2 [--j J] [--delta-c D] --init NAME
    darkstate trajectory --g1 G1 --g2 G2 ... [--t-end T] [--dt-out DT] [--backend B]
    darkstate ssc        --g1 G1 --g2 G2 ...
    darkstate sweep      --grid LO:HI:N | --g1-range .. --g2-range .. [--detunings D,..]
    darkstate scan       --g1 G1 --mode symmetric|antisymmetric --eps-grid LO:HI:N

Rates and times are given in units of gamma; ``--gamma`` sets the absolute
width and every rate is multiplied by it (times divided by it). A JSON config
file (``--config``) may supply any field; flags given on the command line
take precedence. Exit status: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import ode, output, spectral, steady, sweep, volterra
from .model import (
    DarkstateError,
    InitialState,
    ParameterError,
    SystemParams,
    Tolerances,
    initial_state_library,
    output_grid,
)

COMMANDS = ("poles", "trajectory", "ssc", "sweep", "scan")
BACKENDS = ("spectral", "ode", "volterra")
_NEEDS_PAIR = ("poles", "trajectory", "ssc")


class UsageError(Exception):
    """Bad or conflicting command-line / config input (exit status 2)."""


@dataclass
class RunConfig:
    command: str
    g1: float | None = None
    g2: float | None = None
    j: float = 0.0
    gamma: float = 1.0
    delta_c: float = 0.0
    init: str | tuple | None = None
    t_end: float = 20.0
    dt_out: float = 0.01
    backend: str = "spectral"
    h: float | None = None
    g1_range: tuple | None = None
    g2_range: tuple | None = None
    detunings: tuple | None = None
    mode: str | None = None
    eps_grid: tuple | None = None
    pole_survival_eps: float = 1e-9
    output: str | None = None
    workers: int | None = None

    def system_params(self) -> SystemParams:
        s = self.gamma
        return SystemParams(self.g1 * s, self.g2 * s, self.j * s, s, self.delta_c * s)

    def initial_state(self) -> InitialState:
        if isinstance(self.init, str):
            return initial_state_library(self.init)
        return InitialState(*self.init)

    def tolerances(self) -> Tolerances:
        return Tolerances(pole_survival_eps=self.pole_survival_eps)


_FIELDS = {f.name for f in fields(RunConfig)}


# ---------------------------------------------------------------- parsing helpers


def _number(name, value, kind=float):
    if isinstance(value, bool):
        raise UsageError(f"{name}: expected a number, got {value!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name}: malformed number {value!r}") from None
    if kind is float and not math.isfinite(out):
        raise UsageError(f"{name}: must be finite, got {value!r}")
    return out


def _complex(name, value):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_number(name, value[0]), _number(name, value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    try:
        return complex(str(value).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"{name}: malformed complex number {value!r}") from None


def _range(name, value):
    if isinstance(value, str):
        parts = value.split(":")
    else:
        parts = list(value) if isinstance(value, (list, tuple)) else [value]
    if len(parts) != 3:
        raise UsageError(f"{name}: expected LO:HI:N, got {value!r}")
    lo, hi = _number(name, parts[0]), _number(name, parts[1])
    n = parts[2]
    if isinstance(n, float) and n.is_integer():
        n = int(n)
    n = _number(name, n, int)
    if n < 2 or not lo < hi:
        raise UsageError(f"{name}: need LO < HI and N >= 2, got {value!r}")
    return (lo, hi, n)


def _list(name, value):
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)) or not value:
        raise UsageError(f"{name}: expected a non-empty list of numbers")
    return tuple(_number(name, v) for v in value)


def _init(value):
    if isinstance(value, str):
        return value.upper()
    if isinstance(value, dict):
        extra = set(value) - {"c1", "c2"}
        if extra or set(value) != {"c1", "c2"}:
            raise UsageError("init: explicit state needs exactly the keys c1 and c2")
        return (_complex("init.c1", value["c1"]), _complex("init.c2", value["c2"]))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return (_complex("init.c1", value[0]), _complex("init.c2", value[1]))
    raise UsageError(f"init: expected a state name or {{'c1': .., 'c2': ..}}, got {value!r}")


_COERCE = {
    "g1": _number,
    "g2": _number,
    "j": _number,
    "gamma": _number,
    "delta_c": _number,
    "t_end": _number,
    "dt_out": _number,
    "h": _number,
    "pole_survival_eps": _number,
    "g1_range": _range,
    "g2_range": _range,
    "eps_grid": _range,
    "detunings": _list,
    "workers": lambda n, v: _number(n, v, int),
}


def _normalise(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        if key not in _FIELDS:
            raise UsageError(f"unknown configuration key {key!r}")
        if value is None:
            out[key] = None
        elif key == "init":
            out[key] = _init(value)
        elif key in _COERCE:
            out[key] = _COERCE[key](key, value)
        else:
            out[key] = value
    return out


def _load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p):
    s = argparse.SUPPRESS
    p.add_argument("--config", default=s, help="JSON config file; flags override its values")
    p.add_argument("--g1", default=s, help="qubit 1 coupling / gamma")
    p.add_argument("--g2", default=s, help="qubit 2 coupling / gamma")
    p.add_argument("--j", default=s, help="qubit-qubit exchange / gamma")
    p.add_argument("--gamma", default=s, help="absolute Lorentzian width (rescales everything)")
    p.add_argument("--delta-c", dest="delta_c", default=s, help="detuning / gamma")
    p.add_argument("--init", default=s, help="E1G2, G1E2, PLUS, MINUS, PLUS_I or MINUS_I")
    p.add_argument("--c1", default=s, help="explicit initial amplitude of |e>|g>, e.g. 0.6")
    p.add_argument("--c2", default=s, help="explicit initial amplitude of |g>|e>, e.g. 0.8j")
    p.add_argument("--survival-eps", dest="pole_survival_eps", default=s,
                   help="largest |Re s|/gamma counted as a surviving pole")
    p.add_argument("--out", dest="output", default=s, help="output path (stem for sweep/scan)")
    p.add_argument("--workers", default=s, help="worker processes (default $DARKSTATE_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="darkstate", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    s = argparse.SUPPRESS

    p = sub.add_parser("poles", help="poles and residues of the Laplace solution")
    _add_common(p)

    p = sub.add_parser("trajectory", help="amplitudes and concurrence versus time (CSV)")
    _add_common(p)
    p.add_argument("--t-end", dest="t_end", default=s, help="final time in units of 1/gamma")
    p.add_argument("--dt-out", dest="dt_out", default=s, help="sampling interval in units of 1/gamma")
    p.add_argument("--backend", default=s, choices=BACKENDS)
    p.add_argument("--h", default=s, help="Volterra step in units of 1/gamma")

    p = sub.add_parser("ssc", help="steady-state concurrence (JSON)")
    _add_common(p)

    p = sub.add_parser("sweep", help="steady concurrence over a (g1, g2) grid (CSV + PPM)")
    _add_common(p)
    p.add_argument("--grid", default=s, help="LO:HI:N applied to both g1 and g2")
    p.add_argument("--g1-range", dest="g1_range", default=s, help="LO:HI:N")
    p.add_argument("--g2-range", dest="g2_range", default=s, help="LO:HI:N")
    p.add_argument("--detunings", default=s, help="comma-separated detunings / gamma")

    p = sub.add_parser("scan", help="steady concurrence along g2 = +-g1 + eps (CSV)")
    _add_common(p)
    p.add_argument("--mode", default=s, type=str.upper, choices=("SYMMETRIC", "ANTISYMMETRIC"))
    p.add_argument("--eps-grid", dest="eps_grid", default=s, help="LO:HI:N")
    return parser


def _join_negative_values(argv):
    # argparse treats "-2:2:201" or "-0.5+1j" as option strings; glue them to their flag
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (
            tok.startswith("--")
            and "=" not in tok
            and nxt is not None
            and len(nxt) > 1
            and nxt[0] == "-"
            and (nxt[1].isdigit() or nxt[1] == ".")
        ):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def parse_config(argv, config_file=None) -> RunConfig:
    """Merge defaults, an optional JSON config and command-line flags."""
    ns = vars(build_parser().parse_args(_join_negative_values(list(argv))))
    command = ns.pop("command", None)
    config_file = ns.pop("config", config_file)

    merged = {}
    if config_file is not None:
        merged.update(_normalise(_load_config(config_file)))

    if "grid" in ns:
        if "g1_range" in ns or "g2_range" in ns:
            raise UsageError("--grid conflicts with --g1-range/--g2-range")
        grid = ns.pop("grid")
        ns["g1_range"] = ns["g2_range"] = grid
    if "init" in ns and ("c1" in ns or "c2" in ns):
        raise UsageError("--init conflicts with --c1/--c2")
    if "c1" in ns or "c2" in ns:
        if not ("c1" in ns and "c2" in ns):
            raise UsageError("--c1 and --c2 must be given together")
        ns["init"] = {"c1": ns.pop("c1"), "c2": ns.pop("c2")}
    merged.update(_normalise(ns))

    if command is not None:
        if merged.get("command") not in (None, command):
            raise UsageError(f"command {command!r} conflicts with config command {merged['command']!r}")
        merged["command"] = command
    if merged.get("command") not in COMMANDS:
        raise UsageError(f"a command is required: one of {', '.join(COMMANDS)}")

    cfg = RunConfig(**merged)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    cmd = cfg.command
    if cfg.init is None:
        raise UsageError("an initial state is required (--init NAME or --c1/--c2)")
    try:
        cfg.initial_state()
        if cmd in _NEEDS_PAIR or cmd == "scan":
            if cfg.g1 is None:
                raise UsageError(f"{cmd} requires --g1")
        if cmd in _NEEDS_PAIR:
            if cfg.g2 is None:
                raise UsageError(f"{cmd} requires --g2")
            cfg.system_params()
        else:
            SystemParams(0.0, 0.0, cfg.j, cfg.gamma, cfg.delta_c)
        cfg.tolerances()
    except DarkstateError as exc:
        raise UsageError(str(exc)) from None

    if cmd == "sweep":
        if cfg.g1 is not None or cfg.g2 is not None:
            raise UsageError("sweep takes grid ranges, not --g1/--g2")
        if cfg.g1_range is None or cfg.g2_range is None:
            raise UsageError("sweep requires --grid or both --g1-range and --g2-range")
    elif cfg.detunings is not None:
        raise UsageError("--detunings only applies to sweep")
    if cmd == "scan":
        if cfg.g2 is not None:
            raise UsageError("scan derives g2 from --g1 and --eps-grid; drop --g2")
        if cfg.mode is None or cfg.eps_grid is None:
            raise UsageError("scan requires --mode and --eps-grid")
        cfg.mode = cfg.mode.upper()
        if cfg.mode not in ("SYMMETRIC", "ANTISYMMETRIC"):
            raise UsageError(f"mode must be symmetric or antisymmetric, got {cfg.mode!r}")
    if cmd == "trajectory":
        if cfg.backend not in BACKENDS:
            raise UsageError(f"backend must be one of {', '.join(BACKENDS)}")
        if not (cfg.t_end > 0 and cfg.dt_out > 0):
            raise UsageError("--t-end and --dt-out must be positive")
        if cfg.h is not None and not cfg.h > 0:
            raise UsageError("--h must be positive")
    if cfg.workers is not None and cfg.workers < 1:
        raise UsageError("--workers must be a positive integer")
    if cfg.output is not None:
        parent = Path(cfg.output).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            raise UsageError(f"output directory {parent} does not exist or is not writable")


def config_to_dict(cfg: RunConfig) -> dict:
    """JSON-ready dict; ``parse_config([], file)`` on its dump gives ``cfg`` back."""
    d = asdict(cfg)
    if isinstance(cfg.init, tuple):
        d["init"] = {"c1": output.complex_pair(cfg.init[0]), "c2": output.complex_pair(cfg.init[1])}
    for key in ("g1_range", "g2_range", "eps_grid", "detunings"):
        if d[key] is not None:
            d[key] = list(d[key])
    return d


# ---------------------------------------------------------------- commands


def _params_dict(p: SystemParams) -> dict:
    return {"g1": p.g1, "g2": p.g2, "j": p.j, "gamma": p.gamma, "delta_c": p.delta_c}


def _emit_text(cfg, text):
    if cfg.output is None:
        sys.stdout.write(text)
    else:
        output._write_text(cfg.output, text)


def _cmd_poles(cfg):
    p, init, tol = cfg.system_params(), cfg.initial_state(), cfg.tolerances()
    dec = spectral.decompose(p, init, tol)
    pairs = lambda zs: [output.complex_pair(z) for z in zs]  # noqa: E731
    doc = {
        "params": _params_dict(p),
        "poles": pairs(dec.poles),
        "residues1": pairs(dec.residues1),
        "residues2": pairs(dec.residues2),
        "residues_b": pairs(dec.residues_b),
        "surviving": dec.surviving(tol),
        "degenerate": dec.degenerate,
        "diagnostic": dec.diagnostic,
    }
    _emit_text(cfg, output.dumps(doc) + "\n")


def _ssc_doc(res: steady.SteadyStateResult) -> dict:
    return {
        "ssc": res.ssc,
        "ssc_min": res.ssc_min,
        "ssc_max": res.ssc_max,
        "oscillatory": res.oscillatory,
        "n_surviving": res.n_surviving,
        "surviving_poles": [output.complex_pair(z) for z in res.surviving_poles],
        "source": res.source,
    }


def _cmd_ssc(cfg):
    p = cfg.system_params()
    res = steady.steady_concurrence(p, cfg.initial_state(), cfg.tolerances())
    doc = _ssc_doc(res)
    doc["params"] = _params_dict(p)
    _emit_text(cfg, output.dumps(doc) + "\n")


def _cmd_trajectory(cfg):
    p, init = cfg.system_params(), cfg.initial_state()
    t_end, dt_out = cfg.t_end / p.gamma, cfg.dt_out / p.gamma
    backend = cfg.backend
    if backend == "spectral":
        dec = spectral.decompose(p, init, cfg.tolerances())
        if dec.degenerate:
            print("darkstate: degenerate poles, using the ODE backend", file=sys.stderr)
            backend = "ode"
        else:
            traj = spectral.trajectory(dec, output_grid(t_end, dt_out))
    if backend == "ode":
        traj = ode.solve(p, init, t_end, dt_out)
    elif backend == "volterra":
        h = cfg.h / p.gamma if cfg.h is not None else None
        if h is None:
            h = min(1e-3 / p.gamma, volterra.max_step(p))
            h = dt_out / math.ceil(dt_out / h - 1e-9)
        traj = volterra.solve_volterra(p, init, t_end, h, dt_out=dt_out)
    _emit_text(cfg, output.trajectory_csv(traj))


def _sweep_summary(res, csv_path, ppm_path):
    k = int(np.argmax(res.ssc))
    i, m = np.unravel_index(k, res.shape)
    return {
        "delta_c": res.spec.delta_c,
        "csv": str(csv_path),
        "ppm": str(ppm_path),
        "shape": list(res.shape),
        "max_ssc": float(res.ssc[i, m]),
        "argmax": [float(res.g1[i]), float(res.g2[m])],
        "degenerate_fallback_cells": int(res.degenerate_fallback.sum()),
    }


def _cmd_sweep(cfg):
    s = cfg.gamma
    scale = lambda r: (r[0] * s, r[1] * s, r[2])  # noqa: E731
    spec = sweep.SweepSpec(
        scale(cfg.g1_range),
        scale(cfg.g2_range),
        cfg.initial_state(),
        j=cfg.j * s,
        gamma=s,
        delta_c=cfg.delta_c * s,
        tol=cfg.tolerances(),
    )
    stem = cfg.output or "sweep"
    if cfg.detunings is None:
        results = [(None, sweep.run_sweep(spec, cfg.workers))]
    else:
        dets = [d * s for d in cfg.detunings]
        results = list(zip(cfg.detunings, sweep.run_detuning_comparison(spec, dets, cfg.workers)))
    summaries = []
    for det, res in results:
        base = stem if det is None else f"{stem}_dc{output.fmt(det)}"
        csv_path, ppm_path = f"{base}.csv", f"{base}.ppm"
        output.emit_csv(res, csv_path)
        output.emit_heatmap(res, ppm_path)
        summaries.append(_sweep_summary(res, csv_path, ppm_path))
    print(output.dumps(summaries if cfg.detunings is not None else summaries[0]))


def _cmd_scan(cfg):
    s = cfg.gamma
    base = SystemParams(cfg.g1 * s, cfg.g1 * s, cfg.j * s, s, cfg.delta_c * s)
    lo, hi, n = cfg.eps_grid
    eps = sweep.axis(lo * s, hi * s, n)
    res = steady.instability_scan(base, cfg.initial_state(), cfg.mode, eps, cfg.tolerances())
    stem = cfg.output or "scan"
    csv_path = f"{stem}.csv"
    output.emit_csv(res, csv_path, g1=base.g1)
    doc = {
        "mode": res.mode.value,
        "csv": csv_path,
        "hwhm": None if math.isnan(res.hwhm) else res.hwhm,
        "max_ssc": float(res.ssc.max()),
    }
    print(output.dumps(doc))


_DISPATCH = {
    "poles": _cmd_poles,
    "trajectory": _cmd_trajectory,
    "ssc": _cmd_ssc,
    "sweep": _cmd_sweep,
    "scan": _cmd_scan,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        if cfg.workers is None:
            cfg.workers = sweep.default_workers()
    except (UsageError, ParameterError) as exc:
        print(f"darkstate: usage error: {exc}", file=sys.stderr)
        return 2
    try:
        _DISPATCH[cfg.command](cfg)
    except (DarkstateError, OSError) as exc:
        print(f"darkstate: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
