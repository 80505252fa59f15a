"""Command-line batch driver.

A run is described by a JSON file::

    {
      "params":  {"scheme": "V3", "N": 100, "P": 1265, "p_u": 632, "alpha": 6.32},
      "sim":     {"duration": 100, "seed": 1},
      "sweep":   [{"name": "P", "grid": "log", "start": 1, "stop": 1e4, "points": 30},
                  {"name": "gamma", "values": [0, 6.32, 632]}],
      "outputs": ["fano_analytic", "fano_mc"],
      "runs": 10
    }

Sweep axes form a Cartesian product, first axis outermost.  An axis may
carry ``"scale": "<param>"`` to multiply grid values by that parameter's
base value (e.g. a P/p_d axis).  Infinite rates are written ``"inf"``.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np
from scipy import stats

from . import checks
from .errors import LaserStatsError, ParameterError
from .gillespie import SimConfig, fano_from_trajectory, simulate_runs
from .langevin import LangevinModel
from .model import LaserParams
from .spectra import (
    DEFAULT_HALF_WIDTH,
    Spectrum,
    aggregate_runs,
    default_omega_max,
    rebin,
    smooth,
    trajectory_periodogram,
)
from .steady import solve_steady

PRODUCTS = (
    "steady",
    "fano_mc",
    "fano_analytic",
    "spectrum_mc",
    "spectrum_analytic",
    "s0_contour",
    "table2",
)
PARAM_FIELDS = tuple(f.name for f in fields(LaserParams))
SIM_FIELDS = tuple(f.name for f in fields(SimConfig) if f.name != "run_index")
SPEC_KEYS = ("params", "sim", "sweep", "outputs", "runs", "large_m",
             "omega_max", "omega_points", "smooth", "description")
AXIS_KEYS = ("name", "grid", "start", "stop", "points", "values", "scale")


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    @classmethod
    def from_dict(cls, d: dict, base: LaserParams) -> "Axis":
        _reject_unknown(d, AXIS_KEYS, "sweep axis")
        name = d.get("name")
        if name not in PARAM_FIELDS:
            raise ParameterError(f"sweep axis names unknown parameter {name!r}")
        if "values" in d:
            if any(k in d for k in ("grid", "start", "stop", "points")):
                raise ParameterError(f"axis {name!r}: give either values or a grid, not both")
            vals = [_number(v) if name != "scheme" else v for v in d["values"]]
        else:
            grid = d.get("grid", "linear")
            try:
                start, stop, pts = float(d["start"]), float(d["stop"]), int(d["points"])
            except KeyError as exc:
                raise ParameterError(f"axis {name!r} is missing {exc.args[0]!r}") from None
            if pts < 1:
                raise ParameterError(f"axis {name!r} has an empty grid")
            if grid == "linear":
                vals = np.linspace(start, stop, pts).tolist()
            elif grid == "log":
                if start <= 0 or stop <= 0:
                    raise ParameterError(f"log axis {name!r} needs positive bounds")
                vals = np.geomspace(start, stop, pts).tolist()
            else:
                raise ParameterError(f"axis {name!r}: grid must be 'linear' or 'log'")
        if not vals:
            raise ParameterError(f"axis {name!r} has an empty grid")
        scale = d.get("scale")
        if scale is not None:
            if scale not in PARAM_FIELDS or scale == "scheme":
                raise ParameterError(f"axis {name!r}: cannot scale by {scale!r}")
            factor = getattr(base, scale)
            vals = [v * factor for v in vals]
        return cls(name, tuple(vals))


@dataclass(frozen=True)
class RunSpec:
    params: Optional[LaserParams]
    sim: Optional[SimConfig] = None
    sweep: tuple = ()
    outputs: tuple = ()
    runs: int = 10
    large_m: bool = False
    omega_max: Optional[float] = None
    omega_points: Optional[int] = None
    smooth: int = DEFAULT_HALF_WIDTH
    description: str = field(default="", compare=False)

    def points(self):
        """Parameter sets of the sweep, in output order, with their axis values."""
        if self.params is None:
            raise ParameterError("this product needs a 'params' section")
        if not self.sweep:
            yield (), self.params
            return
        for combo in itertools.product(*(ax.values for ax in self.sweep)):
            changes = {ax.name: v for ax, v in zip(self.sweep, combo)}
            if "N" in changes:
                changes["N"] = int(round(changes["N"]))
            if "ell" in changes:
                changes["ell"] = int(changes["ell"])
            yield combo, self.params.replace(**changes)

    @property
    def axis_names(self) -> tuple:
        return tuple(ax.name for ax in self.sweep)


def _number(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParameterError(f"expected a number, got {v!r}")
    return v


def _reject_unknown(d: dict, allowed, where: str) -> None:
    if not isinstance(d, dict):
        raise ParameterError(f"{where} must be an object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ParameterError(f"unknown key(s) in {where}: {', '.join(extra)}")


def parse_spec(data: dict) -> RunSpec:
    _reject_unknown(data, SPEC_KEYS, "config")
    outputs = tuple(data.get("outputs", []))
    for o in outputs:
        if o not in PRODUCTS:
            raise ParameterError(f"unknown output {o!r}; expected some of {PRODUCTS}")
    params = None
    if "params" in data:
        raw = data["params"]
        _reject_unknown(raw, PARAM_FIELDS, "params")
        params = LaserParams(**{k: (v if k == "scheme" else _number(v)) for k, v in raw.items()})
    elif set(outputs) != {"table2"}:
        raise ParameterError("config needs a 'params' section")
    sim = None
    if data.get("sim") is not None:
        _reject_unknown(data["sim"], SIM_FIELDS, "sim")
        sim = SimConfig(**data["sim"])
    sweep_raw = data.get("sweep", [])
    if not isinstance(sweep_raw, list):
        raise ParameterError("'sweep' must be a list of axes")
    if sweep_raw and params is None:
        raise ParameterError("a sweep needs a 'params' section")
    sweep = tuple(Axis.from_dict(a, params) for a in sweep_raw)
    names = [ax.name for ax in sweep]
    if len(set(names)) != len(names):
        raise ParameterError("a parameter appears on more than one sweep axis")
    runs = int(data.get("runs", 10))
    if runs < 1:
        raise ParameterError("runs must be >= 1")
    omega_points = data.get("omega_points")
    if omega_points is not None and int(omega_points) < 1:
        raise ParameterError("omega_points must be >= 1")
    spec = RunSpec(
        params=params, sim=sim, sweep=sweep, outputs=outputs, runs=runs,
        large_m=bool(data.get("large_m", False)),
        omega_max=None if data.get("omega_max") is None else float(data["omega_max"]),
        omega_points=None if omega_points is None else int(omega_points),
        smooth=int(data.get("smooth", DEFAULT_HALF_WIDTH)),
        description=str(data.get("description", "")),
    )
    if params is not None:
        for _ in spec.points():  # validate every sweep point up front
            pass
    return spec


def load_spec(path) -> RunSpec:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: not valid JSON ({exc})") from None
    return parse_spec(data)


# -- output helpers ---------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class CsvWriter:
    """Single writer per output file; rows go out in the order they are given."""

    def __init__(self, path, header):
        self.path = path
        self.fh = open(path, "w", newline="")
        self.fh.write(",".join(header) + "\n")

    def row(self, values):
        self.fh.write(",".join(_fmt(v) for v in values) + "\n")

    def close(self):
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _safe(fn, *args, **kwargs):
    """Value of ``fn`` or None where the analytic state does not exist."""
    try:
        return fn(*args, **kwargs)
    except LaserStatsError:
        return None


def _omega_max(spec: RunSpec, params: LaserParams) -> float:
    return spec.omega_max if spec.omega_max is not None else default_omega_max(params)


def _t_interval(values, level=0.95):
    v = np.asarray(values, dtype=float)
    mean = float(v.mean())
    if v.size < 2:
        return mean, None, None
    half = float(stats.t.ppf(0.5 + level / 2, v.size - 1) * v.std(ddof=1) / math.sqrt(v.size))
    return mean, mean - half, mean + half


# -- products ---------------------------------------------------------------


def product_steady(spec: RunSpec, out: str) -> str:
    path = os.path.join(out, "steady.csv")
    axes = [a for a in spec.axis_names if a != "P"]
    with CsvWriter(path, axes + ["P", "m", "n0", "n1", "n2", "n3", "J", "R", "S", "U", "D", "Q"]) as w:
        for combo, p in spec.points():
            lead = [v for a, v in zip(spec.axis_names, combo) if a != "P"]
            ss = _safe(solve_steady, p, spec.large_m)
            if ss is None:
                w.row(lead + [p.P] + [None] * 11)
                continue
            w.row(lead + [p.P, ss.m, *ss.populations, ss.J, ss.R, ss.S, ss.U, ss.D, ss.Q])
    return path


def product_fano_analytic(spec: RunSpec, out: str) -> str:
    path = os.path.join(out, "fano_analytic.csv")
    with CsvWriter(path, list(spec.axis_names) + ["m", "fano"]) as w:
        for combo, p in spec.points():
            model = _safe(LangevinModel, p, spec.large_m)
            if model is None:
                w.row(list(combo) + [None, None])
                continue
            w.row(list(combo) + [model.steady.m, _safe(model.fano)])
    return path


def product_s0_contour(spec: RunSpec, out: str) -> str:
    path = os.path.join(out, "s0_contour.csv")
    with CsvWriter(path, list(spec.axis_names) + ["s0"]) as w:
        for combo, p in spec.points():
            model = _safe(LangevinModel, p, spec.large_m)
            s0 = None if model is None else _safe(model.photocurrent_spectrum, [0.0])
            w.row(list(combo) + [None if s0 is None else s0[0]])
    return path


def _sim_config(spec: RunSpec) -> SimConfig:
    if spec.sim is None:
        raise ParameterError("Monte Carlo products need a 'sim' section")
    return spec.sim


def product_fano_mc(spec: RunSpec, out: str, workers: int) -> str:
    cfg = _sim_config(spec)
    path = os.path.join(out, "fano_mc.csv")
    header = list(spec.axis_names) + ["m_mean", "fano", "ci_low", "ci_high", "n_runs"]
    with CsvWriter(path, header) as w:
        for combo, p in spec.points():
            trajs = simulate_runs(p, cfg, spec.runs, workers)
            f = [_safe(fano_from_trajectory, t) for t in trajs]
            f = [x for x in f if x is not None]
            m_mean = float(np.mean([t.m_time_average for t in trajs]))
            if not f:
                w.row(list(combo) + [m_mean, None, None, None, 0])
                continue
            mean, lo, hi = _t_interval(f)
            w.row(list(combo) + [m_mean, mean, lo, hi, len(f)])
    return path


def _mc_spectrum(spec: RunSpec, p: LaserParams, workers: int) -> Spectrum:
    cfg = _sim_config(spec)
    wmax = _omega_max(spec, p)
    trajs = simulate_runs(p, cfg, spec.runs, workers)
    runs = [smooth(trajectory_periodogram(t, omega_max=wmax), spec.smooth) for t in trajs]
    agg = aggregate_runs(runs)
    if spec.omega_points is not None:
        agg = rebin(agg, spec.omega_points)
    return agg


def _spectrum_rows(w: CsvWriter, combo, sp: Spectrum):
    lo = sp.ci_low if sp.has_ci else [None] * len(sp)
    hi = sp.ci_high if sp.has_ci else [None] * len(sp)
    for row in zip(sp.omega, sp.s, lo, hi):
        w.row(list(combo) + list(row))


def product_spectra(spec: RunSpec, out: str, workers: int, mc: bool, analytic: bool) -> list:
    header = list(spec.axis_names) + ["omega", "s", "ci_low", "ci_high"]
    paths = []
    w_mc = w_an = None
    try:
        if mc:
            paths.append(os.path.join(out, "spectrum_mc.csv"))
            w_mc = CsvWriter(paths[-1], header)
        if analytic:
            paths.append(os.path.join(out, "spectrum_analytic.csv"))
            w_an = CsvWriter(paths[-1], header)
        for combo, p in spec.points():
            grid = None
            if mc:
                sp = _mc_spectrum(spec, p, workers)
                _spectrum_rows(w_mc, combo, sp)
                grid = sp.omega
            if analytic:
                if grid is None:
                    pts = spec.omega_points or 200
                    grid = np.linspace(0.0, _omega_max(spec, p), pts + 1)[1:]
                model = _safe(LangevinModel, p, spec.large_m)
                s = None if model is None else _safe(model.photocurrent_spectrum, grid)
                s = [None] * len(grid) if s is None else s
                for om, v in zip(grid, s):
                    w_an.row(list(combo) + [om, v, None, None])
    finally:
        for w in (w_mc, w_an):
            if w is not None:
                w.close()
    return paths


def product_table2(out: str) -> tuple[str, bool]:
    path = os.path.join(out, "table2.csv")
    rows = checks.table2_rows()
    header = ["scheme", "ell", "s_min", "s0", "s0_expected", "fano", "fano_expected", "ok"]
    with CsvWriter(path, header) as w:
        for r in rows:
            w.row([r[k] for k in header])
    return path, all(r["ok"] for r in rows)


def run(spec: RunSpec, out: str, workers: int = 1, products=None) -> tuple[list, bool]:
    """Write every requested product; returns (paths, all internal checks ok)."""
    os.makedirs(out, exist_ok=True)
    products = tuple(products if products is not None else spec.outputs)
    if not products:
        raise ParameterError("nothing to do: the config requests no outputs")
    paths = []
    ok = True
    if "steady" in products:
        paths.append(product_steady(spec, out))
    if "fano_analytic" in products:
        paths.append(product_fano_analytic(spec, out))
    if "s0_contour" in products:
        paths.append(product_s0_contour(spec, out))
    if "fano_mc" in products:
        paths.append(product_fano_mc(spec, out, workers))
    mc, an = "spectrum_mc" in products, "spectrum_analytic" in products
    if mc or an:
        paths += product_spectra(spec, out, workers, mc, an)
    if "table2" in products:
        path, good = product_table2(out)
        paths.append(path)
        ok = ok and good
    return paths, ok


# -- argument handling ------------------------------------------------------

SUBCOMMANDS = {
    "steady": ("steady",),
    "mc": ("fano_mc",),
    "spectrum": ("spectrum_mc", "spectrum_analytic"),
    "fano": ("fano_analytic",),
    "sweep": None,  # whatever the config lists
}


def _apply_overrides(spec: RunSpec, args) -> RunSpec:
    changes = {}
    if args.runs is not None:
        if args.runs < 0:
            raise ParameterError("--runs must be >= 0")
        changes["runs"] = max(args.runs, 1)
    if args.omega_max is not None:
        if not args.omega_max > 0:
            raise ParameterError("--omega-max must be positive")
        changes["omega_max"] = args.omega_max
    if args.omega_points is not None:
        if args.omega_points < 1:
            raise ParameterError("--omega-points must be >= 1")
        changes["omega_points"] = args.omega_points
    if args.smooth is not None:
        if args.smooth < 1:
            raise ParameterError("--smooth must be >= 1")
        changes["smooth"] = args.smooth
    if args.seed is not None:
        if spec.sim is None:
            raise ParameterError("--seed given but the config has no 'sim' section")
        changes["sim"] = replace(spec.sim, seed=args.seed)
    return replace(spec, **changes)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="laserstats", description="Laser photon-statistics batch driver.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("steady", "mc", "spectrum", "fano", "sweep", "table2", "check"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run specification")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--seed", type=int, help="override the simulation seed")
        p.add_argument("--runs", type=int, help="Monte Carlo runs per point")
        p.add_argument("--omega-max", type=float, dest="omega_max")
        p.add_argument("--omega-points", type=int, dest="omega_points")
        p.add_argument("--smooth", type=int, help="smoothing half-width in bins")
        p.add_argument("--workers", type=int, default=1, help="parallel simulation processes")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            results = checks.run_all(0 if args.seed is None else args.seed)
            for r in results:
                print(r.line())
            return 0 if all(r.passed for r in results) else 1
        if args.command == "table2":
            os.makedirs(args.out, exist_ok=True)
            path, ok = product_table2(args.out)
            print(path)
            if not ok:
                print("error: optimum table mismatch", file=sys.stderr)
            return 0 if ok else 1
        if not args.config:
            raise ParameterError(f"'{args.command}' needs --config")
        spec = _apply_overrides(load_spec(args.config), args)
        products = SUBCOMMANDS[args.command]
        if args.command == "spectrum" and args.runs == 0:
            products = ("spectrum_analytic",)
        paths, ok = run(spec, args.out, args.workers, products)
        for p in paths:
            print(p)
        if not ok:
            print("error: internal check failed", file=sys.stderr)
            return 1
        return 0
    except (LaserStatsError, OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
