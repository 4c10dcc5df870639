"""Scenario runner: ``patsim run|validate|constraints|palette``.

Machine output goes to declared files (or stdout with ``--stdout``); progress
goes to stderr.  Exit codes: 0 success, 2 config validation error,
3 numerical failure.  Every run writes a manifest recording the resolved
parameters, package versions, and wall time.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import math
import os
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:          # Python 3.10
    import tomli as tomllib

from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .dynamics import (EvolutionTask, NumericalFailure, ObservableSeries,
                       evolve, max_transfer, sample_grid)
from .ensembles import disorder_average
from .fluxdecor import compile_decoration, distinct_fluxes, enumerate_tile_palette
from .gauge import flux_map_ascii, flux_map_to_json, interference_probability, plaquette_flux_map
from .ionmap import check_constraints
from .model import ModelSpec, wrap_angle
from .modulation import build_dressed_matrix, dressed_matrix_to_json
from .scenario import Scenario, ScenarioError, SweepSpec, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def _write_manifest(sc: Scenario, outputs: List[str], extra: Dict, started: float,
                    to_stdout: bool) -> None:
    if to_stdout:
        return
    manifest = {
        "name": sc.name,
        "task": sc.task,
        "seed": sc.seed,
        "resolved_config": _jsonable(sc.raw),
        "outputs": outputs,
        "versions": {
            "patsim": __version__,
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "python": sys.version.split()[0],
        },
        "wall_time_s": time.time() - started,
    }
    manifest.update(extra)
    default_dir = os.path.dirname(outputs[0]) if outputs else ""
    path = sc.outputs.get("manifest",
                          os.path.join(default_dir, f"{sc.name}_manifest.json"))
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    _progress(f"manifest -> {path}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return repr(obj)


# -- evolve / compare -------------------------------------------------------

def _run_series(sc: Scenario, engine: str) -> Dict[str, ObservableSeries]:
    space = sc.build_space()
    initial = sc.build_initial(space)
    times = sample_grid(sc.t_final, sc.samples)
    engines = ("full", "effective") if engine == "both" else (engine,)
    out = {}
    for eng in engines:
        if sc.ensemble is not None:
            out[eng] = disorder_average(sc.model, space, initial, sc.ensemble,
                                        sc.t_final, times, engine=eng)
        else:
            task = EvolutionTask(model=sc.model, space=space, initial=initial,
                                 t_final=sc.t_final, sample_times=times,
                                 spins=sc.spins, engine=eng)
            out[eng] = evolve(task)
    return out


def _series_csv(series_by_engine: Dict[str, ObservableSeries], path: Optional[str],
                to_stdout: bool) -> None:
    engines = list(series_by_engine.keys())
    times = series_by_engine[engines[0]].times
    header = ["time"]
    for eng in engines:
        header += [f"{name}_{eng}" for name in series_by_engine[eng].names]
    rows = []
    for k, t in enumerate(times):
        row = [f"{t:.15g}"]
        for eng in engines:
            s = series_by_engine[eng]
            row += [f"{s[name][k]:.15g}" for name in s.names]
        rows.append(row)
    _write_csv(header, rows, path, to_stdout)


def _write_csv(header: Sequence[str], rows: Sequence[Sequence[str]],
               path: Optional[str], to_stdout: bool) -> None:
    if to_stdout:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
        return
    _ensure_parent(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    _progress(f"csv -> {path}")


def _task_evolve(sc: Scenario, args) -> Tuple[List[str], Dict]:
    engine = args.engine or sc.engine
    series = _run_series(sc, engine)
    path = sc.outputs.get("csv", f"{sc.name}.csv")
    _series_csv(series, path, args.stdout)
    extra: Dict = {}
    for eng, s in series.items():
        extra[f"meta_{eng}"] = {k: float(v) for k, v in s.meta.items()}
    if "json" in sc.outputs and not args.stdout:
        first = series[next(iter(series))]
        _ensure_parent(sc.outputs["json"])
        first.to_json(sc.outputs["json"])
    return ([] if args.stdout else [path]), extra


def _task_compare(sc: Scenario, args) -> Tuple[List[str], Dict]:
    series = _run_series(sc, "both")
    devs = {}
    s_full, s_eff = series["full"], series["effective"]
    for name in s_full.names:
        devs[name] = float(np.abs(s_full[name] - s_eff[name]).max())
    path = sc.outputs.get("csv", f"{sc.name}.csv")
    _series_csv(series, path, args.stdout)
    _progress("max |full - effective| per observable: "
              + ", ".join(f"{k}={v:.3g}" for k, v in devs.items()))
    return ([] if args.stdout else [path]), {"max_abs_deviation": devs}


# -- sweeps ------------------------------------------------------------------

def _swept_model(model: ModelSpec, parameter: str, value: float) -> ModelSpec:
    d = model.drive
    if parameter == "phi1":
        drive = replace(d, phi1=value)
    elif parameter == "phi2":
        drive = replace(d, phi2=value)
    else:
        drive = replace(d, eta_d={f: value for f in d.eta_d})
    return replace(model, drive=drive)


def _sweep_horizon(model: ModelSpec, spec: SweepSpec) -> float:
    if spec.horizon == "fixed":
        return float(spec.t_star)
    dressed = build_dressed_matrix(model, None)
    j_d = max((abs(e.value) for e in dressed.values()), default=0.0)
    j_t_scale = max((abs(e.value / e.amplitude_factor) if e.amplitude_factor != 0
                     else 0.0 for e in dressed.values()), default=0.0)
    floor = spec.floor * j_t_scale
    return math.pi / max(j_d, floor)


def sweep_point(sc: Scenario, value: float) -> Dict[str, float]:
    """One grid point of a sweep: both engines, extreme of the observable."""
    spec = sc.sweep
    model = _swept_model(sc.model, spec.parameter, value)
    t_star = _sweep_horizon(model, spec)
    point = replace(sc, model=model)
    space = point.build_space()
    initial = point.build_initial(space)
    times = sample_grid(t_star, spec.samples)
    minimum = spec.statistic == "min"
    row = {"value": value, "t_star": t_star}
    for eng in ("full", "effective"):
        task = EvolutionTask(model=model, space=space, initial=initial,
                             t_final=t_star, sample_times=times,
                             spins=sc.spins, engine=eng)
        series = evolve(task)
        row[eng] = max_transfer(series, spec.observable, t_star, minimum=minimum)
    if spec.parameter == "phi2":
        row["interference_factor"] = interference_probability(
            wrap_angle(model.drive.r * value))
    return row


def _task_sweep(sc: Scenario, args) -> Tuple[List[str], Dict]:
    spec = sc.sweep
    grid = np.linspace(spec.start, spec.stop, spec.points)
    jobs = args.jobs or (os.cpu_count() or 1)
    rows: List[Dict[str, float]] = [None] * len(grid)
    if jobs > 1 and len(grid) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(sweep_point, sc, float(v)): k
                       for k, v in enumerate(grid)}
            for fut in concurrent.futures.as_completed(futures):
                rows[futures[fut]] = fut.result()
    else:
        for k, v in enumerate(grid):
            rows[k] = sweep_point(sc, float(v))
            _progress(f"sweep {sc.name}: {k + 1}/{len(grid)}")
    columns = [spec.parameter, f"{spec.observable}_full", f"{spec.observable}_effective",
               "t_star"]
    if "interference_factor" in rows[0]:
        columns.append("interference_factor")
    table = []
    for row in rows:
        cells = [f"{row['value']:.15g}", f"{row['full']:.15g}",
                 f"{row['effective']:.15g}", f"{row['t_star']:.15g}"]
        if "interference_factor" in row:
            cells.append(f"{row['interference_factor']:.15g}")
        table.append(cells)
    path = sc.outputs.get("csv", f"{sc.name}.csv")
    _write_csv(columns, table, path, args.stdout)
    return ([] if args.stdout else [path]), {"grid_points": len(grid)}


# -- flux maps ----------------------------------------------------------------

def _task_flux_map(sc: Scenario, args) -> Tuple[List[str], Dict]:
    dressed = build_dressed_matrix(sc.model, sc.spins)
    payload = {}
    for flavor in sc.model.flavors:
        fm = plaquette_flux_map(dressed, sc.model.lattice, flavor)
        payload[flavor] = {f"{p[0]},{p[1]}": float(v) for p, v in fm.items()}
        _progress(f"flux map [{flavor}]:\n" + flux_map_ascii(fm, sc.model.lattice))
    text = json.dumps(payload, sort_keys=True, indent=1)
    outputs = []
    if args.stdout:
        print(text)
    else:
        path = sc.outputs.get("json", f"{sc.name}_flux.json")
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        outputs.append(path)
        _progress(f"json -> {path}")
    if "dressed_json" in sc.outputs and not args.stdout:
        _ensure_parent(sc.outputs["dressed_json"])
        dressed_matrix_to_json(dressed, sc.outputs["dressed_json"])
        outputs.append(sc.outputs["dressed_json"])
    return outputs, {}


def _task_decorate(sc: Scenario, args) -> Tuple[List[str], Dict]:
    drive = sc.model.drive
    flux, dressed = compile_decoration(sc.model.lattice, sc.spins, drive.phi1,
                                       drive.phi2, r=drive.r,
                                       eta_d=drive.drive_index(sc.model.flavors[0]),
                                       model=sc.model)
    _progress("flux map:\n" + flux_map_ascii(flux, sc.model.lattice))
    text = flux_map_to_json(flux)
    outputs = []
    if args.stdout:
        print(text)
    else:
        path = sc.outputs.get("json", f"{sc.name}_flux.json")
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        outputs.append(path)
        _progress(f"json -> {path}")
    return outputs, {"distinct_fluxes": sorted({round(v, 12) for v in flux.values()})}


def _task_constraints(sc: Scenario, args) -> Tuple[List[str], Dict]:
    report = check_constraints(sc.ions)
    print(report.to_table())
    outputs = []
    if "json" in sc.outputs and not args.stdout:
        _ensure_parent(sc.outputs["json"])
        report.to_json(sc.outputs["json"])
        outputs.append(sc.outputs["json"])
    return outputs, {"passed": report.passed}


TASK_RUNNERS = {
    "evolve": _task_evolve,
    "compare": _task_compare,
    "sweep": _task_sweep,
    "flux_map": _task_flux_map,
    "decorate": _task_decorate,
    "constraints": _task_constraints,
}


# -- entry points -------------------------------------------------------------

def cmd_run(args) -> int:
    started = time.time()
    try:
        sc = load_scenario(args.config)
    except (ScenarioError, FileNotFoundError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.seed is not None:
        sc.seed = args.seed
    np.random.seed(sc.seed)
    try:
        outputs, extra = TASK_RUNNERS[sc.task](sc, args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    _write_manifest(sc, outputs, extra, started, args.stdout)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        sc = load_scenario(args.config)
    except (ScenarioError, FileNotFoundError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"ok: {sc.name} ({sc.task})")
    return EXIT_OK


def cmd_constraints(args) -> int:
    from .scenario import _parse_ions, load_toml
    try:
        cfg = load_toml(args.params)
        ions = _parse_ions(cfg.get("ions", cfg))
    except (ScenarioError, FileNotFoundError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    report = check_constraints(ions, threshold=args.threshold)
    print(report.to_table())
    if args.json:
        report.to_json(args.json)
        _progress(f"json -> {args.json}")
    return EXIT_OK


def cmd_palette(args) -> int:
    palette = enumerate_tile_palette(args.phi1, args.phi2, r=args.r, eta_d=args.eta_d)
    print(f"# tile palette at phi1={args.phi1:.6g}, phi2={args.phi2:.6g}, "
          f"r={args.r}, eta_d={args.eta_d:.6g}")
    print("# corners (s1 s2 s3 s4, counterclockwise from lower-left) -> flux [rad]")
    for corners, flux in palette.items():
        label = " ".join("+" if s == 1 else "-" for s in corners)
        print(f"{label}   {flux:+.12f}   ({flux / math.pi:+.6f} pi)")
    values = distinct_fluxes(palette)
    print(f"# {len(values)} distinct fluxes:")
    print("  ".join(f"{v:+.12f}" for v in values))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patsim",
        description="Photon-assisted tunneling scenario runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--jobs", type=int, default=None,
                       help="worker processes for sweeps (default: logical cores)")
    p_run.add_argument("--stdout", action="store_true",
                       help="write machine output to stdout instead of files")
    p_run.add_argument("--engine", choices=("full", "effective", "both"), default=None,
                       help="override the scenario's engine selection")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="validate a scenario config")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)

    p_con = sub.add_parser("constraints", help="check ion-trap parameter constraints")
    p_con.add_argument("params", help="TOML file with an [ions] table")
    p_con.add_argument("--threshold", type=float, default=0.1)
    p_con.add_argument("--json", default=None, help="also write the report as JSON")
    p_con.set_defaults(func=cmd_constraints)

    p_pal = sub.add_parser("palette", help="print the 16-tile flux palette")
    p_pal.add_argument("--phi1", type=float, required=True)
    p_pal.add_argument("--phi2", type=float, required=True)
    p_pal.add_argument("--r", type=int, default=1)
    p_pal.add_argument("--eta-d", dest="eta_d", type=float, default=1.0)
    p_pal.set_defaults(func=cmd_palette)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
