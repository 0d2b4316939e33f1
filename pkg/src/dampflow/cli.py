"""Command-line front end.

Settings are merged from built-in defaults, an optional flat JSON config
file (``--config``) and command-line flags, in that order. Every command
writes its files into the output directory and prints a JSON summary.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as dio
from . import scalarflow as sf
from .divisibility import (
    cp_divisibility,
    figure2_scan,
    hausdorff_cells,
    special_points,
    tripod_mask,
)
from .dynamics import (
    Kind,
    closed_form_trajectory,
    convert_generator,
    cptp_check,
    propagate,
    step_doubling_error,
)
from .errors import ContourFailure, DampflowError, NotDiagonalizable, SingularMap
from .lindblad import canonical_form, canonical_rates, gks_matrix
from .models import ModelConfig, build
from .scalarflow import TimeGrid

OUTPUT_ENV = "DAMPFLOW_OUTPUT_DIR"

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

DEFAULTS = {
    "model": "ex4",
    "profile": None,
    "x": [1 / 3, 1 / 3, 1 / 3],
    "amplitude": 1.0,
    "decay": 4.0,
    "t_end": 5.0,
    "n_steps": 2000,
    "from": None,
    "to": "nz",
    "kind": None,
    "resolution": 60,
    "times": [0.0, 1.0, 3.0, 20.0],
    "snapshot_times": [1.0],
    "tolerance": None,
    "halve_dt": False,
    "full": False,
    "seed": 0,
    "output_dir": None,
}

COMMANDS = ("convert", "propagate", "lindblad", "divisibility", "scan", "validate")


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat JSON file with default settings")
    common.add_argument("--print-config", action="store_true", help="print the merged settings and exit")
    common.add_argument("--output-dir", dest="output_dir", default=None,
                        help=f"where files go (default: ${OUTPUT_ENV} or ./dampflow-out)")
    common.add_argument("--model", default=None, help="ex1, ex2, ex3, ex3bar, ex4, qutrit or a full model id")
    common.add_argument("--profile", default=None, help="time-profile selector of the model")
    common.add_argument("--x", type=_floats, default=None, help="simplex point x1,x2,x3 (ex4)")
    common.add_argument("--amplitude", type=float, default=None, help="rate or kernel amplitude")
    common.add_argument("--decay", type=float, default=None, help="kernel decay rate b in k0 exp(-b t)")
    common.add_argument("--t-end", dest="t_end", type=float, default=None)
    common.add_argument("--n-steps", dest="n_steps", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)

    parser = argparse.ArgumentParser(prog="dampflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[common], help="convert eigen-signals between descriptions")
    p.add_argument("--from", dest="from", choices=[k.value for k in Kind], default=None)
    p.add_argument("--to", dest="to", choices=[k.value for k in Kind], default=None)

    p = sub.add_parser("propagate", parents=[common], help="propagate the dynamical map")
    p.add_argument("--kind", choices=[k.value for k in Kind] + ["closed"], default=None)
    p.add_argument("--full", action="store_true", default=None, help="also write all map matrices as JSON")

    p = sub.add_parser("lindblad", parents=[common], help="canonical rates and Lindblad operators")
    p.add_argument("--kind", choices=[k.value for k in Kind], default=None)
    p.add_argument("--snapshot-times", dest="snapshot_times", type=_floats, default=None)

    p = sub.add_parser("divisibility", parents=[common], help="CP/P-divisibility report")
    p.add_argument("--kind", choices=["tcl", "red"], default=None)

    p = sub.add_parser("scan", parents=[common], help="simplex region scan of the random-dephasing family")
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--times", type=_floats, default=None)

    p = sub.add_parser("validate", parents=[common], help="run the invariant suite on the model zoo")
    p.add_argument("--tolerance", type=float, default=None, help="override every check tolerance")
    p.add_argument("--halve-dt", dest="halve_dt", action="store_true", default=None,
                   help="rerun second-order checks at dt/2 and report the error ratios")
    return parser


def merge_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold one flat JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg["output_dir"] is None:
        cfg["output_dir"] = os.environ.get(OUTPUT_ENV, "dampflow-out")
    cfg["command"] = args.command
    return cfg


def _model_config(cfg: dict) -> ModelConfig:
    grid = TimeGrid(cfg["t_end"], cfg["n_steps"])
    return ModelConfig(cfg["model"], grid=grid, profile=cfg["profile"], amplitude=cfg["amplitude"],
                       decay=cfg["decay"], x=tuple(cfg["x"]))


def _out_dir(cfg: dict) -> Path:
    path = Path(cfg["output_dir"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _name(path: Path) -> str:
    """File names are reported relative to the output directory so reports stay byte-stable."""
    return path.name


def _stem(cfg: dict, model) -> str:
    return model.config.model_id.value


# ---------------------------------------------------------------- commands


def cmd_convert(cfg: dict) -> tuple[int, dict]:
    model = build(_model_config(cfg))
    source = Kind(cfg["from"]) if cfg["from"] else model.generator.kind
    target = Kind(cfg["to"])
    gen = convert_generator(model.generator, source)
    out = convert_generator(gen, target)

    fine_model = build(_model_config({**cfg, "n_steps": 2 * cfg["n_steps"]}))
    fine = convert_generator(convert_generator(fine_model.generator, source), target)
    discrepancy = max(
        float(np.abs(f.samples[::2] - c.samples).max()) + abs(f.delta_weight - c.delta_weight)
        for f, c in zip(fine.signals, out.signals)
    )

    directory = _out_dir(cfg)
    stem = _stem(cfg, model)
    files = []
    for a, (s, t) in enumerate(zip(gen.signals, out.signals)):
        files.append(_name(dio.write_signal(directory / f"{stem}_{source.value}_ch{a}.csv", s)))
        files.append(_name(dio.write_signal(directory / f"{stem}_{target.value}_ch{a}.csv", t)))
    report = {
        "model": stem, "from": source.value, "to": target.value, "dt": gen.grid.dt,
        "dt_vs_half_dt_discrepancy": discrepancy,
        "delta_weights": [dio.complex_pair(s.delta_weight) for s in out.signals],
        "files": files,
    }
    dio.write_json(directory / f"{stem}_convert_{source.value}_to_{target.value}.json", report)
    return EXIT_OK, report


def _trajectory_rows(traj, dec):
    values = traj.channel_values(dec)
    for t, row in zip(traj.times, values):
        yield [float(t)] + [float(x) for v in row for x in (v.real, v.imag)]


def cmd_propagate(cfg: dict) -> tuple[int, dict]:
    model = build(_model_config(cfg))
    kind = cfg["kind"] or model.generator.kind.value
    if kind == "closed":
        gen = model.generator
        traj = closed_form_trajectory(gen)
        doubling = None
    else:
        gen = convert_generator(model.generator, Kind(kind))
        traj = propagate(gen)
        doubling = step_doubling_error(gen) if gen.grid.n_steps % 2 == 0 else None
    dec = gen.decomposition
    cptp = cptp_check(traj)
    directory = _out_dir(cfg)
    stem = _stem(cfg, model)
    header = ["t"] + [f"{p}{a}" for a in range(dec.size) for p in ("re", "im")]
    files = [_name(dio.write_table(directory / f"{stem}_trajectory_{kind}.csv", header,
                                 _trajectory_rows(traj, dec)))]
    if cfg["full"]:
        payload = {"basis": traj.basis.name, "times": traj.times, "maps": traj.maps}
        files.append(_name(dio.write_json(directory / f"{stem}_maps_{kind}.json", payload)))
    report = {
        "model": stem, "kind": kind, "dt": traj.grid.dt, "cptp": cptp.ok,
        "first_violation_time": cptp.first_violation_time,
        "min_choi_eigenvalue": cptp.min_choi_eigenvalue, "max_trace_error": cptp.max_trace_error,
        "step_doubling_error": doubling, "files": files,
    }
    return EXIT_OK, report


def cmd_lindblad(cfg: dict) -> tuple[int, dict]:
    model = build(_model_config(cfg))
    kind = Kind(cfg["kind"]) if cfg["kind"] else model.generator.kind
    gen = convert_generator(model.generator, kind)
    rates = canonical_rates(gen.matrices(), gen.basis)
    directory = _out_dir(cfg)
    stem = _stem(cfg, model)
    header = ["t"] + [f"r{a + 1}" for a in range(rates.shape[1])]
    rows = ([float(t)] + [float(r) for r in row] for t, row in zip(gen.grid.times, rates))
    files = [_name(dio.write_table(directory / f"{stem}_rates_{kind.value}.csv", header, rows))]
    snapshots = []
    for t in cfg["snapshot_times"]:
        k = int(round(t / gen.grid.dt))
        if not 0 <= k <= gen.grid.n_steps:
            raise UsageError(f"snapshot time {t} outside [0, {gen.grid.t_end}]")
        canon = canonical_form(gks_matrix(gen.at(k)))
        snapshots.append({"t": float(gen.grid.times[k]), "rates": canon.rates,
                          "lindblad_ops": canon.lindblad_ops, "hamiltonian": canon.hamiltonian})
    files.append(_name(dio.write_json(directory / f"{stem}_operators_{kind.value}.json", snapshots)))
    report = {"model": stem, "kind": kind.value, "min_rate": float(rates.min()), "files": files}
    return EXIT_OK, report


def cmd_divisibility(cfg: dict) -> tuple[int, dict]:
    model = build(_model_config(cfg))
    kind = Kind(cfg["kind"]) if cfg["kind"] else Kind.TCL
    gen = convert_generator(model.generator, kind)
    rep = cp_divisibility(gen, model=model.config.model_id.value)
    directory = _out_dir(cfg)
    stem = _stem(cfg, model)
    header = ["t"] + [f"r{a + 1}" for a in range(rep.rates.shape[1])]
    rows = ([float(t)] + [float(r) for r in row] for t, row in zip(rep.grid.times, rep.rates))
    path = dio.write_table(directory / f"{stem}_divisibility_{kind.value}.csv", header, rows)
    report = {
        "model": stem, "kind": kind.value,
        "cp_divisible": rep.cp_divisible, "cp_divisible_until": rep.cp_divisible_until,
        "first_cp_violation": rep.first_cp_violation,
        "p_divisible": rep.p_divisible, "p_divisible_until": rep.p_divisible_until,
        "first_p_violation": rep.first_p_violation, "files": [path.name],
    }
    return EXIT_OK, report


SCAN_HEADER = ["x1", "x2", "x3", "t", "exact_cp", "red_cp", "exact_p", "red_p"]


def cmd_scan(cfg: dict) -> tuple[int, dict]:
    res = int(cfg["resolution"])
    result = figure2_scan(res, cfg["times"])
    directory = _out_dir(cfg)
    path = dio.write_table(directory / f"scan_r{res}.csv", SCAN_HEADER, result.rows())
    tripod = tripod_mask(result.points)
    specials = special_points()
    per_time = []
    for i, t in enumerate(result.times):
        red = result.red_cp[:, i]
        per_time.append({
            "t": float(t),
            "exact_cp_count": int(result.exact_cp[:, i].sum()),
            "red_cp_count": int(red.sum()),
            "red_cp_on_tripod": int((red & tripod).sum()),
            "red_cp_off_tripod": int((red & ~tripod).sum()),
            "exact_only_off_tripod": int((result.exact_cp[:, i] & ~red & ~tripod).sum()),
            "red_cp_hausdorff_cells": hausdorff_cells(result.points[red], result.points[tripod], res),
        })
    summary = {
        "resolution": res, "points": len(result.points), "tripod_points": int(tripod.sum()),
        "special_points": specials, "times": per_time, "files": [path.name],
    }
    dio.write_json(directory / f"scan_r{res}_summary.json", summary)
    return EXIT_OK, summary


def cmd_validate(cfg: dict) -> tuple[int, dict]:
    from .validation import run_validation

    report = run_validation(TimeGrid(cfg["t_end"], cfg["n_steps"]), tolerance=cfg["tolerance"],
                            halve_dt=bool(cfg["halve_dt"]))
    directory = _out_dir(cfg)
    dio.write_json(directory / "validate_report.json", report)
    return (EXIT_OK if report["passed"] else EXIT_VALIDATION), report


HANDLERS = {
    "convert": cmd_convert,
    "propagate": cmd_propagate,
    "lindblad": cmd_lindblad,
    "divisibility": cmd_divisibility,
    "scan": cmd_scan,
    "validate": cmd_validate,
}

_NUMERICAL = (SingularMap, NotDiagonalizable, ContourFailure)


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(dio.dumps({"error": kind, "message": message, "exit_code": code}))
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = merge_config(args)
        if args.print_config:
            sys.stdout.write(dio.dumps(cfg))
            return EXIT_OK
        code, report = HANDLERS[args.command](cfg)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except _NUMERICAL as exc:
        return _fail(EXIT_NUMERICAL, exc.code, str(exc))
    except DampflowError as exc:
        return _fail(EXIT_USAGE, exc.code, str(exc))
    except (ValueError, TypeError) as exc:
        return _fail(EXIT_USAGE, "invalid_argument", str(exc))
    sys.stdout.write(dio.dumps(report))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
