"""Command-line experiment runner.

Usage:

    oupinball <bounds|spectral|simulate|exit-time|cheeger|sweep>
              --config cfg.json [--out DIR] [--seed N] [--threads N]

Configs are JSON documents validated against the schemas printed by
``--print-schema`` (unknown keys are rejected; Monte Carlo commands require a
seed).  Primary outputs (CSV with 17 significant digits, canonical JSON) are
byte-identical across reruns of the same config; wall-clock metadata goes to a
sidecar ``*.meta.json`` only.

Exit codes: 0 success, 2 invalid config, 3 disconnected domain,
4 Monte Carlo failure, 5 special-function failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import json
import math
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import bounds as bnd
from . import isoperimetry as iso
from . import simulate as sim
from . import spectral as spec_mod
from .geometry import Ball, DomainSpec, GeometryError, Hypercube, Shell, Trap
from .reporting import (CrossCheckReport, Verdict, rows_to_csv,
                        to_json)
from .special_functions import (EvaluationError, ThresholdNotFoundError,
                                exit_moment_threshold, ou_exit_laplace)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DISCONNECTED = 3
EXIT_MC = 4
EXIT_SPECIAL = 5


# --------------------------------------------------------------------------
# config schema
# --------------------------------------------------------------------------

_OBSTACLE_SCHEMA = {
    "oneOf": [
        {"type": "object",
         "properties": {"type": {"const": "none"}},
         "required": ["type"], "additionalProperties": False},
        {"type": "object",
         "properties": {"type": {"const": "ball"},
                        "center": {"type": "array", "items": {"type": "number"}},
                        "r": {"type": "number", "exclusiveMinimum": 0}},
         "required": ["type", "center", "r"], "additionalProperties": False},
        {"type": "object",
         "properties": {"type": {"const": "hypercube"},
                        "center": {"type": "array", "items": {"type": "number"}},
                        "r": {"type": "number", "exclusiveMinimum": 0}},
         "required": ["type", "center", "r"], "additionalProperties": False},
        {"type": "object",
         "properties": {"type": {"const": "shell"},
                        "center": {"type": "array", "items": {"type": "number"}},
                        "r": {"type": "number", "exclusiveMinimum": 0},
                        "R": {"type": "number", "exclusiveMinimum": 0}},
         "required": ["type", "center", "r", "R"], "additionalProperties": False},
        {"type": "object",
         "properties": {"type": {"const": "trap"},
                        "y": {"type": "number"},
                        "alpha": {"type": "number", "exclusiveMinimum": 0}},
         "required": ["type", "y", "alpha"], "additionalProperties": False},
    ]
}

_SPEC_SCHEMA = {
    "type": "object",
    "properties": {
        "d": {"type": "integer", "minimum": 2},
        "lam": {"type": "number", "exclusiveMinimum": 0},
        "obstacle": _OBSTACLE_SCHEMA,
    },
    "required": ["d", "lam"],
    "additionalProperties": False,
}

CONFIG_SCHEMAS = {
    "bounds": {
        "type": "object",
        "properties": {
            "spec": _SPEC_SCHEMA,
            "constants": {"type": "object",
                          "additionalProperties": {"type": "number"}},
        },
        "required": ["spec"],
        "additionalProperties": False,
    },
    "spectral": {
        "type": "object",
        "properties": {
            "spec": _SPEC_SCHEMA,
            "h_list": {"type": "array", "items": {"type": "number"},
                       "minItems": 2},
            "box_factor": {"type": "number", "minimum": 4},
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "method": {"enum": ["auto", "lanczos", "lobpcg", "dense"]},
        },
        "required": ["spec", "h_list"],
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "properties": {
            "spec": _SPEC_SCHEMA,
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "horizon": {"type": "number", "exclusiveMinimum": 0},
            "n_paths": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer", "minimum": 0},
            "bins": {"type": "array", "items": {"type": "integer"},
                     "minItems": 2, "maxItems": 2},
            "start": {"type": "array", "items": {"type": "number"}},
        },
        "required": ["spec", "dt", "horizon", "n_paths", "seed"],
        "additionalProperties": False,
    },
    "exit-time": {
        "type": "object",
        "properties": {
            "lam": {"type": "number", "exclusiveMinimum": 0},
            "r": {"type": "number", "exclusiveMinimum": 0},
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "n_paths": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer", "minimum": 0},
            "theta_grid": {"type": "array", "items": {"type": "number"},
                           "minItems": 1},
            "horizon": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["lam", "r", "dt", "n_paths", "seed", "theta_grid"],
        "additionalProperties": False,
    },
    "cheeger": {
        "type": "object",
        "properties": {
            "spec": _SPEC_SCHEMA,
            "u_list": {"type": "array", "items": {"type": "number"}},
            "y_list": {"type": "array", "items": {"type": "number"}},
            "cap_scan": {"type": "boolean"},
        },
        "required": ["spec"],
        "additionalProperties": False,
    },
    "sweep": {
        "type": "object",
        "properties": {
            "spec": _SPEC_SCHEMA,
            "parameter": {"enum": ["r", "y1", "lam"]},
            "values": {"type": "array", "items": {"type": "number"},
                       "minItems": 1},
            "run_spectral": {"type": "boolean"},
            "h_list": {"type": "array", "items": {"type": "number"},
                       "minItems": 2},
            "box_factor": {"type": "number", "minimum": 4},
            "seed": {"type": "integer", "minimum": 0},
        },
        "required": ["spec", "parameter", "values"],
        "additionalProperties": False,
    },
}


def parse_spec(blob):
    ob_blob = blob.get("obstacle", {"type": "none"})
    kind = ob_blob["type"]
    if kind == "none":
        ob = None
    elif kind == "ball":
        ob = Ball(tuple(ob_blob["center"]), ob_blob["r"])
    elif kind == "hypercube":
        ob = Hypercube(tuple(ob_blob["center"]), ob_blob["r"])
    elif kind == "shell":
        ob = Shell(tuple(ob_blob["center"]), ob_blob["r"], ob_blob["R"])
    else:
        ob = Trap(ob_blob["y"], ob_blob["alpha"])
    return DomainSpec(blob["d"], blob["lam"], ob)


def _spec_dict(spec):
    ob = spec.obstacle
    if ob is None:
        blob = {"type": "none"}
    elif isinstance(ob, Ball):
        blob = {"type": "ball", "center": list(ob.center), "r": ob.r}
    elif isinstance(ob, Hypercube):
        blob = {"type": "hypercube", "center": list(ob.center), "r": ob.r}
    elif isinstance(ob, Shell):
        blob = {"type": "shell", "center": list(ob.center), "r": ob.r, "R": ob.R}
    else:
        blob = {"type": "trap", "y": ob.y, "alpha": ob.alpha}
    return {"d": spec.d, "lam": spec.lam, "obstacle": blob}


# --------------------------------------------------------------------------
# command implementations
# --------------------------------------------------------------------------

def _write(out_dir, name, text):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def _write_meta(out_dir, name, config):
    meta = {"written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "config": config}
    _write(out_dir, name + ".meta.json", json.dumps(meta, indent=2) + "\n")


def cmd_bounds(config, out_dir):
    spec = parse_spec(config["spec"])
    cat = bnd.aggregate(spec, constants=config.get("constants"))
    cols, rows = cat.rows()
    _write(out_dir, "bounds.csv", rows_to_csv(cols, rows))
    payload = {
        "spec": _spec_dict(spec),
        "reports": [dict(zip(cols, row)) for row in rows],
        "best_explicit_lower": cat.best_explicit_lower,
        "best_explicit_upper": cat.best_explicit_upper,
        "ordering_finding": cat.ordering_finding,
    }
    _write(out_dir, "bounds.json", to_json(payload))
    return EXIT_OK


def cmd_spectral(config, out_dir):
    spec = parse_spec(config["spec"])
    est = spec_mod.poincare_estimate(
        spec, config["h_list"], box_factor=config.get("box_factor", 6.0),
        method=config.get("method", "auto"), tol=config.get("tol", 1e-8))
    _write(out_dir, "refinement.csv",
           rows_to_csv(["h", "n_cells", "gap", "poincare"],
                       [list(r) for r in est.rows]))
    payload = {"spec": _spec_dict(spec), "estimate": est.to_dict()}
    _write(out_dir, "spectral.json", to_json(payload))
    return EXIT_OK


def cmd_simulate(config, out_dir):
    spec = parse_spec(config["spec"])
    cfg = sim.SimConfig(spec, config["dt"], config["horizon"], config["seed"],
                        config["n_paths"],
                        start=tuple(config["start"]) if "start" in config else None)
    bins = tuple(config.get("bins", (10, 8)))
    occ = sim.occupation_test(cfg, bins=bins)
    stats = sim.run_paths(cfg)
    header, rows = stats.to_csv_rows()
    _write(out_dir, "paths.csv", rows_to_csv(header, rows))
    payload = {"spec": _spec_dict(spec), "occupation": occ,
               "min_signed_distance": stats.min_signed_distance,
               "steps_total": stats.steps_total}
    _write(out_dir, "simulate.json", to_json(payload))
    return EXIT_OK


def cmd_exit_time(config, out_dir):
    lam, r = config["lam"], config["r"]
    times, censored = sim.exit_interval_ou_1d(
        lam, r, config["dt"], config["n_paths"], config["seed"],
        horizon=config.get("horizon"))
    if not np.any(~censored):
        raise RuntimeError("all paths censored")
    horizon = config.get("horizon", 60.0 / lam)
    rows = []
    for theta in config["theta_grid"]:
        res = sim.empirical_exp_moment(times, -theta, censored, horizon)
        exact = ou_exit_laplace(theta, lam, r)
        sigma = res.stderr if res.stderr > 0 else float("nan")
        zscore = (res.estimate - exact) / sigma if math.isfinite(exact) else math.nan
        rows.append([theta, res.estimate, res.stderr, exact, zscore,
                     int(res.divergence_flag)])
    _write(out_dir, "exit_time.csv",
           rows_to_csv(["theta", "mc", "mc_se", "transform", "z", "divergence"],
                       rows))
    thr = exit_moment_threshold(lam, r)
    payload = {"lam": lam, "r": r, "n_paths": config["n_paths"],
               "beta_star": thr.beta_star, "residual": thr.residual,
               "censored_fraction": float(np.mean(censored))}
    _write(out_dir, "exit_time.json", to_json(payload))
    return EXIT_OK


def cmd_cheeger(config, out_dir):
    spec = parse_spec(config["spec"])
    ob = spec.obstacle
    rows = []
    payload = {"spec": _spec_dict(spec)}
    if isinstance(ob, Hypercube):
        a = ob.center[0]
        for u in config.get("u_list", [ob.r]):
            cset = iso.SquareShadow(a, ob.r, min(u, ob.r))
            rows.append(["shadow", u, iso.set_mass(spec, cset),
                         iso.surface_mass(spec, cset),
                         iso.cheeger_ratio(spec, cset)])
        payload["ratio_floor"] = iso.shadow_ratio_floor(spec.lam, ob.r, spec.d)
    elif isinstance(ob, Ball) and config.get("cap_scan", True):
        scan = iso.cap_lower_scan(spec.lam, spec.d, ob.center[0], ob.r)
        for u, eps, val in scan.rows:
            rows.append(["cap", u, eps, val, ""])
        payload["best"] = scan.best.value if scan.best.applicable else None
        _write(out_dir, "cap_scan.csv",
               rows_to_csv(["u", "eps", "value"],
                           [[u, e, v] for u, e, v in scan.rows]))
    elif isinstance(ob, Trap):
        for y in config.get("y_list", [ob.y]):
            rep = iso.trap_lower_bound(y, ob.alpha)
            rows.append(["trap", y, rep.value, int(rep.applicable), ""])
    else:
        cset = iso.Halfspace(0.0)
        rows.append(["halfspace", 0.0, iso.set_mass(spec, cset),
                     iso.surface_mass(spec, cset),
                     iso.cheeger_ratio(spec, cset)])
    _write(out_dir, "cheeger.csv",
           rows_to_csv(["set", "p1", "p2", "p3", "p4"], rows))
    _write(out_dir, "cheeger.json", to_json(payload))
    return EXIT_OK


def _sweep_point(base_blob, parameter, value, run_spectral, h_list, box_factor):
    blob = copy.deepcopy(base_blob)
    if parameter == "lam":
        blob["lam"] = value
    elif parameter == "r":
        blob["obstacle"]["r"] = value
    else:  # y1: first center coordinate (or trap position)
        if blob["obstacle"]["type"] == "trap":
            blob["obstacle"]["y"] = value
        else:
            blob["obstacle"]["center"][0] = value
    spec = parse_spec(blob)
    cat = bnd.aggregate(spec)
    report = CrossCheckReport(spec=_spec_dict(spec), catalogue=cat)
    if run_spectral:
        est = spec_mod.poincare_estimate(spec, h_list, box_factor=box_factor)
        report.spectral = est.to_dict()
        lo = cat.best_explicit_lower
        up = cat.best_explicit_upper
        v, e = est.value, est.error_bar
        status, detail = "PASS", "estimate inside the certified envelope"
        if lo is not None and v < lo - 3 * e - 1e-12:
            status, detail = "FAIL", f"estimate {v:.6g} below certified lower {lo:.6g}"
        if up is not None and v > up * (1 + 1e-9) + 3 * e:
            status, detail = "FAIL", f"estimate {v:.6g} above certified upper {up:.6g}"
        report.verdicts.append(Verdict(
            "inside-envelope", status, detail,
            {"estimate": v, "error_bar": e, "lower": lo, "upper": up}))
    return report


def cmd_sweep(config, out_dir, threads=1):
    base = config["spec"]
    parameter = config["parameter"]
    values = config["values"]
    run_spectral = config.get("run_spectral", False)
    h_list = config.get("h_list", [0.2, 0.1])
    box_factor = config.get("box_factor", 6.0)
    points = list(enumerate(values))
    results = [None] * len(points)
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
            futs = {ex.submit(_sweep_point, base, parameter, v, run_spectral,
                              h_list, box_factor): i for i, v in points}
            for fut in concurrent.futures.as_completed(futs):
                results[futs[fut]] = fut.result()
    else:
        for i, v in points:
            results[i] = _sweep_point(base, parameter, v, run_spectral,
                                      h_list, box_factor)
    summary = []
    for (i, v), rep in zip(points, results):
        row = [i, v, rep.catalogue.best_explicit_lower,
               rep.catalogue.best_explicit_upper]
        if rep.spectral is not None:
            row += [rep.spectral["value"], rep.spectral["error_bar"]]
        else:
            row += ["", ""]
        summary.append(row)
        _write(out_dir, f"point_{i:03d}.json", to_json(rep.to_dict()))
    _write(out_dir, "sweep.csv",
           rows_to_csv(["index", "value", "best_lower", "best_upper",
                        "spectral", "spectral_err"], summary))
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _schema_text():
    return to_json({"commands": CONFIG_SCHEMAS})


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="oupinball",
        description="Poincare-constant toolkit for Gaussian measures on "
                    "punctured domains")
    parser.add_argument("--print-schema", action="store_true",
                        help="print all config schemas and exit")
    sub = parser.add_subparsers(dest="command")
    for name in CONFIG_SCHEMAS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path)
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--seed", type=int, default=None,
                        help="overrides the seed in the config")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--print-schema", action="store_true")
    args = parser.parse_args(argv)
    if args.command is None:
        if args.print_schema:
            sys.stdout.write(_schema_text())
            return EXIT_OK
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    if args.print_schema:
        sys.stdout.write(to_json(CONFIG_SCHEMAS[args.command]))
        return EXIT_OK
    if args.config is None:
        print(json.dumps({"error": "--config is required"}), file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": f"cannot read config: {exc}"}), file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and "seed" in CONFIG_SCHEMAS[args.command]["properties"]:
        config["seed"] = args.seed
    try:
        jsonschema.validate(config, CONFIG_SCHEMAS[args.command])
    except jsonschema.ValidationError as exc:
        print(json.dumps({"error": f"config schema violation: {exc.message}"}),
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "bounds":
            code = cmd_bounds(config, args.out)
        elif args.command == "spectral":
            code = cmd_spectral(config, args.out)
        elif args.command == "simulate":
            code = cmd_simulate(config, args.out)
        elif args.command == "exit-time":
            code = cmd_exit_time(config, args.out)
        elif args.command == "cheeger":
            code = cmd_cheeger(config, args.out)
        else:
            code = cmd_sweep(config, args.out, threads=args.threads)
    except (GeometryError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except spec_mod.DisconnectedDomainError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_DISCONNECTED
    except (ThresholdNotFoundError, EvaluationError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_SPECIAL
    except (sim.StepFailureError, RuntimeError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_MC
    _write_meta(args.out, args.command, config)
    return code


if __name__ == "__main__":
    sys.exit(main())
