"""Experiment runner: turns a JSON config into CSV data plus a manifest.

Each experiment reproduces one figure/table-level result as a flat CSV
(RFC-4180, header row, '.' decimal separator) next to a JSON manifest
holding the fully resolved parameters, so a run can be repeated
byte-identically from its manifest.  One experiment per invocation;
sweeps are parameter lists inside the config, expanded internally and
optionally fanned out over a worker pool.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

from . import analysis, dicke, dispersive, jc_fock, open_system
from .hilbert import (IntegrationError, TruncationError, ZeroProbabilityError,
                      coherent_state, fock_cutoff)

SCHEMA_VERSION = 1

try:
    _VERSION = metadata.version("gpmsim")
except metadata.PackageNotFoundError:  # running from a source tree
    _VERSION = "0.1.0"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict
    output_path: str | None = None


# rates quoted for current circuit-QED hardware; angular s^-1 without 2*pi
_GLOBAL_DEFAULTS = {
    "g": 1e8,
    "chi": 2e6,
    "gamma": 1e5,
    "gamma_phi": 1e5,
    "kappa": 1e3,
    "rounding": "floor",
}

_FOCK_SIZES = [50, 70, 100, 140, 200, 280, 400, 570, 800, 1130, 1600, 2000]
_DICKE_SIZES = [50, 70, 100, 142, 200, 282, 400, 566, 800, 1132, 1600]
_QFI_SIZES = [100, 200, 400, 800, 1600]

EXPERIMENTS = {
    "fock-ideal": {
        "describe": "closed-system resonant run toward |n_t>",
        "required": ["n_t"],
        "defaults": {"N": 10, "g": None, "rounding": None},
        "columns": ["round", "fidelity", "success_prob", "cumulative_prob",
                    "elapsed_ns"],
    },
    "fock-noisy": {
        "describe": "resonant run under the master equation, sweepable kappa",
        "required": ["n_t"],
        "defaults": {"N": 7, "g": None, "kappa": None, "gamma": None,
                     "gamma_phi": None, "tolerance": 1e-6, "rounding": None},
        "columns": ["kappa", "round", "fidelity", "success_prob",
                    "cumulative_prob", "elapsed_ns"],
        "sweep": ["kappa"],
    },
    "dispersive-compare": {
        "describe": "noisy resonant vs dispersive protocol, sweepable kappa",
        "required": ["n_t"],
        "defaults": {"N": 7, "g": None, "chi": None, "kappa": None,
                     "gamma": None, "gamma_phi": None, "tolerance": 1e-6,
                     "rounding": None},
        "columns": ["protocol", "kappa", "round", "fidelity", "success_prob",
                    "cumulative_prob", "elapsed_ns"],
        "sweep": ["kappa"],
    },
    "fock-scaling": {
        "describe": "minimum rounds to a fidelity threshold vs n_t, log fit",
        "required": [],
        "defaults": {"sizes": _FOCK_SIZES, "threshold": 0.98, "max_rounds": 20,
                     "rounding": None},
        "columns": ["n_t", "min_rounds", "fit_rounds"],
    },
    "dicke-ideal": {
        "describe": "closed-system hybrid run toward |J, 0>",
        "required": ["M"],
        "defaults": {"N": 8, "g": None, "rounding": None},
        "columns": ["round", "fidelity", "success_prob", "cumulative_prob",
                    "elapsed_ns"],
    },
    "dicke-scaling": {
        "describe": "minimum rounds to a fidelity threshold vs M, log fit",
        "required": [],
        "defaults": {"sizes": _DICKE_SIZES, "threshold": 0.90, "max_rounds": 20,
                     "rounding": None},
        "columns": ["M", "min_rounds", "fit_rounds"],
    },
    "qfi-sweep": {
        "describe": "quantum Fisher information of the N-round output vs M",
        "required": [],
        "defaults": {"sizes": _QFI_SIZES, "N": 2, "rounding": None},
        "columns": ["M", "qfi", "ideal_qfi"],
    },
}

_INT_KEYS = {"n_t", "M", "N", "max_rounds"}
_RATE_KEYS = {"kappa", "gamma", "gamma_phi"}
_POSITIVE_KEYS = {"g", "chi", "tolerance"}


def _check_value(key: str, value):
    if key in _INT_KEYS:
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ConfigError(f"{key} must be a positive integer, got {value!r}")
        if key == "M" and value % 2:
            raise ConfigError(f"M must be even, got {value}")
    elif key in _RATE_KEYS:
        if not isinstance(value, (int, float)) or value < 0:
            raise ConfigError(f"{key} must be a non-negative rate, got {value!r}")
    elif key in _POSITIVE_KEYS:
        if not isinstance(value, (int, float)) or value <= 0:
            raise ConfigError(f"{key} must be positive, got {value!r}")
    elif key == "threshold":
        if not isinstance(value, (int, float)) or not 0.0 < value < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {value!r}")
    elif key == "rounding":
        if value not in ("floor", "ceil"):
            raise ConfigError(f"rounding must be 'floor' or 'ceil', got {value!r}")
    elif key == "sizes":
        if (not isinstance(value, list) or not value
                or any(not isinstance(s, int) or s < 1 for s in value)):
            raise ConfigError("sizes must be a non-empty list of positive ints")


def validate_config(raw) -> ExperimentConfig:
    """Parse and validate a JSON config (text, path contents, or dict)."""
    if isinstance(raw, str):
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    else:
        doc = raw
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(doc) - {"experiment", "parameters", "output_path"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    name = doc.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    spec = EXPERIMENTS[name]
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("parameters must be a JSON object")
    allowed = set(spec["required"]) | set(spec["defaults"])
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(
            f"unknown parameters for {name}: {sorted(unknown)} "
            f"(allowed: {sorted(allowed)})")
    missing = [k for k in spec["required"] if k not in params]
    if missing:
        raise ConfigError(f"missing required parameters for {name}: {missing}")

    resolved = {}
    for key in spec["required"]:
        resolved[key] = params[key]
    for key, default in spec["defaults"].items():
        if key in params:
            resolved[key] = params[key]
        elif default is not None:
            resolved[key] = default
        else:
            resolved[key] = _GLOBAL_DEFAULTS[key]

    sweep_keys = set(spec.get("sweep", ()))
    for key, value in resolved.items():
        if key in sweep_keys and isinstance(value, list):
            if not value:
                raise ConfigError(f"{key} sweep list must not be empty")
            for v in value:
                _check_value(key, v)
        else:
            _check_value(key, value)

    output_path = doc.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError("output_path must be a string")
    return ExperimentConfig(name, resolved, output_path)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------- runners


def _run_fock_ideal(p, jobs):
    n_t = p["n_t"]
    state = coherent_state(math.sqrt(n_t), fock_cutoff(n_t))
    schedule = jc_fock.build_fock_schedule(n_t, p["N"], p["g"], p["rounding"])
    record = jc_fock.run_ideal_protocol(state, schedule)
    rows = []
    cum = 1.0
    for k, (fid, prob) in enumerate(zip(record.fidelity_per_round,
                                        record.success_prob_per_round), start=1):
        cum *= prob
        rows.append([k, fid, prob, cum,
                     sum(schedule.durations[:k]) * 1e9])
    return rows, {}


def _noisy_point(args):
    n_t, N, g, kappa, gamma, gamma_phi, tol, rounding = args
    state = coherent_state(math.sqrt(n_t), fock_cutoff(n_t, width=6.0),
                           tail_tol=1e-6)
    schedule = jc_fock.build_fock_schedule(n_t, N, g, rounding)
    noise = open_system.NoiseParams(kappa=kappa, gamma=gamma,
                                    gamma_phi=gamma_phi)
    record = open_system.run_noisy_protocol(state, schedule, noise, tol=tol)
    rows = []
    cum = 1.0
    for k, (fid, prob) in enumerate(zip(record.fidelity_per_round,
                                        record.success_prob_per_round), start=1):
        cum *= prob
        rows.append([kappa, k, fid, prob, cum,
                     sum(schedule.durations[:k]) * 1e9])
    return rows


def _dispersive_point(args):
    n_t, N, chi, kappa, gamma, gamma_phi, tol = args
    state = coherent_state(math.sqrt(n_t), fock_cutoff(n_t, width=6.0),
                           tail_tol=1e-6)
    schedule = dispersive.build_dispersive_schedule(n_t, N, chi)
    noise = open_system.NoiseParams(kappa=kappa, gamma=gamma,
                                    gamma_phi=gamma_phi)
    record = open_system.run_noisy_protocol(state, schedule, noise, tol=tol)
    rows = []
    cum = 1.0
    for k, (fid, prob) in enumerate(zip(record.fidelity_per_round,
                                        record.success_prob_per_round), start=1):
        cum *= prob
        rows.append(["dispersive", kappa, k, fid, prob, cum,
                     sum(schedule.durations[:k]) * 1e9])
    return rows


def _map_points(fn, points, jobs):
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, points))
    return [fn(pt) for pt in points]


def _as_list(value):
    return value if isinstance(value, list) else [value]


def _run_fock_noisy(p, jobs):
    points = [(p["n_t"], p["N"], p["g"], kappa, p["gamma"], p["gamma_phi"],
               p["tolerance"], p["rounding"]) for kappa in _as_list(p["kappa"])]
    rows = [row for chunk in _map_points(_noisy_point, points, jobs)
            for row in chunk]
    return rows, {}


def _dispersive_compare_point(args):
    kind, rest = args
    if kind == "resonant":
        rows = _noisy_point(rest)
        return [["resonant"] + row for row in rows]
    return _dispersive_point(rest)


def _run_dispersive_compare(p, jobs):
    points = []
    for kappa in _as_list(p["kappa"]):
        points.append(("resonant", (p["n_t"], p["N"], p["g"], kappa,
                                    p["gamma"], p["gamma_phi"], p["tolerance"],
                                    p["rounding"])))
        points.append(("dispersive", (p["n_t"], p["N"], p["chi"], kappa,
                                      p["gamma"], p["gamma_phi"],
                                      p["tolerance"])))
    rows = [row for chunk in _map_points(_dispersive_compare_point, points, jobs)
            for row in chunk]
    return rows, {}


def _min_rounds_point(args):
    kind, size, threshold, max_rounds, rounding = args
    return analysis.min_rounds(kind, size, threshold, max_rounds, rounding)


def _run_scaling(kind, p, jobs):
    sizes = sorted(p["sizes"])
    points = [(kind, s, p["threshold"], p["max_rounds"], p["rounding"])
              for s in sizes]
    counts = _map_points(_min_rounds_point, points, jobs)
    fit = analysis.fit_log_scaling(list(zip(sizes, counts)))
    rows = [[s, n, 0.5 * math.log2(s) + fit.coefficients[0]]
            for s, n in zip(sizes, counts)]
    extras = {"fit_model": fit.model,
              "fit_coefficients": list(fit.coefficients),
              "fit_residual": fit.residual}
    return rows, extras


def _run_fock_scaling(p, jobs):
    return _run_scaling("fock", p, jobs)


def _run_dicke_scaling(p, jobs):
    for s in p["sizes"]:
        if s % 2:
            raise ConfigError(f"dicke sizes must be even, got {s}")
    return _run_scaling("dicke", p, jobs)


def _run_dicke_ideal(p, jobs):
    M = p["M"]
    ensemble = dicke.initial_product_state(M, dicke.optimal_phi(0, M))
    schedule = dicke.build_dicke_schedule(M, p["N"], p["g"], p["rounding"])
    record = dicke.run_dicke_protocol(ensemble, schedule)
    durations = [r[2] for r in schedule.rounds]
    rows = []
    cum = 1.0
    for k, (fid, prob) in enumerate(zip(record.fidelity_per_round,
                                        record.success_prob_per_round), start=1):
        cum *= prob
        rows.append([k, fid, prob, cum, sum(durations[:k]) * 1e9])
    return rows, {}


def _qfi_point(args):
    M, N, rounding = args
    ensemble = dicke.initial_product_state(M, dicke.optimal_phi(0, M))
    schedule = dicke.build_dicke_schedule(M, N, 1.0, rounding)
    record = dicke.run_dicke_protocol(ensemble, schedule)
    return [M, dicke.qfi_x(record.final_state), M * M / 2 + M]


def _run_qfi_sweep(p, jobs):
    for s in p["sizes"]:
        if s % 2:
            raise ConfigError(f"qfi sizes must be even, got {s}")
    sizes = sorted(p["sizes"])
    rows = _map_points(_qfi_point, [(s, p["N"], p["rounding"]) for s in sizes],
                       jobs)
    fit = analysis.fit_qfi_quadratic([(r[0], r[1]) for r in rows])
    extras = {"fit_model": fit.model,
              "fit_coefficients": list(fit.coefficients),
              "fit_residual": fit.residual}
    return rows, extras


_RUNNERS = {
    "fock-ideal": _run_fock_ideal,
    "fock-noisy": _run_fock_noisy,
    "dispersive-compare": _run_dispersive_compare,
    "fock-scaling": _run_fock_scaling,
    "dicke-ideal": _run_dicke_ideal,
    "dicke-scaling": _run_dicke_scaling,
    "qfi-sweep": _run_qfi_sweep,
}

# ------------------------------------------------------------- plumbing


def run_experiment(config: ExperimentConfig, jobs: int = 1,
                   out_dir: str | None = None) -> tuple[Path, Path]:
    """Run one experiment; returns the CSV and manifest paths."""
    start = time.time()
    rows, extras = _RUNNERS[config.experiment](config.parameters, jobs)
    name = config.output_path or f"{config.experiment}.csv"
    base = Path(out_dir) / Path(name).name if out_dir else Path(name)
    base.parent.mkdir(parents=True, exist_ok=True)
    columns = EXPERIMENTS[config.experiment]["columns"]
    with open(base, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "experiment": config.experiment,
        "parameters": config.parameters,
        "columns": columns,
        "csv": base.name,
        "library_version": _VERSION,
        "wall_clock_seconds": time.time() - start,
    }
    manifest.update(extras)
    manifest_path = base.with_suffix(".manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return base, manifest_path


def _load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(text)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gpmsim",
        description="measurement-based Fock/Dicke state-preparation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to JSON config")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="worker processes for sweep points")
    p_run.add_argument("--out", default=None,
                       help="output directory (overrides the config)")

    p_val = sub.add_parser("validate", help="validate a JSON config")
    p_val.add_argument("--config", required=True)

    sub.add_parser("list-experiments", help="list experiment names")

    args = parser.parse_args(argv)
    if args.command == "list-experiments":
        for name in sorted(EXPERIMENTS):
            print(f"{name}: {EXPERIMENTS[name]['describe']}")
        return 0
    try:
        config = _load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(json.dumps({"experiment": config.experiment,
                          "parameters": config.parameters,
                          "output_path": config.output_path},
                         indent=2, sort_keys=True))
        return 0
    try:
        csv_path, manifest_path = run_experiment(config, jobs=args.jobs,
                                                 out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ZeroProbabilityError, TruncationError, IntegrationError,
            analysis.NotReachedError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 3
    print(csv_path)
    print(manifest_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
