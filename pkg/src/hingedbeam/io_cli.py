"""Configuration ingestion, CSV/JSON persistence, and the command line.

A run is described by one JSON object; unknown keys anywhere in it are
rejected so a typo cannot silently fall back to a default. Results go to
CSV (time series, ladder tables; header row, 17 significant digits so every
float round-trips bit-for-bit) and JSON (constants, rates, pass flags).

Exit codes are the only pass/fail channel: 0 all gates passed, 1 a gate
failed or the solve blew up, 2 the configuration was rejected.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import Scenario, StudyReport, convergence_study, make_manufactured, mms_study, uniqueness_experiment
from .basis import Interval, SpectralField, make_basis, norm, synthesize
from .energy import BoundReport, check_apriori_bounds, check_h4_recovery, energy_report
from .nonlinearity import (
    NonlinearFn,
    estimate_floor,
    make_nonlinearity,
    validate_hypotheses,
    with_anchor,
    with_floor,
)
from .ode import default_dt, make_forcing, make_profile

SNAPSHOT_POINTS = 257  # uniform plot grid incl. endpoints; renders mode 32 without visual aliasing

_METHODS = ("splitting", "rk4")


class ConfigError(Exception):
    """Raised when a configuration file cannot be accepted."""


@dataclass(frozen=True)
class RunConfig:
    """A fully validated, fully defaulted run description."""

    interval: tuple
    T: float
    k: int
    dt: float
    method: str
    output_every: int
    quad_nodes: int
    f1: dict
    f2: dict
    forcing: dict
    initial: dict
    outputs: dict
    seed: Optional[int] = None
    studies: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Normalized JSON-ready form; parsing it back is the identity."""
        raw = asdict(self)
        raw["interval"] = list(self.interval)
        raw["quadrature"] = {"nodes": raw.pop("quad_nodes")}
        return raw


def _reject_unknown(obj: dict, allowed, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def _as_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return value


def _parse_fn_spec(raw, key: str, default_id: str = "zero") -> dict:
    if raw is None:
        raw = {"id": default_id}
    if not isinstance(raw, dict):
        raise ConfigError(f"{key} must be an object with an 'id'")
    allowed = ("id", "params", "anchor", "floor") if key == "f2" else ("id", "params")
    _reject_unknown(raw, allowed, key)
    spec = {"id": raw.get("id"), "params": dict(raw.get("params") or {})}
    if not isinstance(spec["id"], str):
        raise ConfigError(f"{key}.id must be a string, got {spec['id']!r}")
    if key == "f2":
        if "anchor" in raw and raw["anchor"] is not None:
            spec["anchor"] = _as_number(raw["anchor"], "f2.anchor")
        if "floor" in raw:
            if raw["floor"] is None:
                spec["floor"] = None  # explicit null: estimate by grid minimization
            else:
                floor = _as_number(raw["floor"], "f2.floor")
                if floor > 0.0:
                    raise ConfigError(f"f2.floor must be non-positive, got {floor}")
                spec["floor"] = floor
    return spec


def build_nonlinearity(spec: dict, key: str) -> NonlinearFn:
    """Resolve a catalog spec (id/params plus f2 anchor/floor overrides)."""
    try:
        fn = make_nonlinearity(spec["id"], spec.get("params"))
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if "anchor" in spec and spec["anchor"] is not None:
        fn = with_anchor(fn, spec["anchor"])
    if "floor" in spec:
        if spec["floor"] is None:
            fn = estimate_floor(fn)
        else:
            fn = with_floor(fn, spec["floor"])
    return fn


def parse_config_dict(raw: dict, where: str = "config") -> RunConfig:
    """Validate a raw JSON object and fill in every default."""
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be a JSON object")
    _reject_unknown(
        raw,
        (
            "interval", "T", "k", "dt", "method", "output_every", "quadrature",
            "f1", "f2", "forcing", "initial", "outputs", "seed", "studies",
        ),
        where,
    )
    for key in ("interval", "T", "k"):
        if key not in raw:
            raise ConfigError(f"missing required key '{key}'")

    interval_raw = raw["interval"]
    if not (isinstance(interval_raw, (list, tuple)) and len(interval_raw) == 2):
        raise ConfigError("interval must be a [a, b] pair")
    a = _as_number(interval_raw[0], "interval[0]")
    b = _as_number(interval_raw[1], "interval[1]")
    if not a < b:
        raise ConfigError(f"interval requires a < b, got [{a}, {b}]")

    T = _as_number(raw["T"], "T")
    if T <= 0.0:
        raise ConfigError(f"T must be positive, got {T}")
    k = _as_int(raw["k"], "k")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")

    lam_k = (k * math.pi / (b - a)) ** 2
    dt = raw.get("dt")
    if dt is None:
        dt = min(1e-3, 0.1 / lam_k)
    else:
        dt = _as_number(dt, "dt")
        if dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {dt}")

    method = raw.get("method", "splitting")
    if method not in _METHODS:
        raise ConfigError(f"method must be one of {_METHODS}, got {method!r}")
    if method == "rk4" and dt > 2.5 / lam_k:
        raise ConfigError(
            f"dt = {dt:.6g} exceeds the rk4 stability guard 2.5/lambda_k = {2.5 / lam_k:.6g}"
        )

    output_every = raw.get("output_every")
    if output_every is None:
        output_every = max(1, round(T / dt / 512))
    else:
        output_every = _as_int(output_every, "output_every")
        if output_every < 1:
            raise ConfigError(f"output_every must be >= 1, got {output_every}")

    quad_raw = raw.get("quadrature") or {}
    if not isinstance(quad_raw, dict):
        raise ConfigError("quadrature must be an object")
    _reject_unknown(quad_raw, ("nodes",), "quadrature")
    quad_nodes = quad_raw.get("nodes")
    if quad_nodes is None:
        quad_nodes = max(128, 6 * k)
    else:
        quad_nodes = _as_int(quad_nodes, "quadrature.nodes")
        if quad_nodes < 1:
            raise ConfigError(f"quadrature.nodes must be >= 1, got {quad_nodes}")

    f1 = _parse_fn_spec(raw.get("f1"), "f1")
    f2 = _parse_fn_spec(raw.get("f2"), "f2")
    build_nonlinearity(f1, "f1")
    build_nonlinearity(f2, "f2")

    forcing_raw = raw.get("forcing") or {"id": "zero"}
    if not isinstance(forcing_raw, dict):
        raise ConfigError("forcing must be an object with an 'id'")
    _reject_unknown(forcing_raw, ("id", "params"), "forcing")
    forcing = {"id": forcing_raw.get("id"), "params": dict(forcing_raw.get("params") or {})}
    if not isinstance(forcing["id"], str):
        raise ConfigError(f"forcing.id must be a string, got {forcing['id']!r}")
    try:
        make_forcing(forcing["id"], Interval(a, b), forcing["params"])
    except ValueError as exc:
        raise ConfigError(f"forcing: {exc}") from exc

    initial_raw = raw.get("initial") or {}
    if not isinstance(initial_raw, dict):
        raise ConfigError("initial must be an object with 'y' and 'z'")
    _reject_unknown(initial_raw, ("y", "z"), "initial")
    initial = {}
    for part in ("y", "z"):
        part_raw = initial_raw.get(part) or {"id": "zero"}
        if not isinstance(part_raw, dict):
            raise ConfigError(f"initial.{part} must be an object with an 'id'")
        _reject_unknown(part_raw, ("id", "params"), f"initial.{part}")
        spec = {"id": part_raw.get("id"), "params": dict(part_raw.get("params") or {})}
        if not isinstance(spec["id"], str):
            raise ConfigError(f"initial.{part}.id must be a string, got {spec['id']!r}")
        try:
            make_profile(spec["id"], Interval(a, b), spec["params"])
        except ValueError as exc:
            raise ConfigError(f"initial.{part}: {exc}") from exc
        initial[part] = spec

    outputs_raw = raw.get("outputs") or {}
    if not isinstance(outputs_raw, dict):
        raise ConfigError("outputs must be an object")
    _reject_unknown(outputs_raw, ("directory", "prefix"), "outputs")
    outputs = {
        "directory": str(outputs_raw.get("directory", "out")),
        "prefix": str(outputs_raw.get("prefix", "run")),
    }

    seed = raw.get("seed")
    if seed is not None:
        seed = _as_int(seed, "seed")

    studies = _parse_studies(raw.get("studies"), k)

    return RunConfig(
        interval=(a, b), T=T, k=k, dt=dt, method=method, output_every=output_every,
        quad_nodes=quad_nodes, f1=f1, f2=f2, forcing=forcing, initial=initial,
        outputs=outputs, seed=seed, studies=studies,
    )


def _parse_studies(raw, k: int) -> dict:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("studies must be an object")
    _reject_unknown(raw, ("converge", "unique", "mms", "validate"), "studies")

    converge = raw.get("converge") or {}
    _reject_unknown(converge, ("k_ladder",), "studies.converge")
    k_ladder = converge.get("k_ladder", [4, 8, 16])
    if not (isinstance(k_ladder, list) and len(k_ladder) >= 2 and all(isinstance(v, int) and v >= 1 for v in k_ladder)):
        raise ConfigError("studies.converge.k_ladder must be a list of at least two positive integers")

    unique = raw.get("unique") or {}
    _reject_unknown(unique, ("eps", "mode"), "studies.unique")
    eps = _as_number(unique.get("eps", 1e-6), "studies.unique.eps")
    if eps < 0.0:
        raise ConfigError(f"studies.unique.eps must be >= 0, got {eps}")
    mode = _as_int(unique.get("mode", 1), "studies.unique.mode")
    if not 1 <= mode <= k:
        raise ConfigError(f"studies.unique.mode must be in 1..{k}, got {mode}")

    mms = raw.get("mms") or {}
    _reject_unknown(mms, ("id", "params", "k_ladder", "dt_ladder"), "studies.mms")
    mms_norm = {
        "id": mms.get("id", "mode_cos"),
        "params": dict(mms.get("params") or {"omega": 2.0}),
        "k_ladder": list(mms.get("k_ladder", [1, 2, 4])),
        "dt_ladder": list(mms.get("dt_ladder", [0.02, 0.01, 0.005])),
    }

    validate = raw.get("validate") or {}
    _reject_unknown(validate, ("s_range", "n_samples"), "studies.validate")
    s_range = validate.get("s_range", [-10.0, 10.0])
    if not (isinstance(s_range, list) and len(s_range) == 2):
        raise ConfigError("studies.validate.s_range must be a [lo, hi] pair")
    lo = _as_number(s_range[0], "studies.validate.s_range[0]")
    hi = _as_number(s_range[1], "studies.validate.s_range[1]")
    if not lo < hi:
        raise ConfigError(f"studies.validate.s_range requires lo < hi, got [{lo}, {hi}]")
    n_samples = _as_int(validate.get("n_samples", 1001), "studies.validate.n_samples")
    if n_samples < 2:
        raise ConfigError(f"studies.validate.n_samples must be >= 2, got {n_samples}")

    return {
        "converge": {"k_ladder": list(k_ladder)},
        "unique": {"eps": eps, "mode": mode},
        "mms": mms_norm,
        "validate": {"s_range": [lo, hi], "n_samples": n_samples},
    }


def parse_config(path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config_dict(raw, where=str(path))


def config_to_scenario(cfg: RunConfig) -> Scenario:
    """Materialize the catalogs referenced by a config into a Scenario."""
    interval = Interval(*cfg.interval)
    return Scenario(
        interval=interval,
        k=cfg.k,
        T=cfg.T,
        f1=build_nonlinearity(cfg.f1, "f1"),
        f2=build_nonlinearity(cfg.f2, "f2"),
        forcing=make_forcing(cfg.forcing["id"], interval, cfg.forcing["params"]),
        y=make_profile(cfg.initial["y"]["id"], interval, cfg.initial["y"]["params"]),
        z=make_profile(cfg.initial["z"]["id"], interval, cfg.initial["z"]["params"]),
        dt=cfg.dt,
        method=cfg.method,
        output_every=cfg.output_every,
        quad_nodes=cfg.quad_nodes,
    )


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(rows, path, columns=None) -> None:
    """Write mapping rows as an RFC-4180-style CSV with full float precision.

    Header row always present; floats carry 17 significant digits so a
    read-back reproduces them bit-for-bit; the file ends with a newline.
    """
    rows = list(rows)
    if columns is None:
        if not rows:
            raise ValueError("cannot infer CSV columns from zero rows; pass columns=")
        columns = list(rows[0].keys())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[col]) for col in columns])


def read_csv(path) -> list:
    """Read a CSV written by write_csv back into a list of string dicts."""
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def _write_json(payload: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def bound_report_rows(report: BoundReport) -> list:
    return [
        {"t": t, "lhs": l, "rhs": r, "margin": m}
        for t, l, r, m in zip(report.times, report.lhs, report.rhs, report.margins)
    ]


def study_report_payload(report: StudyReport) -> dict:
    return {
        "study_id": report.study_id,
        "rates": report.rates,
        "passed": report.passed,
        "notes": report.notes,
    }


def _trajectory_rows(traj) -> list:
    system = traj.system
    rows = []
    for state in traj.states:
        report = energy_report(system, state)
        fld = SpectralField(system.basis, state.g)
        row = {"t": state.t}
        for i, gi in enumerate(state.g, start=1):
            row[f"g_{i}"] = float(gi)
        row.update(
            {
                "norm_l2": norm(fld, "L2"),
                "norm_h2star": norm(fld, "H2star"),
                "norm_h4star": norm(fld, "H4star"),
                "kinetic": report.kinetic,
                "elastic": report.elastic,
                "potential": report.potential,
                "total": report.total,
                "dissipation_rate": report.dissipation_rate,
                "work_rate": report.work_rate,
            }
        )
        rows.append(row)
    return rows


def _snapshot_rows(traj, state) -> list:
    system = traj.system
    xs = np.linspace(system.basis.interval.a, system.basis.interval.b, SNAPSHOT_POINTS)
    fld = SpectralField(system.basis, state.g)
    u = synthesize(fld, xs, 0)
    ux = synthesize(fld, xs, 1)
    uxx = synthesize(fld, xs, 2)
    return [
        {"x": float(x), "u": float(a), "u_x": float(b), "u_xx": float(c)}
        for x, a, b, c in zip(xs, u, ux, uxx)
    ]


def _out_paths(cfg: RunConfig, out_dir: Optional[str]):
    directory = Path(out_dir) if out_dir else Path(cfg.outputs["directory"])
    return directory, cfg.outputs["prefix"]


def _cmd_solve(cfg: RunConfig, out_dir: Optional[str]) -> int:
    from .analysis import run_scenario

    scenario = config_to_scenario(cfg)
    traj = run_scenario(scenario)
    directory, prefix = _out_paths(cfg, out_dir)
    write_csv(_trajectory_rows(traj), directory / f"{prefix}_trajectory.csv")
    write_csv(_snapshot_rows(traj, traj.states[0]), directory / f"{prefix}_snapshot_initial.csv")
    write_csv(_snapshot_rows(traj, traj.states[-1]), directory / f"{prefix}_snapshot_final.csv")
    return 0


def _cmd_verify(cfg: RunConfig, out_dir: Optional[str]) -> int:
    from .analysis import run_scenario

    scenario = config_to_scenario(cfg)
    traj = run_scenario(scenario)
    directory, prefix = _out_paths(cfg, out_dir)
    constants = {}
    all_passed = True
    reports = [check_apriori_bounds(traj.system, traj, which) for which in ("step2", "step3", "step4")]
    reports.append(check_h4_recovery(traj.system, traj))
    for report in reports:
        write_csv(bound_report_rows(report), directory / f"{prefix}_{report.bound_id}.csv")
        constants[report.bound_id] = {
            "passed": report.passed,
            "tolerance": report.tolerance,
            "min_margin": float(np.min(report.margins)),
            "constants": report.constants,
        }
        all_passed = all_passed and report.passed
    _write_json(constants, directory / f"{prefix}_constants.json")
    return 0 if all_passed else 1


def _cmd_converge(cfg: RunConfig, out_dir: Optional[str]) -> int:
    scenario = config_to_scenario(cfg)
    report = convergence_study(scenario, cfg.studies["converge"]["k_ladder"])
    directory, prefix = _out_paths(cfg, out_dir)
    write_csv(report.ladder, directory / f"{prefix}_converge.csv")
    _write_json(study_report_payload(report), directory / f"{prefix}_converge.json")
    return 0 if report.passed else 1


def _cmd_unique(cfg: RunConfig, out_dir: Optional[str]) -> int:
    scenario = config_to_scenario(cfg)
    spec = cfg.studies["unique"]
    report = uniqueness_experiment(scenario, eps=spec["eps"], mode=spec["mode"])
    directory, prefix = _out_paths(cfg, out_dir)
    write_csv(report.ladder, directory / f"{prefix}_unique.csv")
    _write_json(study_report_payload(report), directory / f"{prefix}_unique.json")
    return 0 if report.passed else 1


def _cmd_mms(cfg: RunConfig, out_dir: Optional[str]) -> int:
    scenario = config_to_scenario(cfg)
    spec = cfg.studies["mms"]
    try:
        ms = make_manufactured(spec["id"], Interval(*cfg.interval), spec["params"])
    except ValueError as exc:
        raise ConfigError(f"studies.mms: {exc}") from exc
    report = mms_study(scenario, ms, spec["k_ladder"], spec["dt_ladder"])
    directory, prefix = _out_paths(cfg, out_dir)
    write_csv(report.ladder, directory / f"{prefix}_mms.csv")
    _write_json(study_report_payload(report), directory / f"{prefix}_mms.json")
    return 0 if report.passed else 1


def _cmd_validate(cfg: RunConfig, out_dir: Optional[str]) -> int:
    spec = cfg.studies["validate"]
    report = validate_hypotheses(
        build_nonlinearity(cfg.f1, "f1"),
        build_nonlinearity(cfg.f2, "f2"),
        s_range=tuple(spec["s_range"]),
        n_samples=spec["n_samples"],
    )
    directory, prefix = _out_paths(cfg, out_dir)
    _write_json(
        {"passed": report.passed, "violations": [list(v) for v in report.violations]},
        directory / f"{prefix}_validate.json",
    )
    if not report.passed:
        for s, quantity, value in report.violations[:20]:
            print(f"hypothesis violation: {quantity} = {value:.6g} at s = {s:.6g}", file=sys.stderr)
        extra = len(report.violations) - 20
        if extra > 0:
            print(f"... and {extra} more violations", file=sys.stderr)
    return 0 if report.passed else 1


_COMMANDS = {
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "converge": _cmd_converge,
    "unique": _cmd_unique,
    "mms": _cmd_mms,
    "validate": _cmd_validate,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hingedbeam",
        description="Spectral solver and estimate auditor for the nonlinear hinged-beam equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "integrate and write the trajectory plus snapshots"),
        ("verify", "run the three bound auditors and the recovery check"),
        ("converge", "mode-count ladder study"),
        ("unique", "perturbed twin-run envelope study"),
        ("mms", "manufactured-solution error ladders"),
        ("validate", "sample the nonlinearity hypotheses"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", required=True, help="path to the JSON run configuration")
        p.add_argument("-o", "--out", default=None, help="output directory (overrides outputs.directory)")
        p.add_argument("--method", choices=_METHODS, default=None, help="override the integrator")
        p.add_argument("--dt", type=float, default=None, help="override the time step")
        p.add_argument("--k", type=int, default=None, help="override the mode count")
        p.add_argument("--seed", type=int, default=None, help="reserved; the pipeline is deterministic")
    return parser


def run_cli(argv) -> int:
    """Entry point used by the console script; returns the exit code."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        overrides = {}
        if args.method is not None:
            overrides["method"] = args.method
        if args.dt is not None:
            overrides["dt"] = args.dt
        if args.k is not None:
            overrides["k"] = args.k
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            merged = cfg.to_dict()
            merged.update(overrides)
            cfg = parse_config_dict(merged, where="config with CLI overrides")
        return _COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
