"""Command-line front end and experiment orchestration.

Subcommands:

* run      -- integrate a configured flow and write the full diagnostic set
* reduce   -- reduce one point into the fundamental domain
* analyze  -- recompute the diagnostics of a stored run from its snapshots
              and audit them against the stored series
* sweep    -- run a list of config variants, optionally in parallel

Configs are strict JSON: unknown keys anywhere are rejected, every value is
type-checked, and the resolved config (defaults filled in) is echoed into
the run directory so analyze can rebuild the exact measurement setup.  Runs
are deterministic: the same config and seed produce bit-identical output
files.  MODFLOW_THREADS caps kernel threads (exported to the BLAS thread
pools and to sweep subprocesses).

Only the standard library is imported at module scope so the thread cap can
be applied before numpy comes in.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

SERIES_SCHEMA = "moduliflow-series-v1"
STEPS_SCHEMA = "moduliflow-steps-v1"
SUMMARY_SCHEMA = "moduliflow-summary-v1"
SWEEP_SCHEMA = "moduliflow-sweep-v1"

SERIES_BASE_COLUMNS = [
    "t", "E", "D", "cumulative_D", "dt",
    "H", "rho_max", "tail_mass", "degenerate_fraction",
]
# Columns analyze can recompute from snapshots alone; dt and cumulative_D
# are stepping history and are echoed, not recomputed.
RECOMPUTABLE = {"t", "E", "D", "H", "rho_max", "tail_mass", "degenerate_fraction"}

DEFAULT_TEST_FUNCTIONS = [
    {"center": [0.0, 1.5], "radii": [0.35, 0.45], "amplitude": 1.0},
    {"center": [-0.2, 2.5], "radii": [0.25, 1.0], "amplitude": 1.0},
]


class ConfigError(ValueError):
    """A config failed validation; .path names the offending key."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class GridSpec:
    n1: int = 64
    n2: int = 64


@dataclass(frozen=True)
class BinningSpec:
    n_x: int = 60
    n_y: int = 60
    y_max: float = 10.0


@dataclass
class FlowConfig:
    """Fully resolved experiment configuration."""

    grid: GridSpec = GridSpec()
    initial: dict = field(default_factory=lambda: {"kind": "sinusoidal"})
    t_final: float = 1.0
    snapshot_interval: float = 0.05
    cfl_safety: float = 0.5
    dt_floor: float = 1e-12
    stall_threshold: float = 1e-14
    binning: BinningSpec = BinningSpec()
    test_functions: list = field(
        default_factory=lambda: [dict(tf) for tf in DEFAULT_TEST_FUNCTIONS]
    )
    density_threshold: float = 10.0
    jacobian_threshold: float = 1e-6
    seed: int = 0
    output_dir: str | None = None

    def to_dict(self) -> dict:
        return {
            "grid": {"n1": self.grid.n1, "n2": self.grid.n2},
            "initial": dict(self.initial),
            "t_final": self.t_final,
            "snapshot_interval": self.snapshot_interval,
            "cfl_safety": self.cfl_safety,
            "dt_floor": self.dt_floor,
            "stall_threshold": self.stall_threshold,
            "binning": {
                "n_x": self.binning.n_x,
                "n_y": self.binning.n_y,
                "y_max": self.binning.y_max,
            },
            "test_functions": [dict(tf) for tf in self.test_functions],
            "density_threshold": self.density_threshold,
            "jacobian_threshold": self.jacobian_threshold,
            "seed": self.seed,
            "output_dir": self.output_dir,
        }


def _expect(raw: dict, allowed: set, path: str):
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", f"{path}.{key}" if path else key)


def _number(raw, path, *, positive=False, nonnegative=False, at_most=None) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"expected a number, got {raw!r}", path)
    val = float(raw)
    if not math.isfinite(val):
        raise ConfigError("must be finite", path)
    if positive and not val > 0.0:
        raise ConfigError(f"must be positive, got {val}", path)
    if nonnegative and val < 0.0:
        raise ConfigError(f"must be nonnegative, got {val}", path)
    if at_most is not None and val > at_most:
        raise ConfigError(f"must be at most {at_most}, got {val}", path)
    return val


def _integer(raw, path, *, minimum=None) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"expected an integer, got {raw!r}", path)
    if minimum is not None and raw < minimum:
        raise ConfigError(f"must be at least {minimum}, got {raw}", path)
    return raw


def _validate_initial(raw: dict, path: str) -> dict:
    from .initial import KIND_DEFAULTS

    if not isinstance(raw, dict):
        raise ConfigError("must be an object", path)
    kind = raw.get("kind")
    if kind not in KIND_DEFAULTS:
        raise ConfigError(
            f"unknown kind {kind!r}; expected one of {sorted(KIND_DEFAULTS)}",
            f"{path}.kind",
        )
    _expect(raw, set(KIND_DEFAULTS[kind]) | {"kind"}, path)
    return dict(raw)


def _validate_test_function(raw, path) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("must be an object", path)
    _expect(raw, {"center", "radii", "amplitude"}, path)
    out = {}
    for key in ("center", "radii"):
        pair = raw.get(key)
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise ConfigError("expected a pair [x, y]", f"{path}.{key}")
        out[key] = [
            _number(pair[0], f"{path}.{key}[0]"),
            _number(pair[1], f"{path}.{key}[1]", positive=(key == "radii")),
        ]
        if key == "radii" and not out[key][0] > 0:
            raise ConfigError("radii must be positive", f"{path}.{key}")
    out["amplitude"] = _number(raw.get("amplitude", 1.0), f"{path}.amplitude")
    return out


def config_from_dict(raw: dict) -> FlowConfig:
    """Validate a JSON-compatible dictionary into a FlowConfig (fail-closed)."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _expect(raw, {
        "grid", "initial", "t_final", "snapshot_interval", "cfl_safety",
        "dt_floor", "stall_threshold", "binning", "test_functions",
        "density_threshold", "jacobian_threshold", "seed", "output_dir",
    }, "")
    grid_raw = raw.get("grid", {})
    if not isinstance(grid_raw, dict):
        raise ConfigError("must be an object", "grid")
    _expect(grid_raw, {"n1", "n2"}, "grid")
    grid = GridSpec(
        _integer(grid_raw.get("n1", 64), "grid.n1", minimum=4),
        _integer(grid_raw.get("n2", 64), "grid.n2", minimum=4),
    )
    bin_raw = raw.get("binning", {})
    if not isinstance(bin_raw, dict):
        raise ConfigError("must be an object", "binning")
    _expect(bin_raw, {"n_x", "n_y", "y_max"}, "binning")
    y_max = _number(bin_raw.get("y_max", 10.0), "binning.y_max", positive=True)
    if y_max <= 1.0:
        raise ConfigError(f"must exceed 1, got {y_max}", "binning.y_max")
    binning = BinningSpec(
        _integer(bin_raw.get("n_x", 60), "binning.n_x", minimum=2),
        _integer(bin_raw.get("n_y", 60), "binning.n_y", minimum=2),
        y_max,
    )
    tf_raw = raw.get("test_functions", DEFAULT_TEST_FUNCTIONS)
    if not isinstance(tf_raw, list) or not tf_raw:
        raise ConfigError("must be a non-empty list", "test_functions")
    test_functions = [
        _validate_test_function(tf, f"test_functions[{i}]")
        for i, tf in enumerate(tf_raw)
    ]
    density = _number(raw.get("density_threshold", 10.0), "density_threshold")
    if density <= 1.0:
        raise ConfigError(f"must exceed 1, got {density}", "density_threshold")
    out_dir = raw.get("output_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("must be a string or null", "output_dir")
    return FlowConfig(
        grid=grid,
        initial=_validate_initial(raw.get("initial", {"kind": "sinusoidal"}), "initial"),
        t_final=_number(raw.get("t_final", 1.0), "t_final", positive=True),
        snapshot_interval=_number(
            raw.get("snapshot_interval", 0.05), "snapshot_interval", positive=True
        ),
        cfl_safety=_number(
            raw.get("cfl_safety", 0.5), "cfl_safety", positive=True, at_most=1.0
        ),
        dt_floor=_number(raw.get("dt_floor", 1e-12), "dt_floor", positive=True),
        stall_threshold=_number(
            raw.get("stall_threshold", 1e-14), "stall_threshold", nonnegative=True
        ),
        binning=binning,
        test_functions=test_functions,
        density_threshold=density,
        jacobian_threshold=_number(
            raw.get("jacobian_threshold", 1e-6), "jacobian_threshold", positive=True
        ),
        seed=_integer(raw.get("seed", 0), "seed", minimum=0),
        output_dir=out_dir,
    )


def parse_config(text: str) -> FlowConfig:
    """Parse strict-JSON config text; malformed JSON reports line/column."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return config_from_dict(raw)


def emit_config(config: FlowConfig) -> str:
    """Canonical JSON emission; parse(emit(c)) == c."""
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(value) -> str:
    return repr(float(value))


@dataclass
class ExperimentResult:
    config: FlowConfig
    out_dir: Path
    trajectory: object
    series_columns: list
    series_rows: list
    summary: dict
    aborted: bool


def _series_lines(columns, rows):
    lines = [f"# schema: {SERIES_SCHEMA}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def compute_snapshot_diagnostics(snapshots, binning, reference, observables,
                                 density_threshold, jacobian_threshold):
    """Per-snapshot measure diagnostics; shared by run and analyze.

    Returns (reports, ergodic_matrix, measures) where ergodic_matrix[k][j]
    is the time-average equidistribution error of observable j at snapshot k.
    """
    from . import measures as ms
    from .flow import dissipation_rate, energy as flow_energy

    mus = [ms.pushforward(s, binning) for s in snapshots]
    reports = [
        ms.entropy_report(s, binning, reference, density_threshold, jacobian_threshold)
        for s in snapshots
    ]
    ergodic = [
        ms.ergodic_error_from_measures(mus, f, reference) for f in observables
    ]
    energies = [flow_energy(s) for s in snapshots]
    dissipations = [dissipation_rate(s) for s in snapshots]
    return reports, ergodic, mus, energies, dissipations


def run_experiment(config: FlowConfig, out_dir=None) -> ExperimentResult:
    """Run the configured flow and write the diagnostic files.

    Layout of the run directory: config.json (resolved echo), series.csv
    (snapshot-aligned diagnostics), steps.csv (per-step scalars),
    snapshots/, measures/ (per-snapshot pushforwards plus the run's
    trapezoid time average), entropy.jsonl, summary.json.  An aborted run
    (dt underflow) still writes everything computed so far and is marked in
    summary.json.
    """
    import numpy as np

    from . import measures as ms
    from .flow import AbortedRunError, FlowParams, run_flow
    from .hyperbolic import FundamentalDomainBinning
    from .initial import build_initial_state
    from .mesh import DomainGrid
    from .testfunctions import BumpFunction

    out = Path(out_dir) if out_dir is not None else Path(config.output_dir or "run")
    out.mkdir(parents=True, exist_ok=True)
    (out / "snapshots").mkdir(exist_ok=True)
    (out / "measures").mkdir(exist_ok=True)

    grid = DomainGrid(config.grid.n1, config.grid.n2)
    binning = FundamentalDomainBinning(
        config.binning.n_x, config.binning.n_y, config.binning.y_max
    )
    reference = ms.reference_measure(binning)
    observables = [
        BumpFunction(tf["center"], tf["radii"], tf.get("amplitude", 1.0))
        for tf in config.test_functions
    ]
    rng = np.random.default_rng(config.seed)
    state0 = build_initial_state(grid, config.initial, rng)
    params = FlowParams(
        t_final=config.t_final,
        snapshot_interval=config.snapshot_interval,
        cfl_safety=config.cfl_safety,
        dt_floor=config.dt_floor,
        stall_threshold=config.stall_threshold,
    )
    aborted = False
    try:
        traj = run_flow(state0, params)
    except AbortedRunError as exc:
        traj = exc.trajectory
        aborted = True

    (out / "config.json").write_text(emit_config(config))

    reports, ergodic, mus, energies, dissipations = compute_snapshot_diagnostics(
        traj.snapshots, binning, reference, observables,
        config.density_threshold, config.jacobian_threshold,
    )

    columns = SERIES_BASE_COLUMNS + [
        f"ergodic_err_{j}" for j in range(len(observables))
    ]
    rows = []
    for k, snap in enumerate(traj.snapshots):
        r = traj.snapshot_rows[k]
        rep = reports[k]
        row = [
            snap.t, energies[k], dissipations[k],
            traj.cumulative_dissipation[r], traj.dt_used[r],
            rep.entropy, rep.rho_max, rep.tail_mass, rep.degenerate_fraction,
        ] + [ergodic[j][k] for j in range(len(observables))]
        rows.append(row)
    (out / "series.csv").write_text(_series_lines(columns, rows))

    step_lines = [f"# schema: {STEPS_SCHEMA}", "t,E,D,cumulative_D,dt"]
    for i in range(len(traj.times)):
        step_lines.append(",".join(_fmt(v) for v in (
            traj.times[i], traj.energy[i], traj.dissipation[i],
            traj.cumulative_dissipation[i], traj.dt_used[i],
        )))
    (out / "steps.csv").write_text("\n".join(step_lines) + "\n")

    from .flow import write_snapshot

    for k, snap in enumerate(traj.snapshots):
        write_snapshot(snap, out / "snapshots" / f"snapshot_{k:04d}.csv")
        ms.write_measure(mus[k], out / "measures" / f"measure_{k:04d}.csv")
    if len(mus) >= 2:
        ms.write_measure(ms.time_average(mus), out / "measures" / "time_average.csv")

    entropy_lines = [json.dumps({"schema": ms.ENTROPY_SCHEMA})]
    entropy_lines += [rep.to_json_line() for rep in reports]
    (out / "entropy.jsonl").write_text("\n".join(entropy_lines) + "\n")

    e0 = float(traj.energy[0])
    e_end = float(traj.energy[-1])
    cum = float(traj.cumulative_dissipation[-1])
    summary = {
        "schema": SUMMARY_SCHEMA,
        "grid": [config.grid.n1, config.grid.n2],
        "termination": "aborted" if aborted else traj.termination,
        "t_end": float(traj.times[-1]),
        "accepted_steps": int(traj.accepted_steps),
        "rejected_steps": int(traj.rejected_steps),
        "monotonicity_violations": int(traj.monotonicity_violations),
        "energy_initial": e0,
        "energy_final": e_end,
        "dissipation_integral": cum,
        "energy_identity_rel_gap": abs(e0 - e_end - cum) / e0 if e0 > 0 else 0.0,
        "final_entropy": reports[-1].entropy,
        "final_rho_max": reports[-1].rho_max,
        "final_tail_mass": reports[-1].tail_mass,
        "final_degenerate_fraction": reports[-1].degenerate_fraction,
        "final_ergodic_errors": [float(e[-1]) for e in ergodic],
        "snapshot_count": len(traj.snapshots),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(config, out, traj, columns, rows, summary, aborted)


def _read_series(path: Path):
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("# schema: "):
        raise ValueError(f"{path} lacks a schema header")
    columns = lines[1].split(",")
    rows = [[float(v) for v in line.split(",")] for line in lines[2:] if line]
    return columns, rows


def analyze_run(run_dir, tolerance: float = 1e-12) -> dict:
    """Recompute snapshot diagnostics of a stored run and audit the series.

    Recomputable columns must match the stored series within the tolerance;
    stepping-history columns (dt, cumulative_D) are echoed.  Returns the
    audit report dictionary (also written to analysis.json).
    """
    from . import measures as ms
    from .flow import read_snapshot
    from .hyperbolic import FundamentalDomainBinning
    from .testfunctions import BumpFunction

    run = Path(run_dir)
    config = parse_config((run / "config.json").read_text())
    stored_columns, stored_rows = _read_series(run / "series.csv")
    snap_paths = sorted((run / "snapshots").glob("snapshot_*.csv"))
    if len(snap_paths) != len(stored_rows):
        raise ValueError(
            f"{len(snap_paths)} snapshots vs {len(stored_rows)} series rows"
        )
    snapshots = [read_snapshot(p) for p in snap_paths]
    binning = FundamentalDomainBinning(
        config.binning.n_x, config.binning.n_y, config.binning.y_max
    )
    reference = ms.reference_measure(binning)
    observables = [
        BumpFunction(tf["center"], tf["radii"], tf.get("amplitude", 1.0))
        for tf in config.test_functions
    ]
    reports, ergodic, _, energies, dissipations = compute_snapshot_diagnostics(
        snapshots, binning, reference, observables,
        config.density_threshold, config.jacobian_threshold,
    )
    col_idx = {name: i for i, name in enumerate(stored_columns)}
    recomputed_rows = []
    for k, snap in enumerate(snapshots):
        rep = reports[k]
        row = [
            snap.t, energies[k], dissipations[k],
            stored_rows[k][col_idx["cumulative_D"]],  # echoed history
            stored_rows[k][col_idx["dt"]],
            rep.entropy, rep.rho_max, rep.tail_mass, rep.degenerate_fraction,
        ] + [ergodic[j][k] for j in range(len(observables))]
        recomputed_rows.append(row)
    (run / "series_recomputed.csv").write_text(
        _series_lines(stored_columns, recomputed_rows)
    )
    report = {"schema": "moduliflow-analysis-v1", "tolerance": tolerance,
              "columns": {}, "max_abs_diff": 0.0}
    for name, i in col_idx.items():
        diffs = [abs(stored_rows[k][i] - float(recomputed_rows[k][i]))
                 for k in range(len(stored_rows))]
        worst = float(max(diffs)) if diffs else 0.0
        audited = name in RECOMPUTABLE or name.startswith("ergodic_err_")
        report["columns"][name] = {
            "max_abs_diff": worst,
            "audited": audited,
            "within_tolerance": (worst <= tolerance) if audited else None,
        }
        if audited:
            report["max_abs_diff"] = max(report["max_abs_diff"], worst)
    report["pass"] = report["max_abs_diff"] <= tolerance
    (run / "analysis.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _sweep_worker(payload):
    name, config_dict, out_dir = payload
    result = run_experiment(config_from_dict(config_dict), out_dir)
    return name, result.aborted, result.summary["termination"]


def run_sweep(sweep_path, out_root, jobs: int = 1) -> list:
    """Run every variant of a sweep config under out_root/<variant name>."""
    raw = json.loads(Path(sweep_path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("sweep config must be a JSON object")
    _expect(raw, {"base", "variants"}, "")
    base = raw.get("base", {})
    variants = raw.get("variants")
    if not isinstance(variants, list) or not variants:
        raise ConfigError("must be a non-empty list", "variants")
    payloads = []
    seen = set()
    for i, var in enumerate(variants):
        if not isinstance(var, dict) or "name" not in var:
            raise ConfigError("each variant needs a 'name'", f"variants[{i}]")
        name = var["name"]
        if not isinstance(name, str) or not name or "/" in name or name in seen:
            raise ConfigError(f"bad or duplicate name {name!r}", f"variants[{i}].name")
        seen.add(name)
        overrides = {k: v for k, v in var.items() if k != "name"}
        merged = _deep_merge(base, overrides)
        config_from_dict(merged)  # validate up front so failures are early
        payloads.append((name, merged, str(Path(out_root) / name)))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_worker, payloads))
    return [_sweep_worker(p) for p in payloads]


def _apply_thread_cap():
    cap = os.environ.get("MODFLOW_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moduliflow",
        description="Harmonic-map gradient flow into the modular surface "
                    "with measure and entropy diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured flow")
    p_run.add_argument("--config", type=Path, help="JSON config file (defaults apply)")
    p_run.add_argument("--out", type=Path, help="output directory")
    p_run.add_argument("--seed", type=int, help="override the config seed")

    p_red = sub.add_parser("reduce", help="reduce a point to the fundamental domain")
    p_red.add_argument("x", type=float)
    p_red.add_argument("y", type=float)

    p_an = sub.add_parser("analyze", help="audit a stored run directory")
    p_an.add_argument("--run", type=Path, required=True)
    p_an.add_argument("--tolerance", type=float, default=1e-12)

    p_sw = sub.add_parser("sweep", help="run a grid of config variants")
    p_sw.add_argument("--config", type=Path, required=True, help="sweep JSON")
    p_sw.add_argument("--out", type=Path, required=True, help="output root")
    p_sw.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        try:
            config = (parse_config(args.config.read_text())
                      if args.config else FlowConfig())
            if args.seed is not None:
                config.seed = args.seed
            if args.out is None and config.output_dir is None:
                print("run: no output directory (--out or config output_dir)",
                      file=sys.stderr)
                return 2
            result = run_experiment(config, args.out)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        print(f"run written to {result.out_dir} "
              f"(termination: {result.summary['termination']}, "
              f"steps: {result.summary['accepted_steps']})")
        return 1 if result.aborted else 0
    if args.command == "reduce":
        from .hyperbolic import UpperHalfPoint, reduce_to_fundamental_domain

        point = UpperHalfPoint(args.x, args.y)
        reduced, gamma = reduce_to_fundamental_domain(point)
        print(f"z   = {point.x!r} + {point.y!r}i")
        print(f"z_F = {reduced.x!r} + {reduced.y!r}i")
        print(f"gamma = [[{gamma.a}, {gamma.b}], [{gamma.c}, {gamma.d}]]")
        return 0
    if args.command == "analyze":
        report = analyze_run(args.run, args.tolerance)
        for name, info in report["columns"].items():
            status = ("ok" if info["within_tolerance"]
                      else "MISMATCH") if info["audited"] else "echoed"
            print(f"{name}: max |diff| = {info['max_abs_diff']:.3e} [{status}]")
        print(f"analysis {'PASS' if report['pass'] else 'FAIL'} "
              f"(tolerance {report['tolerance']:g})")
        return 0 if report["pass"] else 2
    if args.command == "sweep":
        try:
            results = run_sweep(args.config, args.out, args.jobs)
        except ConfigError as exc:
            print(f"sweep config error: {exc}", file=sys.stderr)
            return 2
        failed = 0
        for name, aborted, termination in results:
            print(f"{name}: {termination}")
            failed += bool(aborted)
        return 1 if failed else 0
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
