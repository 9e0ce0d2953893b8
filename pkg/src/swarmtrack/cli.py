"""Command-line front end: run episodes, sweeps, stability checks, calibration.

Subcommands:
    run              one episode per scheme, writing metrics and trajectories
    sweep            axis sweep over M, N_t or power_dbw with paired seeds
    check-stability  fraction of channel draws passing the stability test
    calibrate-gamma  match mean transmit power to a dBW budget

All outputs are deterministic functions of the config file plus overrides:
reruns produce byte-identical CSV/JSON files.

Exit codes: 0 success, 1 usage error, 2 numeric failure, 3 I/O error.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, baselines, channel, policy, sim, stability, swarm

_METRICS_SCHEMA = "swarmtrack.metrics.v1"
_TRAJECTORY_SCHEMA = "swarmtrack.cost_trajectory.v1"
_SWEEP_SCHEMA = "swarmtrack.sweep.v1"
_AGGREGATE_SCHEMA = "swarmtrack.aggregate.v1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, schema: str, header, rows):
    lines = [f"# schema: {schema}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, doc: dict):
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _load_config(path: str, overrides) -> sim.SimConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise UsageError(f"cannot read config {path!r}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise UsageError(f"config {path!r} is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise UsageError(f"config {path!r} must hold a JSON object")
    for item in overrides or []:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            doc[key] = json.loads(raw)
        except json.JSONDecodeError:
            doc[key] = raw
    try:
        return sim.SimConfig.from_dict(doc)
    except (TypeError, ValueError) as err:
        raise UsageError(f"bad config: {err}") from err


def _topology_reference(config: sim.SimConfig) -> dict:
    if config.topology_path:
        return {"kind": "file", "path": config.topology_path}
    return {"kind": "ring", "seed": config.seed}


def cmd_run(config: sim.SimConfig, out_dir: Path) -> int:
    topology = sim.build_topology(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_rows = []
    trajectory_rows = []
    for scheme in sim.SCHEMES:
        metrics = sim.run_episode(replace(config, scheme=scheme), topology)
        metrics_rows.append([scheme, metrics.avg_cost, metrics.avg_tx_power,
                             metrics.comm_rate, metrics.diverged,
                             metrics.n_slots, metrics.gamma])
        for t, cost in enumerate(metrics.cost_trajectory):
            trajectory_rows.append([scheme, t, float(cost)])
    _write_csv(out_dir / "metrics.csv", _METRICS_SCHEMA,
               ["scheme", "avg_cost", "avg_tx_power", "comm_rate", "diverged",
                "n_slots", "gamma"], metrics_rows)
    _write_csv(out_dir / "cost_trajectory.csv", _TRAJECTORY_SCHEMA,
               ["scheme", "t", "cost"], trajectory_rows)
    _write_json(out_dir / "manifest.json", {
        "tool": "swarmtrack",
        "version": __version__,
        "command": "run",
        "config": config.to_dict(),
        "topology": _topology_reference(config),
        "seeds": [config.seed],
        "outputs": ["metrics.csv", "cost_trajectory.csv", "manifest.json"],
    })
    return 0


def cmd_sweep(config: sim.SimConfig, axis: str, values, n_seeds: int,
              out_dir: Path) -> int:
    seeds = [config.seed + i for i in range(n_seeds)]
    result = sim.run_sweep(config, axis, values, seeds)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "sweep.csv", _SWEEP_SCHEMA,
               ["scheme", "axis", "value", "seed", "avg_cost", "avg_tx_power",
                "comm_rate", "diverged", "gamma"],
               [[r["scheme"], r["axis"], r["value"], r["seed"], r["avg_cost"],
                 r["avg_tx_power"], r["comm_rate"], r["diverged"], r["gamma"]]
                for r in result["rows"]])
    _write_csv(out_dir / "aggregate.csv", _AGGREGATE_SCHEMA,
               ["scheme", "axis", "value", "n_seeds", "mean_avg_cost",
                "stderr_avg_cost", "mean_avg_tx_power", "mean_comm_rate",
                "n_diverged", "mean_gamma"],
               [[a["scheme"], a["axis"], a["value"], a["n_seeds"],
                 a["mean_avg_cost"], a["stderr_avg_cost"],
                 a["mean_avg_tx_power"], a["mean_comm_rate"],
                 a["n_diverged"], a["mean_gamma"]]
                for a in result["aggregates"]])
    _write_json(out_dir / "manifest.json", {
        "tool": "swarmtrack",
        "version": __version__,
        "command": "sweep",
        "config": config.to_dict(),
        "axis": axis,
        "values": list(values),
        "seeds": seeds,
        "outputs": ["sweep.csv", "aggregate.csv", "manifest.json"],
    })
    return 0


def cmd_check_stability(config: sim.SimConfig, n_draws: int, out_dir: Path) -> int:
    topology = sim.build_topology(config)
    constants = policy.compute_drift_constants(topology.a_global,
                                               topology.g_target)
    draws = [channel.draw_channels(sim._slot_rng(config.seed, 1, t),
                                   topology.m_agents, topology.n_rx,
                                   topology.n_tx)
             for t in range(n_draws)]
    report = stability.stability_report(topology, constants, draws)
    report["config"] = config.to_dict()
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "stability.json", report)
    return 0


def cmd_calibrate_gamma(config: sim.SimConfig, budget_dbw: float,
                        n_probe_seeds: int, out_dir: Path) -> int:
    topology = sim.build_topology(config)
    gamma = sim.calibrate_gamma(config, topology, budget_dbw,
                                n_probe_seeds=n_probe_seeds)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "gamma.json", {
        "gamma": gamma,
        "power_budget_dbw": budget_dbw,
        "n_probe_seeds": n_probe_seeds,
        "config": config.to_dict(),
    })
    return 0


def _parse_values(axis: str, raw: str):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise UsageError("--values must list at least one value")
    if axis == "power_dbw":
        return [float(p) for p in parts]
    return [int(p) for p in parts]


def build_parser() -> "_Parser":
    parser = _Parser(prog="swarmtrack",
                     description="Semantic communication and tracking-control "
                                 "swarm simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")

    p_run = sub.add_parser("run", help="run one episode per scheme")
    common(p_run)

    p_sweep = sub.add_parser("sweep", help="sweep one experiment axis")
    common(p_sweep)
    p_sweep.add_argument("--axis", required=True,
                         help=f"axis name, one of {', '.join(sim.AXES)}")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values")
    p_sweep.add_argument("--seeds", type=int, default=5,
                         help="number of consecutive seeds")

    p_stab = sub.add_parser("check-stability",
                            help="stability condition over channel draws")
    common(p_stab)
    p_stab.add_argument("--draws", type=int, default=100,
                        help="number of channel draws")

    p_cal = sub.add_parser("calibrate-gamma",
                           help="match mean transmit power to a budget")
    common(p_cal)
    p_cal.add_argument("--budget-dbw", type=float, default=8.0,
                       help="power budget in dBW")
    p_cal.add_argument("--probe-seeds", type=int, default=3,
                       help="number of probe seeds")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(args.config, args.set)
        out_dir = Path(args.out)
        if args.command == "run":
            return cmd_run(config, out_dir)
        if args.command == "sweep":
            if args.axis not in sim.AXES:
                raise UsageError(f"unknown axis {args.axis!r}; "
                                 f"valid axes: {', '.join(sim.AXES)}")
            values = _parse_values(args.axis, args.values)
            return cmd_sweep(config, args.axis, values, args.seeds, out_dir)
        if args.command == "check-stability":
            return cmd_check_stability(config, args.draws, out_dir)
        if args.command == "calibrate-gamma":
            return cmd_calibrate_gamma(config, args.budget_dbw,
                                       args.probe_seeds, out_dir)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (baselines.DareConvergenceError, sim.CalibrationError,
            np.linalg.LinAlgError, FloatingPointError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"i/o failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
