"""Command-line front end.

Subcommands cover the whole pipeline: calibrate a privacy loss against
an impact cap, evaluate attacker impact, sweep parameter grids,
simulate a measurement tree, price the defense in forecast space,
benchmark manipulation cost, and generate synthetic inputs.

Every emitted file and JSON document carries a config hash derived
from the resolved parameters, so outputs can be traced back to the
exact invocation.  Exit status: 0 on success, 2 on usage or validation
errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass

from .adversary import AttackProfile
from .bench import run_bench
from .calibrate import DesignSpec, calibrate_epsilon
from .forecasting import ForecastConfig
from .gridsim import (
    Detector,
    detection_rate,
    impact_sweep,
    load_topology,
    run_query,
    sweep_to_csv,
)
from .laplace import PrivacyParams
from .qos import cost_analysis, dp_protect, inject_attack
from .seeds import derive_seed
from .series import export_csv, ingest_csv, resample, synth_pmu

OUTPUT_DIR_ENV = "DPGRID_OUTPUT_DIR"


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters of one CLI invocation."""

    command: str
    params: dict
    seed: int

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(
            {"command": self.command, "params": self.params, "seed": self.seed},
            sort_keys=True,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _resolve_out(path: str) -> str:
    if os.path.isabs(path):
        resolved = path
    else:
        resolved = os.path.join(os.environ.get(OUTPUT_DIR_ENV, "."), path)
    parent = os.path.dirname(resolved)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return resolved


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    print(text)
    if out:
        with open(_resolve_out(out), "w") as fh:
            fh.write(text + "\n")


def _float_list(text: str) -> list:
    values = [float(x) for x in text.split(",") if x.strip()]
    if not values:
        raise argparse.ArgumentTypeError(f"empty list: {text!r}")
    return values


def _series_assignment(text: str) -> tuple:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected NODE=PATH, got {text!r}")
    node, path = text.split("=", 1)
    return node, path


def _cmd_calibrate(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="calibrate",
        params={
            "sensitivity": args.sensitivity,
            "gamma": args.gamma,
            "theta": args.theta,
            "max_deviation": args.max_deviation,
        },
        seed=0,
    )
    spec = DesignSpec(
        sensitivity=args.sensitivity,
        gamma=args.gamma,
        theta=args.theta,
        max_deviation=args.max_deviation,
    )
    result = calibrate_epsilon(spec)
    payload = {**asdict(result), "config_hash": config.config_hash}
    _emit_json(payload, args.out)
    return 0


def _cmd_impact(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="impact",
        params={
            "epsilon": args.epsilon,
            "gamma": args.gamma,
            "sensitivity": args.sensitivity,
            "theta": args.theta,
        },
        seed=0,
    )
    base = PrivacyParams(sensitivity=args.sensitivity, epsilon=args.epsilon, theta=args.theta)
    profile = AttackProfile.solve(args.gamma, base)
    payload = {
        "epsilon": args.epsilon,
        "gamma": args.gamma,
        "sensitivity": args.sensitivity,
        "theta": args.theta,
        "scale": base.scale,
        "k1": profile.k1,
        "mu_star": profile.mu_star,
        "deviation": profile.mean_shift,
        "config_hash": config.config_hash,
    }
    _emit_json(payload, args.out)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="sweep",
        params={
            "epsilons": args.epsilons,
            "gammas": args.gammas,
            "sensitivities": args.sensitivities,
            "theta": args.theta,
        },
        seed=0,
    )
    points = impact_sweep(args.epsilons, args.gammas, args.sensitivities, theta=args.theta)
    out = _resolve_out(args.out)
    sweep_to_csv(points, out, metadata={"config_hash": config.config_hash})
    _emit_json({"rows": len(points), "out": out, "config_hash": config.config_hash}, None)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="simulate",
        params={
            "topology": os.path.basename(args.topology),
            "kind": args.kind,
            "tau": args.tau,
            "window": args.window,
            "synth_days": args.synth_days,
            "n_runs": args.n_runs,
        },
        seed=args.seed,
    )
    topology = load_topology(args.topology)
    series_map = {node: ingest_csv(path) for node, path in args.series or []}
    if args.synth_days:
        for pmu in topology.pmu_ids():
            if pmu not in series_map:
                series_map[pmu] = synth_pmu(
                    days=args.synth_days,
                    missing_fraction=args.synth_missing,
                    seed=derive_seed(args.seed, "synth", pmu),
                )
    detector = None
    if args.tau is not None:
        detector = Detector(tau=args.tau, window=args.window)
    trace = run_query(topology, series_map, args.kind, detector, seed=args.seed)
    payload = trace.summary()
    payload["config_hash"] = config.config_hash
    if detector is not None and args.n_runs:
        rates = detection_rate(topology, series_map, args.kind, detector, args.n_runs, args.seed)
        payload["detection"] = asdict(rates)
    if args.trace_out:
        trace_path = _resolve_out(args.trace_out)
        trace.to_csv(trace_path, metadata={"config_hash": config.config_hash})
        payload["trace_out"] = trace_path
    _emit_json(payload, args.out)
    return 0


def _cmd_qos(args: argparse.Namespace) -> int:
    if args.attack_start is None:
        args.attack_start = max(0, args.days - 78)
    if args.attack_end is None:
        args.attack_end = max(0, args.days - 48)
    config = RunConfig(
        command="qos",
        params={
            "epsilon": args.epsilon,
            "gamma": args.gamma,
            "sensitivity": args.sensitivity,
            "days": args.days,
            "attack_start": args.attack_start,
            "attack_end": args.attack_end,
            "season_length": args.season_length,
            "horizon": args.horizon,
        },
        seed=args.seed,
    )
    hourly = synth_pmu(days=args.days, seed=derive_seed(args.seed, "qos-series"))
    original = resample(hourly, "day", how="sum")  # daily energy totals
    params = PrivacyParams(sensitivity=args.sensitivity, epsilon=args.epsilon)
    dp_variant = dp_protect(original, params, seed=args.seed)
    profile = AttackProfile.solve(args.gamma, params)
    fdi_variant = inject_attack(
        dp_variant, profile, (args.attack_start, args.attack_end), seed=args.seed
    )
    cfg = ForecastConfig(horizon=args.horizon, season_length=args.season_length)
    report = cost_analysis(original, dp_variant, fdi_variant, cfg, epsilon=args.epsilon)
    payload = {**asdict(report), "config_hash": config.config_hash}
    if args.export_series:
        directory = _resolve_out(args.export_series)
        os.makedirs(directory, exist_ok=True)
        meta = {"config_hash": config.config_hash}
        for name, variant in (
            ("original", original), ("dp", dp_variant), ("fdi_dp", fdi_variant)
        ):
            export_csv(variant, os.path.join(directory, f"{name}.csv"), metadata=meta)
        payload["export_dir"] = directory
    _emit_json(payload, args.out)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="bench",
        params={
            "batch_size": args.batch_size,
            "reps": args.reps,
            "gamma": args.gamma,
            "epsilon": args.epsilon,
            "sensitivity": args.sensitivity,
        },
        seed=args.seed,
    )
    days = max(1, math.ceil(args.batch_size / 24))
    series = synth_pmu(days=days, seed=derive_seed(args.seed, "bench-batch"))
    batch = series.values[: args.batch_size]
    attacker = AttackProfile.solve(
        args.gamma, PrivacyParams(sensitivity=args.sensitivity, epsilon=args.epsilon)
    )
    result = run_bench(batch, reps=args.reps, seed=args.seed, attacker=attacker)
    payload = result.to_dict()
    payload["config_hash"] = config.config_hash
    _emit_json(payload, args.out)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="synth",
        params={
            "days": args.days,
            "noise_level": args.noise_level,
            "missing_fraction": args.missing_fraction,
            "start": args.start,
        },
        seed=args.seed,
    )
    series = synth_pmu(
        days=args.days,
        noise_level=args.noise_level,
        missing_fraction=args.missing_fraction,
        seed=args.seed,
        start=args.start,
    )
    out = _resolve_out(args.out)
    export_csv(series, out, metadata={"config_hash": config.config_hash})
    _emit_json({"rows": len(series), "out": out, "config_hash": config.config_hash}, None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpgrid",
        description="Laplace-noise defense design and evaluation for grid telemetry",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="privacy loss that caps stealthy impact")
    p.add_argument("--sensitivity", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--max-deviation", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("impact", help="best stealthy attack at fixed parameters")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--sensitivity", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_impact)

    p = sub.add_parser("sweep", help="impact over a parameter grid, to CSV")
    p.add_argument("--epsilons", type=_float_list, required=True)
    p.add_argument("--gammas", type=_float_list, required=True)
    p.add_argument("--sensitivities", type=_float_list, required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("simulate", help="run the measurement-tree simulation")
    p.add_argument("--topology", required=True)
    p.add_argument("--series", type=_series_assignment, action="append",
                   metavar="NODE=PATH")
    p.add_argument("--synth-days", type=int, default=None,
                   help="generate synthetic series for PMUs without one")
    p.add_argument("--synth-missing", type=float, default=0.0)
    p.add_argument("--kind", choices=["hourly_mean", "sum"], default="hourly_mean")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--window", type=int, default=24)
    p.add_argument("--n-runs", type=int, default=None,
                   help="also estimate detection rates over this many runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace-out", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("qos", help="forecast-space cost of the defense")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--sensitivity", type=float, required=True)
    p.add_argument("--days", type=int, default=1461)
    p.add_argument("--attack-start", type=int, default=None, help="daily index, inclusive")
    p.add_argument("--attack-end", type=int, default=None, help="daily index, exclusive")
    p.add_argument("--season-length", type=int, default=7)
    p.add_argument("--horizon", type=int, default=14)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--export-series", default=None, metavar="DIR")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_qos)

    p = sub.add_parser("bench", help="manipulation cost: clear vs AES-256-CBC")
    p.add_argument("--batch-size", type=int, default=10_000)
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--sensitivity", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("synth", help="write a synthetic measurement CSV")
    p.add_argument("--days", type=int, required=True)
    p.add_argument("--noise-level", type=float, default=0.05)
    p.add_argument("--missing-fraction", type=float, default=0.0)
    p.add_argument("--start", default="2015-01-01")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": str(exc), "command": args.command}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
