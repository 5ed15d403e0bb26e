"""Command-line entry point: ``sync-arena {simulate,compare,verify,sweep}``.

Exit status: 0 on success, 1 when a theorem-guaranteed check fails,
2 for bad arguments or configuration, 3 when integration fails.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .diagnostics import DEFAULT_EPS_FREQ, DEFAULT_EPS_PHASE, DEFAULT_HOLD_WINDOW
from .experiments import (
    SWEEP_PARAMETERS,
    ComparisonResult,
    RunResult,
    Scenario,
    ScenarioError,
    compare_models,
    parse_number,
    resolve_scenario,
    run_scenario,
    sweep,
)
from .integrator import IntegrationError, IntegratorConfig
from .io import (
    write_comparison_csv,
    write_diameter_svg,
    write_json,
    write_sweep_csv,
    write_trajectory_csv,
)
from .model import CouplingKind

log = logging.getLogger("sync_arena")

EXIT_OK, EXIT_THEOREM, EXIT_CONFIG, EXIT_INTEGRATION = 0, 1, 2, 3
OUT_ENV = "SYNC_ARENA_OUT"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: Scenario
    integrator: IntegratorConfig
    eps_phase: float = DEFAULT_EPS_PHASE
    eps_freq: float = DEFAULT_EPS_FREQ
    hold_window: float = DEFAULT_HOLD_WINDOW
    out: Path = Path("out")
    outputs: dict = field(default_factory=lambda: {"csv": True, "json": True, "svg": True})

    @property
    def detect_kwargs(self) -> dict:
        return {"eps_phase": self.eps_phase, "eps_freq": self.eps_freq, "hold_window": self.hold_window}

    def echo(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "integrator": self.integrator.to_dict(),
            "detection": self.detect_kwargs,
        }


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return data


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults < config file < command-line flags."""
    file_cfg = _load_config_file(args.config) if args.config else {}
    integ = dict(file_cfg.get("integrator", {}) or {})
    detect = dict(file_cfg.get("detection", {}) or {})
    outputs = {"csv": True, "json": True, "svg": True}
    outputs.update(file_cfg.get("outputs", {}) or {})

    ref = args.scenario or file_cfg.get("scenario")
    if ref is None:
        raise ConfigError("no scenario given (use --scenario or a config file)")
    scenario = Scenario.from_dict(ref) if isinstance(ref, dict) else resolve_scenario(str(ref))
    if args.seed is not None:
        scenario = scenario.with_updates(seed=args.seed)
    if getattr(args, "delta", None) is not None:
        scenario = scenario.with_updates(delta=args.delta)

    def pick(flag, key, default, source):
        if flag is not None:
            return flag
        if key in source:
            return parse_number(source[key])
        return default

    t_end = pick(args.t_end, "t_end", scenario.t_end, integ)
    scenario = scenario.with_updates(t_end=t_end)
    defaults = IntegratorConfig(t_end=t_end)
    integrator = IntegratorConfig(
        t_end=t_end,
        relative_tolerance=pick(args.rtol, "rtol", defaults.relative_tolerance, integ),
        absolute_tolerance=pick(args.atol, "atol", defaults.absolute_tolerance, integ),
        max_step=pick(None, "max_step", defaults.max_step, integ),
        sample_interval=pick(None, "sample_interval", defaults.sample_interval, integ),
    )
    if args.no_svg:
        outputs["svg"] = False
    out = args.out or file_cfg.get("out") or os.environ.get(OUT_ENV) or "out"
    return RunConfig(
        scenario=scenario,
        integrator=integrator,
        eps_phase=pick(args.eps_phase, "eps_phase", DEFAULT_EPS_PHASE, detect),
        eps_freq=pick(args.eps_freq, "eps_freq", DEFAULT_EPS_FREQ, detect),
        hold_window=pick(None, "hold_window", DEFAULT_HOLD_WINDOW, detect),
        out=Path(out),
        outputs=outputs,
    )


def _run_payload(run: RunResult) -> dict:
    return {
        "model": run.model.value,
        "report": run.report.to_dict(),
        "hypotheses": {name: v.to_dict() for name, v in run.verdicts.items()},
        "bounds": run.bounds,
        "checks": [c.to_dict() for c in run.checks],
        "solver": {k: v for k, v in run.trajectory.metadata.items() if k != "config"},
    }


def _warn_observations(checks) -> None:
    for c in checks:
        if c.basis != "theorem" and c.passed is False:
            log.warning("observation not reproduced: %s (measured %r, expected %r)",
                        c.name, c.measured, c.predicted)


def _prepare_out(cfg: RunConfig) -> Path:
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {cfg.out}: {exc}") from None
    return cfg.out


def cmd_simulate(args) -> int:
    cfg = build_run_config(args)
    run = run_scenario(cfg.scenario, cfg.integrator, model=args.model, **cfg.detect_kwargs)
    out = _prepare_out(cfg)
    if cfg.outputs.get("csv"):
        write_trajectory_csv(out / "trajectory.csv", run.trajectory)
    if cfg.outputs.get("json"):
        write_json(out / "report.json", {"command": "simulate", **cfg.echo(), **_run_payload(run)})
    if cfg.outputs.get("svg"):
        write_diameter_svg(out / "diameters.svg", {run.model.value: run.trajectory}, cfg.scenario.name)
    _print_summary(run)
    _warn_observations(run.checks)
    return EXIT_THEOREM if run.theorem_failures else EXIT_OK


def _compare(cfg: RunConfig) -> ComparisonResult:
    return compare_models(cfg.scenario, cfg.integrator, **cfg.detect_kwargs)


def _write_comparison(cfg: RunConfig, res: ComparisonResult, command: str) -> None:
    out = _prepare_out(cfg)
    trajs = {k.value: r.trajectory for k, r in res.runs.items()}
    if cfg.outputs.get("csv"):
        write_comparison_csv(out / "trajectory.csv", trajs)
    if cfg.outputs.get("json"):
        write_json(out / "report.json", {
            "command": command,
            **cfg.echo(),
            "models": {k.value: _run_payload(r) for k, r in res.runs.items()},
            "comparison_checks": [c.to_dict() for c in res.checks],
        })
    if cfg.outputs.get("svg"):
        write_diameter_svg(out / "diameters.svg", trajs, cfg.scenario.name)


def cmd_compare(args) -> int:
    cfg = build_run_config(args)
    res = _compare(cfg)
    _write_comparison(cfg, res, "compare")
    for run in res.runs.values():
        _print_summary(run)
    _warn_observations(res.all_checks)
    failed = [c for c in res.all_checks if c.basis == "theorem" and c.passed is False]
    return EXIT_THEOREM if failed else EXIT_OK


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, dict):
        return ",".join(f"{k}={_fmt(v)}" for k, v in value.items())
    return str(value)


def cmd_verify(args) -> int:
    cfg = build_run_config(args)
    res = _compare(cfg) if len(cfg.scenario.models) > 1 else None
    runs = list(res.runs.values()) if res else [
        run_scenario(cfg.scenario, cfg.integrator, **cfg.detect_kwargs)]
    rows = []
    for run in runs:
        for name, verdict in run.verdicts.items():
            margins = ", ".join(f"{c.name}: {c.margin:+.4g}" for c in verdict.conditions)
            rows.append((run.model.value, f"hypotheses {name}", "info",
                         "satisfied" if verdict.holds else "not satisfied", margins, ""))
        for c in run.checks:
            rows.append((run.model.value, c.name, c.basis, _status(c.passed),
                         _fmt(c.measured), _fmt(c.predicted)))
    for c in (res.checks if res else []):
        rows.append(("both", c.name, c.basis, _status(c.passed), _fmt(c.measured), _fmt(c.predicted)))

    header = ("model", "check", "basis", "status", "measured", "predicted")
    widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(len(header))]
    line = "  ".join("{:<%d}" % w for w in widths)
    print(line.format(*header))
    for r in rows:
        print(line.format(*r))

    if res is not None:
        _write_comparison(cfg, res, "verify")
    else:
        out = _prepare_out(cfg)
        if cfg.outputs.get("json"):
            write_json(out / "report.json", {"command": "verify", **cfg.echo(), **_run_payload(runs[0])})
        if cfg.outputs.get("csv"):
            write_trajectory_csv(out / "trajectory.csv", runs[0].trajectory)
        if cfg.outputs.get("svg"):
            write_diameter_svg(out / "diameters.svg", {runs[0].model.value: runs[0].trajectory},
                               cfg.scenario.name)
    all_checks = [c for run in runs for c in run.checks] + (res.checks if res else [])
    _warn_observations(all_checks)
    return EXIT_THEOREM if any(c.basis == "theorem" and c.passed is False for c in all_checks) else EXIT_OK


def _status(passed) -> str:
    return {True: "PASS", False: "FAIL", None: "n/a"}[passed]


def cmd_sweep(args) -> int:
    cfg = build_run_config(args)
    try:
        values = [parse_number(v) for v in args.values.split(",") if v.strip()]
    except ScenarioError as exc:
        raise ConfigError(f"bad --values: {exc}") from None
    points = sweep(cfg.scenario, args.param, values, cfg.integrator, **cfg.detect_kwargs)
    rows = []
    for p in points:
        r = p.report
        rows.append({
            "value": p.value,
            "phase_synced": None if r is None else r.phase_synced,
            "freq_synced": None if r is None else r.freq_synced,
            "sync_frequency": None if r is None else r.sync_frequency,
            "phase_sync_time": None if r is None else r.phase_sync_time,
            "freq_sync_time": None if r is None else r.freq_sync_time,
            "final_velocity_diameter": None if r is None else r.final_velocity_diameter,
            "error": p.error,
        })
        print(f"{args.param}={p.value:g}: "
              + (f"error: {p.error}" if r is None else
                 f"freq_sync_time={_fmt(r.freq_sync_time)} sync_frequency={_fmt(r.sync_frequency)}"))
    out = _prepare_out(cfg)
    write_sweep_csv(out / "sweep.csv", rows)
    return EXIT_OK


def _print_summary(run: RunResult) -> None:
    r = run.report
    print(f"[{run.scenario.name} / {run.model.value}] phase_sync_time={_fmt(r.phase_sync_time)} "
          f"freq_sync_time={_fmt(r.freq_sync_time)} sync_frequency={_fmt(r.sync_frequency)} "
          f"final D(theta)={r.final_phase_diameter:.6g} circular={r.final_circular_diameter:.3g}")


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sync-arena", description="Strong-competition Kuramoto simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="catalog name or path to a scenario YAML file")
    common.add_argument("--config", help="run configuration YAML file")
    common.add_argument("--seed", type=int)
    common.add_argument("--rtol", type=_positive)
    common.add_argument("--atol", type=_positive)
    common.add_argument("--t-end", dest="t_end", type=_positive)
    common.add_argument("--eps-phase", dest="eps_phase", type=_positive)
    common.add_argument("--eps-freq", dest="eps_freq", type=_positive)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    common.add_argument("--no-svg", dest="no_svg", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="run one scenario")
    p.add_argument("--model", choices=[k.value for k in CouplingKind])
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("compare", parents=[common], help="run both couplings on identical data")
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("verify", parents=[common], help="check simulations against the analytic bounds")
    p.add_argument("--delta", type=_positive, help="sector half-width used for the bounds")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("sweep", parents=[common], help="vary one parameter")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command == "sweep" and args.scenario is None and args.config is None:
        args.scenario = "nonidentical-base"
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, ValueError) as exc:
        print(f"sync-arena: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"sync-arena: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
