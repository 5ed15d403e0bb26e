"""Scenario catalog, seeded initial data, model comparison and sweeps.

Random initial data follows a fixed protocol: draw ``n`` uniform(0, 1)
values, then map them affinely so the minimum is 0 and the maximum is the
requested diameter (optionally translated so the maximum lands on a given
value).

The generator is numpy's PCG64 seeded through ``SeedSequence(seed,
spawn_key=(stream,))`` and sampled with ``Generator.random``; phases use
stream 0 and natural frequencies stream 1. That bit stream is stable across
numpy releases and pinned by regression tests.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .diagnostics import (
    DEFAULT_EPS_FREQ,
    DEFAULT_EPS_PHASE,
    DEFAULT_HOLD_WINDOW,
    ORDER_TOLERANCE,
    SyncReport,
    check_well_ordering,
    circular_diameters,
    detect_sync,
    diameter,
    phase_diameters,
    velocity_diameters,
)
from .integrator import IntegratorConfig, Trajectory, integrate_adaptive
from .model import CouplingKind, CouplingSpec
from .theory import (
    HypothesisVerdict,
    Theorem,
    check_hypotheses,
    predicted_sync_frequency,
    trapping_time,
    well_ordering_time,
)

PRNG_NAME = "numpy-pcg64-seedsequence-v1"
THETA_STREAM = 0
OMEGA_STREAM = 1

TRAPPING_SLACK = 1e-4
FREQUENCY_TOLERANCE = 1e-3
CONSERVATION_TOLERANCE = 1e-8
# tolerances for confirming an apparent ordering violation
REFINE_RTOL = 1e-10
REFINE_ATOL = 1e-12


class ScenarioError(ValueError):
    pass


def generate_initial_conditions(seed: int, n: int, target_diameter: float,
                                shift_max_to: float | None = None, stream: int = 0) -> np.ndarray:
    """Seeded uniform draws rescaled to span exactly ``[0, target_diameter]``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if target_diameter < 0:
        raise ValueError("target_diameter must be non-negative")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))
    u = rng.random(n)
    lo, hi = u.min(), u.max()
    if hi == lo or target_diameter == 0:
        x = np.zeros(n)
    else:
        x = (u - lo) / (hi - lo) * target_diameter
        x[np.argmax(u)] = target_diameter
    if shift_max_to is not None:
        x = x + (shift_max_to - x.max())
    return x


# small arithmetic evaluator so scenario files can say "5*pi/6 - 1e-3" or "1/sin(pi/6)"
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sin": math.sin, "cos": math.cos, "sqrt": math.sqrt}


def parse_number(value: Any) -> float:
    if isinstance(value, bool):
        raise ScenarioError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ScenarioError(f"expected a number, got {value!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ScenarioError(f"unsupported expression: {value!r}")

    try:
        return ev(ast.parse(value.strip(), mode="eval"))
    except SyntaxError:
        raise ScenarioError(f"cannot parse number: {value!r}") from None


@dataclass(frozen=True)
class VectorSpec:
    """How a phase or frequency vector is produced.

    ``mode`` is ``explicit`` (``values``), ``random`` (``diameter``, optional
    ``shift_max_to``) or ``equally-spaced`` (θ_i = 2πi/N, i = 0..N-1).
    """

    mode: str
    values: tuple[float, ...] = ()
    diameter: float = 0.0
    shift_max_to: float | None = None

    @classmethod
    def from_obj(cls, obj) -> "VectorSpec":
        if isinstance(obj, VectorSpec):
            return obj
        if isinstance(obj, (list, tuple)):
            return cls("explicit", tuple(parse_number(v) for v in obj))
        if isinstance(obj, dict):
            if "values" in obj:
                return cls("explicit", tuple(parse_number(v) for v in obj["values"]))
            if obj.get("mode") == "equally-spaced" or obj.get("equally_spaced"):
                return cls("equally-spaced")
            if "diameter" in obj:
                shift = obj.get("shift_max_to")
                return cls("random", diameter=parse_number(obj["diameter"]),
                           shift_max_to=None if shift is None else parse_number(shift))
        raise ScenarioError(f"cannot interpret vector spec {obj!r}")

    def build(self, n: int, seed: int, stream: int) -> np.ndarray:
        if self.mode == "explicit":
            if len(self.values) != n:
                raise ScenarioError(f"explicit vector has {len(self.values)} entries, expected {n}")
            return np.array(self.values, dtype=float)
        if self.mode == "equally-spaced":
            return 2 * np.pi * np.arange(n) / n
        return generate_initial_conditions(seed, n, self.diameter, self.shift_max_to, stream)

    def to_obj(self):
        if self.mode == "explicit":
            return {"values": list(self.values)}
        if self.mode == "equally-spaced":
            return {"mode": "equally-spaced"}
        out = {"diameter": self.diameter}
        if self.shift_max_to is not None:
            out["shift_max_to"] = self.shift_max_to
        return out


@dataclass(frozen=True)
class Expectation:
    """A claim to check against a run.

    ``basis`` is ``theorem`` for guaranteed outcomes and ``observed`` for
    outcomes only reported empirically; only the former may fail a build.
    ``op`` is one of ``is``, ``approx`` (within ``tol``), ``lt`` or
    ``faster_than`` (sync time strictly earlier than model ``value``'s;
    an absent time counts as never).
    """

    quantity: str
    op: str
    value: Any
    model: CouplingKind | None = None
    tol: float = 0.0
    basis: str = "observed"
    source: str = ""

    @classmethod
    def from_obj(cls, obj: dict) -> "Expectation":
        value = obj["value"]
        if obj["op"] == "faster_than":
            value = CouplingKind.parse(value)
        elif not isinstance(value, bool):
            value = parse_number(value)
        model = obj.get("model")
        return cls(
            quantity=obj["quantity"], op=obj["op"], value=value,
            model=None if model is None else CouplingKind.parse(model),
            tol=parse_number(obj.get("tol", 0.0)), basis=obj.get("basis", "observed"),
            source=obj.get("source", ""),
        )

    def to_obj(self) -> dict:
        out = {"quantity": self.quantity, "op": self.op,
               "value": self.value.value if isinstance(self.value, CouplingKind) else self.value,
               "basis": self.basis}
        if self.model is not None:
            out["model"] = self.model.value
        if self.tol:
            out["tol"] = self.tol
        if self.source:
            out["source"] = self.source
        return out


@dataclass(frozen=True)
class Scenario:
    name: str
    n: int
    k: float
    theta0: VectorSpec
    omega: VectorSpec
    models: tuple[CouplingKind, ...] = (CouplingKind.STRONG_COMPETITION,)
    seed: int = 1
    t_end: float = 200.0
    delta: float | None = None
    description: str = ""
    expectations: tuple[Expectation, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ScenarioError("n must be at least 1")
        if not self.k > 0:
            raise ScenarioError("k must be positive")
        if not self.models:
            raise ScenarioError("at least one model is required")
        if not self.t_end > 0:
            raise ScenarioError("t_end must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            models = d.get("models", ["strong-competition"])
            if isinstance(models, str):
                models = [models]
            delta = d.get("delta")
            return cls(
                name=str(d["name"]),
                n=int(d["n"]),
                k=parse_number(d["k"]),
                theta0=VectorSpec.from_obj(d["theta0"]),
                omega=VectorSpec.from_obj(d.get("omega", {"diameter": 0})),
                models=tuple(CouplingKind.parse(m) for m in models),
                seed=int(d.get("seed", 1)),
                t_end=parse_number(d.get("t_end", 200.0)),
                delta=None if delta is None else parse_number(delta),
                description=str(d.get("description", "")).strip(),
                expectations=tuple(Expectation.from_obj(e) for e in d.get("expectations", [])),
            )
        except KeyError as exc:
            raise ScenarioError(f"scenario is missing field {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "n": self.n,
            "models": [m.value for m in self.models],
            "k": self.k,
            "seed": self.seed,
            "t_end": self.t_end,
            "delta": self.delta,
            "theta0": self.theta0.to_obj(),
            "omega": self.omega.to_obj(),
            "prng": PRNG_NAME,
            "expectations": [e.to_obj() for e in self.expectations],
        }

    def initial_conditions(self) -> tuple[np.ndarray, np.ndarray]:
        theta0 = self.theta0.build(self.n, self.seed, THETA_STREAM)
        omega = self.omega.build(self.n, self.seed, OMEGA_STREAM)
        return theta0, omega

    def with_updates(self, **changes) -> "Scenario":
        return replace(self, **changes)


def load_scenario_file(path: str | Path) -> Scenario:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: expected a mapping at top level")
    return Scenario.from_dict(data)


def catalog() -> dict[str, Scenario]:
    """Scenarios shipped with the package, keyed by name."""
    out = {}
    for entry in sorted(resources.files("sync_arena").joinpath("scenarios").iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".yaml"):
            data = yaml.safe_load(entry.read_text())
            sc = Scenario.from_dict(data)
            out[sc.name] = sc
    return out


def resolve_scenario(ref: str) -> Scenario:
    """Catalog name or path to a scenario file."""
    cat = catalog()
    if ref in cat:
        return cat[ref]
    path = Path(ref)
    if path.is_file():
        return load_scenario_file(path)
    raise ScenarioError(f"unknown scenario {ref!r}; catalog has: {', '.join(cat)}")


@dataclass(frozen=True)
class Check:
    name: str
    basis: str
    passed: bool | None  # None: not applicable within the simulated span
    measured: Any = None
    predicted: Any = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "basis": self.basis, "passed": self.passed,
                "measured": self.measured, "predicted": self.predicted, "detail": self.detail}


@dataclass
class RunResult:
    scenario: Scenario
    model: CouplingKind
    trajectory: Trajectory
    report: SyncReport
    verdicts: dict[str, HypothesisVerdict] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    bounds: dict[str, float] = field(default_factory=dict)

    @property
    def theorem_failures(self) -> list[Check]:
        return [c for c in self.checks if c.basis == "theorem" and c.passed is False]

    @property
    def observation_failures(self) -> list[Check]:
        return [c for c in self.checks if c.basis != "theorem" and c.passed is False]


@dataclass
class ComparisonResult:
    scenario: Scenario
    runs: dict[CouplingKind, RunResult]
    checks: list[Check] = field(default_factory=list)

    def diameter_series(self) -> dict[str, dict[str, np.ndarray]]:
        return {
            kind.value: {
                "t": run.trajectory.times,
                "phase": phase_diameters(run.trajectory),
                "velocity": velocity_diameters(run.trajectory),
            }
            for kind, run in self.runs.items()
        }

    @property
    def all_checks(self) -> list[Check]:
        out = [c for run in self.runs.values() for c in run.checks]
        return out + self.checks


def _config_for(scenario: Scenario, config: IntegratorConfig | None) -> IntegratorConfig:
    if config is None:
        return IntegratorConfig(t_end=scenario.t_end)
    return config


def _quantity(report: SyncReport, name: str):
    if name == "phase_sync":
        return report.phase_synced
    if name == "freq_sync":
        return report.freq_synced
    if hasattr(report, name):
        return getattr(report, name)
    raise ScenarioError(f"unknown expectation quantity {name!r}")


def _evaluate(exp: Expectation, report: SyncReport, others: dict[CouplingKind, SyncReport]) -> Check:
    measured = _quantity(report, exp.quantity)
    label = f"{exp.quantity} {exp.op} {exp.value.value if isinstance(exp.value, CouplingKind) else exp.value}"
    if exp.op == "is":
        passed = measured == exp.value
    elif exp.op == "approx":
        passed = measured is not None and abs(measured - exp.value) <= exp.tol
    elif exp.op == "lt":
        passed = measured is not None and measured < exp.value
    elif exp.op == "faster_than":
        other = others.get(exp.value)
        if other is None:
            return Check(label, exp.basis, None, measured, None, "comparison model not run")
        theirs = _quantity(other, exp.quantity)
        passed = measured is not None and (theirs is None or measured < theirs)
        return Check(label, exp.basis, bool(passed), measured, theirs, exp.source)
    else:
        raise ScenarioError(f"unknown expectation op {exp.op!r}")
    return Check(label, exp.basis, bool(passed), measured, exp.value, exp.source)


def _verdicts(scenario: Scenario, theta0, omega) -> dict[str, HypothesisVerdict]:
    out = {Theorem.THM1.value: check_hypotheses(Theorem.THM1, scenario.k, None, omega, theta0)}
    if scenario.delta is not None:
        for th in (Theorem.TRAPPING, Theorem.THM2, Theorem.CLASSICAL_SUFFICIENT):
            out[th.value] = check_hypotheses(th, scenario.k, scenario.delta, omega, theta0)
    return out


def _still_decreasing(times, series, window: float) -> bool:
    """True when ``series`` fell over the final ``window``: a limit not yet reached."""
    start = int(np.searchsorted(times, times[-1] - window))
    return bool(series[start] - series[-1] > 1e-12)


def _theorem_checks(run: RunResult, config: IntegratorConfig, theta0, omega) -> None:
    """Append the checks implied by whichever hypotheses hold."""
    sc, traj, report = run.scenario, run.trajectory, run.report
    v = run.verdicts
    t_end = traj.t_end

    if run.model is CouplingKind.CLASSICAL:
        drift = float(np.abs(traj.velocities.sum(axis=1) - omega.sum()).max())
        run.checks.append(Check("classical velocity sum equals sum of omega", "theorem",
                                drift <= CONSERVATION_TOLERANCE, drift, 0.0))
        if report.freq_synced:
            pred = predicted_sync_frequency(CouplingKind.CLASSICAL, omega)
            run.checks.append(Check("classical sync frequency equals mean omega", "theorem",
                                    abs(report.sync_frequency - pred) <= FREQUENCY_TOLERANCE,
                                    report.sync_frequency, pred))
        cs = v.get(Theorem.CLASSICAL_SUFFICIENT.value)
        if cs is not None and cs.holds:
            run.checks.append(Check("classical sufficient coupling gives frequency sync", "theorem",
                                    report.freq_synced, report.freq_sync_time, "present"))
        return

    if v[Theorem.THM1.value].holds:
        passed = report.final_circular_diameter < report.eps_phase
        detail = ""
        if not passed and _still_decreasing(traj.times, circular_diameters(traj), report.hold_window):
            passed, detail = None, "still contracting at end of span"
        run.checks.append(Check("identical oscillators reach phase sync", "theorem", passed,
                                report.final_circular_diameter, f"< {report.eps_phase}", detail))

    trap = v.get(Theorem.TRAPPING.value)
    if trap is not None and trap.holds:
        t0 = trapping_time(sc.k, sc.delta, diameter(omega))
        run.bounds["T0"] = t0
        if t0 > t_end:
            run.checks.append(Check("sector trapping after T0", "theorem", None, None, t0,
                                    "T0 beyond simulated span"))
        else:
            mask = traj.times >= t0
            worst = float(phase_diameters(traj)[mask].max())
            run.checks.append(Check("sector trapping after T0", "theorem",
                                    worst <= sc.delta + TRAPPING_SLACK, worst, sc.delta,
                                    f"T0={t0:.6g}"))

    thm2 = v.get(Theorem.THM2.value)
    if thm2 is not None and thm2.holds and diameter(omega) > 0:
        pred = predicted_sync_frequency(CouplingKind.STRONG_COMPETITION, omega)
        measured = report.sync_frequency
        passed = measured is not None and abs(measured - pred) <= FREQUENCY_TOLERANCE
        detail = ""
        if measured is None and _still_decreasing(traj.times, velocity_diameters(traj), report.hold_window):
            passed, detail = None, "frequencies still converging at end of span"
        run.checks.append(Check("sync frequency equals max omega", "theorem", passed,
                                measured, pred, detail))
        t0 = trapping_time(sc.k, sc.delta, diameter(omega))
        if t0 <= t_end:
            state_t0 = state_at(theta0, omega, CouplingSpec(run.model, sc.k), config, t0)
            t_star = well_ordering_time(sc.k, sc.delta, omega, state_t0)
            run.bounds["T_star"] = t_star
            if t_star <= t_end:
                res = check_well_ordering(traj, omega, t_star)
                detail = ""
                if not res.holds:
                    # near-ties sit below the solver's error scale; only a violation
                    # that survives a much tighter integration counts
                    fine = config.replace(relative_tolerance=REFINE_RTOL, absolute_tolerance=REFINE_ATOL)
                    fine_traj = integrate_adaptive(theta0, omega, CouplingSpec(run.model, sc.k), fine)
                    res = check_well_ordering(fine_traj, omega, t_star)
                    detail = f"re-checked at rtol={REFINE_RTOL:g}"
                run.checks.append(Check("well-ordering after T*", "theorem", res.holds,
                                        None if res.holds else res.violation._asdict(), t_star, detail))
            else:
                run.checks.append(Check("well-ordering after T*", "theorem", None, None, t_star,
                                        "T* beyond simulated span"))
        else:
            run.checks.append(Check("well-ordering after T*", "theorem", None, None, t0,
                                    "T0 beyond simulated span"))


def state_at(theta0, omega, coupling: CouplingSpec, config: IntegratorConfig, t: float) -> np.ndarray:
    """Simulated state at time ``t`` (integrating from 0 under ``config``'s tolerances)."""
    if t <= 0:
        return np.asarray(theta0, dtype=float)
    sub = config.replace(t_end=t, sample_interval=t)
    return integrate_adaptive(theta0, omega, coupling, sub).states[-1].copy()


def run_scenario(
    scenario: Scenario,
    config: IntegratorConfig | None = None,
    *,
    model: CouplingKind | str | None = None,
    eps_phase: float = DEFAULT_EPS_PHASE,
    eps_freq: float = DEFAULT_EPS_FREQ,
    hold_window: float = DEFAULT_HOLD_WINDOW,
    others: dict[CouplingKind, SyncReport] | None = None,
) -> RunResult:
    """Simulate one coupling model of ``scenario`` and check it against theory.

    Theorem-backed checks are derived from the hypothesis verdicts; the
    scenario's own expectations for this model are appended after them.
    """
    config = _config_for(scenario, config)
    kind = scenario.models[0] if model is None else CouplingKind.parse(model)
    theta0, omega = scenario.initial_conditions()
    traj = integrate_adaptive(theta0, omega, CouplingSpec(kind, scenario.k), config, seed=scenario.seed)
    report = detect_sync(traj, eps_phase, eps_freq, hold_window)
    run = RunResult(scenario, kind, traj, report, _verdicts(scenario, theta0, omega))
    _theorem_checks(run, config, theta0, omega)
    for exp in scenario.expectations:
        target = exp.model or scenario.models[0]
        if target is kind and exp.op != "faster_than":
            run.checks.append(_evaluate(exp, report, others or {}))
    return run


def compare_models(
    scenario: Scenario,
    config: IntegratorConfig | None = None,
    *,
    models: Sequence[CouplingKind] = (CouplingKind.STRONG_COMPETITION, CouplingKind.CLASSICAL),
    **detect_kwargs,
) -> ComparisonResult:
    """Run each coupling model on the same Θ(0), Ω and compare."""
    runs = {}
    for kind in models:
        runs[CouplingKind.parse(kind)] = run_scenario(scenario, config, model=kind, **detect_kwargs)
    reports = {k: r.report for k, r in runs.items()}
    checks = []
    for exp in scenario.expectations:
        target = exp.model or scenario.models[0]
        if exp.op == "faster_than" and target in runs:
            checks.append(_evaluate(exp, reports[target], reports))
    return ComparisonResult(scenario, runs, checks)


SWEEP_PARAMETERS = ("k", "diameter0", "d_omega")


@dataclass
class SweepPoint:
    value: float
    report: SyncReport | None
    error: str | None = None


def _swept(base: Scenario, parameter: str, value: float) -> Scenario:
    if parameter == "k":
        return base.with_updates(k=value)
    if parameter == "diameter0":
        if base.theta0.mode != "random":
            raise ScenarioError("diameter0 sweep needs randomly generated phases")
        return base.with_updates(theta0=replace(base.theta0, diameter=value))
    if parameter == "d_omega":
        if base.omega.mode != "random":
            raise ScenarioError("d_omega sweep needs randomly generated frequencies")
        return base.with_updates(omega=replace(base.omega, diameter=value))
    raise ScenarioError(f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")


def sweep(base: Scenario, parameter: str, values: Iterable[float],
          config: IntegratorConfig | None = None, **run_kwargs) -> list[SweepPoint]:
    """One ``run_scenario`` per value with the base seed; failures are recorded, not raised."""
    if parameter not in SWEEP_PARAMETERS:
        raise ScenarioError(f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")
    values = list(values)
    if not values:
        raise ScenarioError("sweep needs at least one value")
    points = []
    for value in values:
        try:
            run = run_scenario(_swept(base, parameter, float(value)), config, **run_kwargs)
            points.append(SweepPoint(float(value), run.report))
        except (ValueError, RuntimeError) as exc:
            points.append(SweepPoint(float(value), None, str(exc)))
    return points
