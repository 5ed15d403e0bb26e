"""Initial-value solvers producing dense, uniformly sampled trajectories.

``integrate_adaptive`` is a Dormand-Prince 5(4) pair with local error
control and a quartic continuous extension used to emit samples on a fixed
output grid. For strong-competition coupling the embedded error estimate
does not see the derivative kinks of max(0, sin φ), so any accepted step
that changes the sign of some sin(θ_j − θ_i) is retried until it is no
longer than ``kink_step``. ``integrate_euler_oracle`` is a deliberately naive fixed-step
forward Euler kept around to cross-check the adaptive solver.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .model import CouplingSpec, DimensionError, FloatArray, as_frequencies, as_phases, make_rhs

__all__ = [
    "IntegrationError",
    "IntegratorConfig",
    "Trajectory",
    "integrate_adaptive",
    "integrate_euler_oracle",
]

MIN_STEP = 1e-12


class IntegrationError(RuntimeError):
    """Step-size control broke down (step underflow)."""


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float = 200.0
    relative_tolerance: float = 1e-5
    absolute_tolerance: float = 1e-8
    max_step: float = 0.1
    sample_interval: float = 0.1
    kink_step: float = 1e-4

    def __post_init__(self):
        for name in ("t_end", "relative_tolerance", "absolute_tolerance", "max_step", "sample_interval",
                     "kink_step"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.sample_interval > self.t_end:
            raise ValueError("sample_interval must not exceed t_end")

    def replace(self, **changes) -> "IntegratorConfig":
        values = asdict(self)
        values.update({k: v for k, v in changes.items() if v is not None})
        return IntegratorConfig(**values)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples ``(t, Θ(t), Θ̇(t))``; velocities are exact RHS evaluations."""

    times: FloatArray
    states: FloatArray
    velocities: FloatArray
    omega: FloatArray
    coupling: CouplingSpec
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.times, self.states, self.velocities):
            arr.setflags(write=False)

    @property
    def n_oscillators(self) -> int:
        return self.states.shape[1]

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return self.times.size

    def at(self, t: float) -> FloatArray:
        """State at the first sample with time >= t."""
        idx = int(np.searchsorted(self.times, t - 1e-12, side="left"))
        return self.states[min(idx, len(self) - 1)]

    def identical_to(self, other: "Trajectory") -> bool:
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.velocities, other.velocities)
        )


def output_grid(t_end: float, interval: float, t_start: float = 0.0) -> FloatArray:
    n = int(math.floor((t_end - t_start) / interval + 1e-9))
    grid = t_start + interval * np.arange(n + 1)
    if t_end - grid[-1] > 1e-9 * max(1.0, t_end):
        grid = np.append(grid, t_end)
    else:
        grid[-1] = min(grid[-1], t_end)
    return grid


def _check_inputs(state0, omega):
    theta0 = as_phases(state0, name="state0")
    omega = as_frequencies(omega)
    if omega.size != theta0.size:
        raise DimensionError(f"state0 has length {theta0.size} but omega has length {omega.size}")
    return theta0, omega


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# fifth-order minus embedded fourth-order weights, incl. the FSAL stage
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t + xh) = y + h K^T P [x, x^2, x^3, x^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_EXPONENT = -1 / 5
_KINK_SHRINK = 0.125
_KINK_DEADBAND = 1e-9


def _kink_side(theta):
    """Sign of sin(θ_j − θ_i), with a dead band so round-off jitter near
    synchrony is not mistaken for crossing a kink of max(0, sin)."""
    s = np.sin(theta[np.newaxis, :] - theta[:, np.newaxis])
    return np.where(s > _KINK_DEADBAND, 1, np.where(s < -_KINK_DEADBAND, -1, 0))


def _initial_step(f, t0, y0, f0, rtol, atol, max_step):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def integrate_adaptive(
    state0,
    omega,
    coupling: CouplingSpec,
    config: IntegratorConfig | None = None,
    *,
    t_start: float = 0.0,
    seed: int | None = None,
) -> Trajectory:
    """Solve the system on ``[t_start, config.t_end]`` with DP5(4).

    Samples are emitted on ``t_start + j * sample_interval`` (plus ``t_end``
    if it falls off the grid) from the continuous extension of the step
    that covers each grid time.
    """
    config = config or IntegratorConfig()
    theta0, omega = _check_inputs(state0, omega)
    f = make_rhs(omega, coupling)
    rtol, atol, max_step = config.relative_tolerance, config.absolute_tolerance, config.max_step
    t_end = config.t_end
    if t_end <= t_start:
        raise ValueError("t_end must be greater than t_start")

    grid = output_grid(t_end, config.sample_interval, t_start)
    n, m = theta0.size, grid.size
    states = np.empty((m, n))
    states[0] = theta0
    out = 1

    kink_step = config.kink_step if coupling.kind.value == "strong-competition" else None
    side = _kink_side(theta0) if kink_step is not None else None

    K = np.empty((7, n))
    t, y = float(t_start), theta0.copy()
    K[0] = f(t, y)
    h = _initial_step(f, t, y, K[0], rtol, atol, max_step)
    n_steps = n_rejected = n_kink = 0

    while out < m:
        h = min(h, max_step, t_end - t)
        if h < MIN_STEP:
            raise IntegrationError(f"step size {h:.3e} underflow at t={t:.6g}")
        for s in range(1, 6):
            K[s] = f(t + _C[s] * h, y + h * (_A[s] @ K[:s]))
        y_new = y + h * (_B @ K[:6])
        t_new = t + h
        if t_end - t_new < 1e-12 * max(1.0, abs(t_end)):
            t_new = t_end
        K[6] = f(t_new, y_new)
        scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
        err = np.sqrt(np.mean((h * (_E @ K) / scale) ** 2))

        if kink_step is not None and err <= 1.0:
            # a step across a kink of max(0, sin) is only trusted once it is short
            side_new = _kink_side(y_new)
            if h > kink_step and np.any(side_new * side < 0):
                n_rejected += 1
                n_kink += 1
                h = max(kink_step, h * _KINK_SHRINK)
                continue
            side = side_new

        if err <= 1.0:
            n_steps += 1
            if out < m and grid[out] <= t_new:
                Q = K.T @ _P
                while out < m and grid[out] <= t_new:
                    x = (grid[out] - t) / h
                    states[out] = y + h * (Q @ np.array([x, x * x, x ** 3, x ** 4]))
                    out += 1
                if grid[out - 1] == t_new:
                    states[out - 1] = y_new
            factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, _SAFETY * err ** _ERR_EXPONENT)
            t, y = t_new, y_new
            K[0] = K[6]
            h *= factor
        else:
            n_rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** _ERR_EXPONENT)

    velocities = np.array([f(tt, yy) for tt, yy in zip(grid, states)])
    meta = {
        "method": "dormand-prince-5(4)",
        "config": config.to_dict(),
        "t_start": float(t_start),
        "n_steps": n_steps,
        "n_rejected": n_rejected,
        "n_kink_rejected": n_kink,
    }
    if seed is not None:
        meta["seed"] = seed
    return Trajectory(grid, states, velocities, omega, coupling, meta)


def integrate_euler_oracle(
    state0,
    omega,
    coupling: CouplingSpec,
    step: float,
    t_end: float,
    *,
    sample_interval: float | None = None,
) -> Trajectory:
    """Fixed-step forward Euler, for tests only.

    The right-hand side is evaluated by a scalar double loop, independent of
    the vectorised ``model.rhs``. With ``sample_interval`` only every
    ``round(sample_interval / step)``-th state is kept.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    theta0, omega = _check_inputs(state0, omega)
    n_steps = int(round(t_end / step))
    stride = 1 if sample_interval is None else max(1, int(round(sample_interval / step)))
    clip = coupling.kind.value == "strong-competition"
    states, velocities = _euler_kernel(theta0.copy(), omega, coupling.strength, clip, step, n_steps, stride)
    times = step * stride * np.arange(states.shape[0])
    meta = {"method": "forward-euler", "step": step, "t_end": t_end, "stride": stride}
    return Trajectory(times, states, velocities, omega, coupling, meta)


def _euler_kernel_py(theta, omega, k, clip, step, n_steps, stride):
    n = theta.size
    n_out = n_steps // stride + 1
    states = np.empty((n_out, n))
    velocities = np.empty((n_out, n))
    vel = np.empty(n)
    acc = np.empty(n)
    row = 0
    for it in range(n_steps + 1):
        acc[:] = 0.0
        # each pair once: sin(θj − θi) feeds i, its negative feeds j
        for i in range(n):
            for j in range(i + 1, n):
                s = math.sin(theta[j] - theta[i])
                if clip:
                    if s > 0.0:
                        acc[i] += s
                    else:
                        acc[j] -= s
                else:
                    acc[i] += s
                    acc[j] -= s
        for i in range(n):
            vel[i] = omega[i] + k * acc[i]
        if it % stride == 0:
            states[row] = theta
            velocities[row] = vel
            row += 1
        if it == n_steps:
            break
        for i in range(n):
            theta[i] += step * vel[i]
    return states[:row], velocities[:row]


try:
    import numba

    _euler_kernel = numba.njit(cache=True)(_euler_kernel_py)
except ImportError:  # pragma: no cover
    _euler_kernel = _euler_kernel_py
