"""Synchronization measurements on trajectories.

Phase synchronization is judged on the circle (``circular_diameter``)
because phase differences only need to converge to multiples of 2π;
frequency synchronization is judged on the plain diameter of velocities.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from .integrator import Trajectory
from .model import DimensionError, as_frequencies

TWO_PI = 2.0 * math.pi

DEFAULT_EPS_PHASE = 1e-3
DEFAULT_EPS_FREQ = 1e-3
DEFAULT_HOLD_WINDOW = 10.0
ORDER_TOLERANCE = 1e-6


class ConfigurationError(ValueError):
    pass


def diameter(values: ArrayLike) -> float:
    """max_i x_i − min_i x_i."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise DimensionError("diameter of an empty vector")
    return float(x.max() - x.min())


def circular_diameter(phases: ArrayLike) -> float:
    """Length of the shortest arc of the unit circle holding every phase."""
    x = np.asarray(phases, dtype=np.float64)
    if x.size == 0:
        raise DimensionError("circular diameter of an empty vector")
    r = np.sort(np.mod(x, TWO_PI))
    gaps = np.diff(r, append=r[0] + TWO_PI)
    value = TWO_PI - float(gaps.max())
    # mod can land a hair below 2π for phases that are multiples of it
    return value if value < TWO_PI - 1e-15 else 0.0


def _circular_diameters(states: np.ndarray) -> np.ndarray:
    r = np.sort(np.mod(states, TWO_PI), axis=1)
    gaps = np.diff(r, axis=1, append=r[:, :1] + TWO_PI)
    out = TWO_PI - gaps.max(axis=1)
    out[out >= TWO_PI - 1e-15] = 0.0
    return out


def order_parameter(phases: ArrayLike) -> float:
    """Modulus of the mean unit phasor, |N⁻¹ Σ exp(iθ_j)|."""
    x = np.asarray(phases, dtype=np.float64)
    if x.size == 0:
        raise DimensionError("order parameter of an empty vector")
    return float(abs(np.exp(1j * x).mean()))


def phase_diameters(trajectory: Trajectory) -> np.ndarray:
    return np.ptp(trajectory.states, axis=1)


def velocity_diameters(trajectory: Trajectory) -> np.ndarray:
    return np.ptp(trajectory.velocities, axis=1)


def circular_diameters(trajectory: Trajectory) -> np.ndarray:
    return _circular_diameters(trajectory.states)


@dataclass(frozen=True)
class SyncReport:
    phase_sync_time: float | None
    freq_sync_time: float | None
    sync_frequency: float | None
    well_ordering_time: float | None
    final_phase_diameter: float
    final_circular_diameter: float
    final_velocity_diameter: float
    eps_phase: float
    eps_freq: float
    hold_window: float

    @property
    def phase_synced(self) -> bool:
        return self.phase_sync_time is not None

    @property
    def freq_synced(self) -> bool:
        return self.freq_sync_time is not None

    def to_dict(self) -> dict:
        return asdict(self)


def _settling_time(times: np.ndarray, below: np.ndarray, hold_window: float) -> float | None:
    """Earliest sample time from which ``below`` holds through the end,
    provided that tail spans at least ``hold_window``."""
    if not below[-1]:
        return None
    bad = np.flatnonzero(~below)
    start = 0 if bad.size == 0 else int(bad[-1]) + 1
    t = float(times[start])
    if times[-1] - t < hold_window - 1e-9:
        return None
    return t


def onset_of_ordering(trajectory: Trajectory, omega: ArrayLike | None = None,
                      tol: float = ORDER_TOLERANCE) -> float | None:
    """Earliest sample time after which the well-ordering holds to the end."""
    omega = trajectory.omega if omega is None else as_frequencies(omega, trajectory.n_oscillators)
    ok = _ordering_ok(trajectory.states, omega, tol)
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return float(trajectory.times[0 if bad.size == 0 else int(bad[-1]) + 1])


def _ordering_ok(states: np.ndarray, omega: np.ndarray, tol: float) -> np.ndarray:
    faster = omega[:, None] > omega[None, :]
    if not faster.any():
        return np.ones(states.shape[0], dtype=bool)
    ii, jj = np.nonzero(faster)
    return np.all(states[:, ii] >= states[:, jj] - tol, axis=1)


def detect_sync(
    trajectory: Trajectory,
    eps_phase: float = DEFAULT_EPS_PHASE,
    eps_freq: float = DEFAULT_EPS_FREQ,
    hold_window: float = DEFAULT_HOLD_WINDOW,
) -> SyncReport:
    """Measure phase/frequency sync onset on the trajectory's sample grid.

    A sync time is the earliest sample after which the relevant diameter
    stays below its threshold for the rest of the run; it is only reported
    when that tail lasts at least ``hold_window``.
    """
    if len(trajectory) == 0:
        raise ConfigurationError("empty trajectory")
    if not (eps_phase > 0 and eps_freq > 0 and hold_window > 0):
        raise ConfigurationError("thresholds and hold window must be positive")
    times = trajectory.times
    if hold_window > times[-1] - times[0] + 1e-9:
        raise ConfigurationError(
            f"hold window {hold_window} exceeds trajectory span {times[-1] - times[0]}"
        )
    circ = circular_diameters(trajectory)
    vel = velocity_diameters(trajectory)
    t_phase = _settling_time(times, circ < eps_phase, hold_window)
    t_freq = _settling_time(times, vel < eps_freq, hold_window)
    sync_freq = float(trajectory.velocities[-1].mean()) if t_freq is not None else None
    return SyncReport(
        phase_sync_time=t_phase,
        freq_sync_time=t_freq,
        sync_frequency=sync_freq,
        well_ordering_time=onset_of_ordering(trajectory),
        final_phase_diameter=float(np.ptp(trajectory.states[-1])),
        final_circular_diameter=float(circ[-1]),
        final_velocity_diameter=float(vel[-1]),
        eps_phase=float(eps_phase),
        eps_freq=float(eps_freq),
        hold_window=float(hold_window),
    )


class OrderingViolation(NamedTuple):
    time: float
    faster: int
    slower: int


class WellOrderingResult(NamedTuple):
    holds: bool
    violation: OrderingViolation | None

    def __bool__(self) -> bool:
        return self.holds


def check_well_ordering(
    trajectory: Trajectory,
    omega: ArrayLike | None = None,
    from_time: float | None = None,
    tol: float = ORDER_TOLERANCE,
) -> WellOrderingResult:
    """Check θ_i(t) ≥ θ_j(t) − tol whenever ω_i > ω_j, for samples t ≥ from_time.

    Indices in the returned violation are 0-based.
    """
    omega = trajectory.omega if omega is None else as_frequencies(omega, trajectory.n_oscillators)
    times = trajectory.times
    from_time = times[0] if from_time is None else from_time
    if not (times[0] - 1e-9 <= from_time <= times[-1] + 1e-9):
        raise ConfigurationError(f"from_time {from_time} outside trajectory span")
    start = int(np.searchsorted(times, from_time - 1e-12, side="left"))
    states = trajectory.states[start:]
    ok = _ordering_ok(states, omega, tol)
    if ok.all():
        return WellOrderingResult(True, None)
    row = int(np.flatnonzero(~ok)[0])
    theta = states[row]
    gap = theta[None, :] - theta[:, None]  # gap[i, j] = θ_j − θ_i
    gap = np.where(omega[:, None] > omega[None, :], gap, -np.inf)
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    return WellOrderingResult(False, OrderingViolation(float(times[start + row]), int(i), int(j)))


class FrequencyGroup(NamedTuple):
    frequency: float
    indices: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.indices)


def group_by_frequency(omega: ArrayLike) -> list[FrequencyGroup]:
    """Groups of exactly equal natural frequencies, fastest first (0-based indices)."""
    omega = as_frequencies(omega)
    groups = []
    for value in sorted(set(omega.tolist()), reverse=True):
        groups.append(FrequencyGroup(value, tuple(int(i) for i in np.flatnonzero(omega == value))))
    return groups
