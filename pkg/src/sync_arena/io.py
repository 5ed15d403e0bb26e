"""Serialization: trajectory CSV, JSON reports and SVG diameter plots."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Mapping

import numpy as np

from .diagnostics import phase_diameters, velocity_diameters
from .integrator import Trajectory

CSV_FORMAT = "%.16e"  # 17 significant digits: lossless for float64


def trajectory_columns(n: int, prefix: str = "") -> list[str]:
    return ([f"{prefix}theta_{i}" for i in range(1, n + 1)]
            + [f"{prefix}thetadot_{i}" for i in range(1, n + 1)])


def write_trajectory_csv(path: str | Path, trajectory: Trajectory) -> Path:
    """Columns: t, theta_1..theta_N, thetadot_1..thetadot_N."""
    path = Path(path)
    header = ["t"] + trajectory_columns(trajectory.n_oscillators)
    data = np.column_stack([trajectory.times, trajectory.states, trajectory.velocities])
    np.savetxt(path, data, fmt=CSV_FORMAT, delimiter=",", header=",".join(header), comments="")
    return path


def write_comparison_csv(path: str | Path, trajectories: Mapping[str, Trajectory]) -> Path:
    """Side-by-side columns ``<model>:theta_i`` / ``<model>:thetadot_i`` on a shared time grid."""
    path = Path(path)
    trajs = list(trajectories.items())
    times = trajs[0][1].times
    for name, tr in trajs[1:]:
        if not np.array_equal(tr.times, times):
            raise ValueError(f"trajectory {name!r} is on a different time grid")
    header = ["t"]
    blocks = [times]
    for name, tr in trajs:
        header += trajectory_columns(tr.n_oscillators, prefix=f"{name}:")
        blocks += [tr.states, tr.velocities]
    np.savetxt(path, np.column_stack(blocks), fmt=CSV_FORMAT, delimiter=",",
               header=",".join(header), comments="")
    return path


def read_trajectory_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of ``write_trajectory_csv``: returns (times, states, velocities)."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = (len(header) - 1) // 2
    if len(header) != 2 * n + 1 or header[0] != "t":
        raise ValueError(f"{path}: not a trajectory CSV")
    return data[:, 0], data[:, 1:n + 1], data[:, n + 1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n")
    return path


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def write_sweep_csv(path: str | Path, rows: list[dict]) -> Path:
    path = Path(path)
    fields = ["value", "phase_synced", "freq_synced", "sync_frequency",
              "phase_sync_time", "freq_sync_time", "final_velocity_diameter", "error"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fields})
    return path


def write_diameter_svg(path: str | Path, trajectories: Mapping[str, Trajectory],
                       title: str = "") -> Path:
    """Two panels, D(Θ(t)) and D(Θ̇(t)), one line per trajectory.

    Output is byte-for-byte deterministic: fixed hash salt, no date stamp.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": "sync-arena", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        for name, tr in trajectories.items():
            axes[0].plot(tr.times, phase_diameters(tr), label=name, linewidth=1.2)
            axes[1].plot(tr.times, velocity_diameters(tr), label=name, linewidth=1.2)
        axes[0].set_ylabel(r"$D(\Theta(t))$")
        axes[1].set_ylabel(r"$D(\dot\Theta(t))$")
        for ax in axes:
            ax.set_xlabel("t")
            ax.grid(True, alpha=0.3)
            ax.legend()
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
