"""Coupling functions and right-hand sides of the oscillator systems.

Phases live on the real line (lifted, never reduced mod 2π) and are
handled as 1-D float arrays. Both systems share the all-to-all form

    dθ_i/dt = ω_i + Σ_j Γ(θ_j − θ_i)

with Γ(φ) = k sin φ (classical) or Γ(φ) = k max(0, sin φ) (strong
competition). The self term j = i is kept in the sum; it is exactly zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]


class DimensionError(ValueError):
    """Raised on empty inputs or mismatched vector lengths."""


class CouplingKind(str, enum.Enum):
    CLASSICAL = "classical"
    STRONG_COMPETITION = "strong-competition"

    @classmethod
    def parse(cls, value: "str | CouplingKind") -> "CouplingKind":
        if isinstance(value, cls):
            return value
        aliases = {"sc": cls.STRONG_COMPETITION, "max": cls.STRONG_COMPETITION}
        key = str(value).strip().lower().replace("_", "-")
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown coupling kind: {value!r}") from None


@dataclass(frozen=True)
class CouplingSpec:
    kind: CouplingKind
    strength: float

    def __post_init__(self):
        object.__setattr__(self, "kind", CouplingKind.parse(self.kind))
        k = float(self.strength)
        if not np.isfinite(k) or k <= 0:
            raise ValueError(f"coupling strength must be positive, got {self.strength!r}")
        object.__setattr__(self, "strength", k)

    @classmethod
    def classical(cls, k: float) -> "CouplingSpec":
        return cls(CouplingKind.CLASSICAL, k)

    @classmethod
    def strong_competition(cls, k: float) -> "CouplingSpec":
        return cls(CouplingKind.STRONG_COMPETITION, k)


def as_phases(values: ArrayLike, name: str = "phases") -> FloatArray:
    """Validate and copy a phase (or frequency) vector as a read-only array."""
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


def as_frequencies(values: ArrayLike, n: int | None = None) -> FloatArray:
    arr = as_phases(values, name="omega")
    if n is not None and arr.size != n:
        raise DimensionError(f"omega has length {arr.size}, expected {n}")
    return arr


def coupling_value(kind: CouplingKind | str, phase_difference, k: float = 1.0):
    """k·Γ̃(φ): k sin φ for classical, k max(0, sin φ) for strong competition.

    Works elementwise on arrays; scalars come back as Python floats.
    """
    kind = CouplingKind.parse(kind)
    s = np.sin(phase_difference)
    if kind is CouplingKind.STRONG_COMPETITION:
        s = np.maximum(s, 0.0)
    out = k * s
    return float(out) if np.ndim(out) == 0 else out


def rhs(theta: ArrayLike, omega: ArrayLike, coupling: CouplingSpec) -> FloatArray:
    """Velocity vector of the coupled system at phases ``theta``."""
    theta = np.asarray(theta, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    if theta.ndim != 1 or theta.shape != omega.shape:
        raise DimensionError(
            f"theta and omega must be 1-D of equal length, got {theta.shape} and {omega.shape}"
        )
    if theta.size == 0:
        raise DimensionError("empty state")
    return make_rhs(omega, coupling)(0.0, theta)


def make_rhs(omega: ArrayLike, coupling: CouplingSpec):
    """Return ``f(t, theta)`` for the integrators with ω and k bound in.

    The closure avoids re-validating inputs on every stage evaluation.
    """
    omega = np.asarray(omega, dtype=np.float64)
    k = coupling.strength
    clip = coupling.kind is CouplingKind.STRONG_COMPETITION

    def f(t: float, theta: FloatArray) -> FloatArray:
        # diff[i, j] = θ_j − θ_i
        s = np.sin(theta[np.newaxis, :] - theta[:, np.newaxis])
        if clip:
            np.maximum(s, 0.0, out=s)
        return omega + k * s.sum(axis=1)

    return f
