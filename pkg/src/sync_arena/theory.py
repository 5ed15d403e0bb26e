"""Analytic hypotheses, waiting-time bounds and predicted frequencies.

All hypothesis inequalities are strict except where the underlying
statement itself is non-strict (the sector-trapping initial condition
``D(Θ(0)) ≤ π − δ``). Equality is reported as a failed condition with
margin 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from .diagnostics import ConfigurationError, diameter
from .model import CouplingKind, as_frequencies, as_phases


class HypothesisError(ValueError):
    """A bound was requested outside the regime where it is defined."""


class Theorem(str, enum.Enum):
    THM1 = "thm1"
    THM2 = "thm2"
    CLASSICAL_SUFFICIENT = "classical-sufficient"
    TRAPPING = "trapping"


def trapping_time(k: float, delta: float, d_omega: float) -> float:
    """Time after which the phase diameter is at most ``delta``.

    (π − 2δ) / (k sin δ − D(Ω)), valid when k sin δ > D(Ω) and the initial
    diameter is at most π − δ.
    """
    if not 0 < delta < math.pi / 2:
        raise HypothesisError(f"delta must lie in (0, π/2), got {delta}")
    rate = k * math.sin(delta) - d_omega
    if rate <= 0:
        raise HypothesisError(
            f"k sin(delta) = {k * math.sin(delta):.6g} does not exceed D(omega) = {d_omega:.6g}"
        )
    return (math.pi - 2 * delta) / rate


def interchange_bound(theta_i_t0: float, theta_j_t0: float, omega_i: float, omega_j: float,
                      t0: float) -> float:
    """Time after which θ_i ≥ θ_j, given ω_i > ω_j and D(Θ) ≤ π/2 from t0 on."""
    if not omega_i > omega_j:
        raise HypothesisError(f"need omega_i > omega_j, got {omega_i} <= {omega_j}")
    return t0 + max(0.0, (theta_j_t0 - theta_i_t0) / (omega_i - omega_j))


def well_ordering_time(k: float, delta: float, omega: ArrayLike, state_at_t0: ArrayLike) -> float:
    """T* = T₀ + max over pairs ω_i > ω_j of the interchange wait.

    ``state_at_t0`` must be the simulated state at T₀ = ``trapping_time``;
    there is no closed form in terms of the initial data.
    """
    omega = as_frequencies(omega)
    theta = as_phases(state_at_t0, name="state_at_t0")
    if theta.size != omega.size:
        raise ValueError("state and omega lengths differ")
    t0 = trapping_time(k, delta, diameter(omega))
    faster = omega[:, None] > omega[None, :]
    if not faster.any():
        return t0
    # wait[i, j] = (θ_j − θ_i) / (ω_i − ω_j) over pairs with ω_i > ω_j
    with np.errstate(divide="ignore", invalid="ignore"):
        wait = (theta[None, :] - theta[:, None]) / (omega[:, None] - omega[None, :])
    return t0 + max(0.0, float(wait[faster].max()))


def predicted_sync_frequency(kind: CouplingKind | str, omega: ArrayLike) -> float:
    """max Ω for strong competition, mean Ω for classical coupling."""
    omega = as_frequencies(omega)
    if CouplingKind.parse(kind) is CouplingKind.STRONG_COMPETITION:
        return float(omega.max())
    return float(omega.mean())


def uniform_circle_frequency(n: int, k: float, omega: float) -> float:
    """Common velocity of N identical SC oscillators spread evenly on the circle."""
    if n < 2:
        raise ValueError("n must be at least 2")
    j = np.arange(1, (n + 1) // 2)  # 1 <= j < n/2
    return float(omega + k * np.sin(2 * np.pi * j / n).sum())


@dataclass(frozen=True)
class Condition:
    name: str
    holds: bool
    margin: float


@dataclass(frozen=True)
class HypothesisVerdict:
    theorem: Theorem
    conditions: tuple[Condition, ...]
    params: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.conditions)

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem.value,
            "holds": self.holds,
            "conditions": [asdict(c) for c in self.conditions],
            "params": dict(self.params),
        }


def _strict(name: str, lhs: float, rhs: float) -> Condition:
    margin = lhs - rhs
    return Condition(name, bool(margin > 0), float(margin))


def _nonstrict(name: str, lhs: float, rhs: float) -> Condition:
    margin = lhs - rhs
    return Condition(name, bool(margin >= 0), float(margin))


def check_hypotheses(theorem: Theorem | str, k: float, delta: float | None,
                     omega: ArrayLike, state0: ArrayLike) -> HypothesisVerdict:
    """Evaluate each hypothesis of ``theorem`` with its numeric margin.

    thm1: D(Ω) = 0 and D(Θ(0)) < π.
    thm2: k > D(Ω)/sin δ and D(Θ(0)) < π − δ.
    classical-sufficient: k > D(Ω)/(N sin δ) and D(Θ(0)) < π − δ.
    trapping: k sin δ > D(Ω) and D(Θ(0)) ≤ π − δ.
    """
    theorem = Theorem(theorem)
    omega = as_frequencies(omega)
    theta0 = as_phases(state0, name="state0")
    if theta0.size != omega.size:
        raise ValueError("state0 and omega lengths differ")
    d_omega, d_theta = diameter(omega), diameter(theta0)
    n = omega.size
    params = {"k": float(k), "delta": delta, "d_omega": d_omega, "d_theta0": d_theta, "n": n}

    if theorem is Theorem.THM1:
        conds = (
            Condition("identical frequencies", d_omega == 0.0, -d_omega),
            _strict("initial diameter below pi", math.pi, d_theta),
        )
        return HypothesisVerdict(theorem, conds, params)

    if delta is None:
        raise ConfigurationError(f"{theorem.value} requires delta")
    if not 0 < delta < math.pi / 2:
        raise ConfigurationError(f"delta must lie in (0, π/2), got {delta}")
    sin_d = math.sin(delta)
    if theorem is Theorem.THM2:
        conds = (
            _strict("k > D(omega)/sin(delta)", k, d_omega / sin_d),
            _strict("D(theta0) < pi - delta", math.pi - delta, d_theta),
        )
    elif theorem is Theorem.CLASSICAL_SUFFICIENT:
        conds = (
            _strict("k > D(omega)/(N sin(delta))", k, d_omega / (n * sin_d)),
            _strict("D(theta0) < pi - delta", math.pi - delta, d_theta),
        )
    else:
        conds = (
            _strict("k sin(delta) > D(omega)", k * sin_d, d_omega),
            _nonstrict("D(theta0) <= pi - delta", math.pi - delta, d_theta),
        )
    return HypothesisVerdict(theorem, conds, params)
