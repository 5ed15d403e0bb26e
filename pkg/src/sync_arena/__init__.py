"""Classical and strong-competition Kuramoto oscillators: simulation,
synchronization diagnostics and analytic bounds."""

__version__ = "0.1.0"

from .diagnostics import (
    SyncReport,
    check_well_ordering,
    circular_diameter,
    detect_sync,
    diameter,
    group_by_frequency,
    order_parameter,
)
from .integrator import IntegrationError, IntegratorConfig, Trajectory, integrate_adaptive, integrate_euler_oracle
from .model import CouplingKind, CouplingSpec, DimensionError, coupling_value, rhs
from .theory import (
    HypothesisError,
    HypothesisVerdict,
    Theorem,
    check_hypotheses,
    interchange_bound,
    predicted_sync_frequency,
    trapping_time,
    uniform_circle_frequency,
    well_ordering_time,
)

__all__ = [
    "CouplingKind", "CouplingSpec", "DimensionError", "coupling_value", "rhs",
    "IntegrationError", "IntegratorConfig", "Trajectory", "integrate_adaptive", "integrate_euler_oracle",
    "SyncReport", "check_well_ordering", "circular_diameter", "detect_sync", "diameter",
    "group_by_frequency", "order_parameter",
    "HypothesisError", "HypothesisVerdict", "Theorem", "check_hypotheses", "interchange_bound",
    "predicted_sync_frequency", "trapping_time", "uniform_circle_frequency", "well_ordering_time",
]
