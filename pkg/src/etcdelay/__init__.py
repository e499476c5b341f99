"""Event-triggered control of retarded functional differential equations."""

from .core import (
    ConfigurationError,
    DomainError,
    EtcError,
    HistoryTrajectory,
    IntegrationBlowup,
    OutOfRangeError,
    PowerLaw,
    SystemModel,
    Tabulated,
    ZenoGuardError,
    k_eval,
    k_invert,
)
from .engine import IntegratorConfig, SimulationResult, simulate, simulate_continuous
from .events import TriggerConfig, enforcement_check, residual
from .lyapunov import LyapunovCertificate, decrease_check, eval_V

__all__ = [
    "ConfigurationError", "DomainError", "EtcError", "HistoryTrajectory", "IntegrationBlowup",
    "OutOfRangeError", "PowerLaw", "SystemModel", "Tabulated", "ZenoGuardError", "k_eval",
    "k_invert", "IntegratorConfig", "SimulationResult", "simulate", "simulate_continuous",
    "TriggerConfig", "enforcement_check", "residual", "LyapunovCertificate", "decrease_check",
    "eval_V",
]
