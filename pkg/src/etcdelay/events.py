"""Triggering condition and event-time bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigurationError, KFunction, PowerLaw, k_eval


@dataclass(frozen=True)
class TriggerConfig:
    """Parameters of chi(|eps|) = sigma*alpha1(|x|) + chi(a*exp(-b*(t - t0)))."""

    sigma: float
    a: float
    b: float
    t0: float = 0.0
    chi: KFunction = field(default_factory=lambda: PowerLaw(1.0, 2.0))
    alpha1: KFunction = field(default_factory=lambda: PowerLaw(1.0, 2.0))

    def __post_init__(self):
        if not self.b > 0:
            raise ConfigurationError(f"trigger.b must be positive, got {self.b}")
        if self.sigma < 0:
            raise ConfigurationError(f"trigger.sigma must be >= 0, got {self.sigma}")
        if self.a < 0:
            raise ConfigurationError(f"trigger.a must be >= 0, got {self.a}")
        if self.sigma == 0 and self.a == 0:
            raise ConfigurationError(
                "trigger.sigma = 0 together with trigger.a = 0 forces continuous triggering"
            )

    def threshold(self, t: float, x_norm: float) -> float:
        return self.sigma * k_eval(self.alpha1, x_norm) + k_eval(
            self.chi, self.a * math.exp(-self.b * (t - self.t0))
        )


def residual(trig: TriggerConfig, t: float, x, eps) -> float:
    """r(t) = chi(|eps|) - sigma*alpha1(|x|) - chi(a*exp(-b*(t - t0))).

    The enforced condition is r <= 0; an event is due when r crosses 0
    from below.
    """
    if t < trig.t0:
        raise ValueError(f"t={t} precedes t0={trig.t0}")
    e = math.sqrt(float(np.dot(eps, eps)))
    return k_eval(trig.chi, e) - trig.threshold(t, math.sqrt(float(np.dot(x, x))))


@dataclass
class EventLog:
    times: list = field(default_factory=list)
    sampled_states: list = field(default_factory=list)

    def add(self, t: float, x) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError(f"event time {t} not after {self.times[-1]}")
        self.times.append(float(t))
        self.sampled_states.append(np.array(x, dtype=float))

    def __len__(self):
        return len(self.times)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(np.asarray(self.times))


@dataclass
class EnforcementReport:
    applicable: bool
    ok: bool = True
    max_residual: float = -math.inf
    t_max: float = math.nan
    first_violation: float | None = None
    tol: float = 0.0

    def as_dict(self):
        return {
            "applicable": self.applicable,
            "ok": self.ok,
            "max_residual": self.max_residual,
            "t_max": self.t_max,
            "first_violation": self.first_violation,
            "tol": self.tol,
        }


def enforcement_check(result, trig: TriggerConfig, tol: float = 1e-6) -> EnforcementReport:
    """Check r(t) <= tol at every step record of a completed run.

    The residual is recomputed from the stored states and sampled states,
    not read back from the engine's own column.
    """
    if not result.event_log.times:
        return EnforcementReport(applicable=False)
    t = result.t
    ev_t = np.asarray(result.event_log.times)
    ev_x = np.asarray(result.event_log.sampled_states)
    # latest event at or before each record
    idx = np.searchsorted(ev_t, t, side="right") - 1
    r = np.array([
        residual(trig, ti, xi, ev_x[j] - xi) for ti, xi, j in zip(t, result.x, idx)
    ])
    k = int(np.argmax(r))
    bad = np.nonzero(r > tol)[0]
    return EnforcementReport(
        applicable=True,
        ok=bad.size == 0,
        max_residual=float(r[k]),
        t_max=float(t[k]),
        first_violation=float(t[bad[0]]) if bad.size else None,
        tol=tol,
    )
