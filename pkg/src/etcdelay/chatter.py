"""Machine-tool chatter scenario with delayed feedback of x1."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import PowerLaw, SystemModel
from .events import TriggerConfig
from .lyapunov import LyapunovCertificate, weighted_square_integral

DEFAULT_PHI = (1.0, 2.0)


@dataclass(frozen=True)
class ChatterParams:
    omega0: float = 1.0
    omega1: float = 0.5
    omega2: float = 1.0
    omega3: float = 0.3
    delta: float = 0.4
    zeta: float = 0.28
    tau: float = 1.0

    def __post_init__(self):
        for name in ("omega0", "omega1", "omega2", "omega3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (self.delta > 0 and self.zeta > 0 and self.tau > 0):
            raise ValueError("delta, zeta and tau must be positive")

    @property
    def is_default(self) -> bool:
        return self == ChatterParams()

    @property
    def alpha3_coefficient(self) -> float:
        """c such that V2 <= c * |phi|_tau^2, i.e. delta*(1 - e^{-zeta*tau})/zeta."""
        return self.delta * (1.0 - math.exp(-self.zeta * self.tau)) / self.zeta


def constant_history(value=DEFAULT_PHI):
    v = np.asarray(value, dtype=float)

    def phi(s):
        return v.copy()

    def dphi(s):
        return np.zeros_like(v)

    return phi, dphi


def build_chatter_model(p: ChatterParams = ChatterParams(), phi=None, dphi=None) -> SystemModel:
    w0, w1, w2, w3 = p.omega0, p.omega1, p.omega2, p.omega3
    tau = p.tau

    def rhs(t, seg, u):
        x1, x2 = seg.now
        x1d = seg(-tau)[0]
        return np.array([
            x2 + w0 * x1 * x1 * x2 + u[0],
            -w2 * x1 - w1 * x2 - w3 * x1d - w2 * x1 * x1 * x1,
        ])

    def feedback(x):
        return np.array([-x[0]])

    if phi is None:
        phi, dphi = constant_history()
    return SystemModel(2, 1, rhs, feedback, tau, phi, dphi, name="chatter")


def build_chatter_certificate(p: ChatterParams = ChatterParams(), mu: float = 0.28
                              ) -> LyapunovCertificate:
    if not p.is_default:
        warnings.warn("mu=0.28 is only derived for the default chatter parameters",
                      stacklevel=2)
    delta, zeta, tau = p.delta, p.zeta, p.tau

    def V1(t, x):
        return float(x @ x)

    def V2(t, history):
        return delta * weighted_square_integral(history, t, tau, zeta)

    sq = PowerLaw(1.0, 2.0)
    return LyapunovCertificate(
        V1=V1,
        V2=V2,
        alpha1=sq,
        alpha2=sq,
        alpha3=PowerLaw(p.alpha3_coefficient, 2.0),
        chi=sq,
        mu=mu,
    )


def build_chatter_trigger(sigma: float = 0.16, a: float = 1.0, b: float = 0.14,
                          t0: float = 0.0) -> TriggerConfig:
    sq = PowerLaw(1.0, 2.0)
    return TriggerConfig(sigma=sigma, a=a, b=b, t0=t0, chi=sq, alpha1=sq)
