"""Lyapunov-Krasovskii functional evaluation and decrease monitoring."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import HistoryTrajectory, KFunction, OutOfRangeError, k_eval


@dataclass
class LyapunovCertificate:
    """V(t, x_t) = V1(t, x(t)) + V2(t, x_t) with its comparison functions.

    ``V1`` maps (t, state) to a float; ``V2`` maps (t, history) to a float
    and reads whatever part of [t - tau, t] it needs.
    """

    V1: Callable
    V2: Callable
    alpha1: KFunction
    alpha2: KFunction
    alpha3: KFunction
    chi: KFunction
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"decay rate mu must be positive, got {self.mu}")

    def with_mu(self, mu: float) -> "LyapunovCertificate":
        return LyapunovCertificate(self.V1, self.V2, self.alpha1, self.alpha2,
                                   self.alpha3, self.chi, mu)


def simpson(y: np.ndarray, dx: float) -> float:
    """Composite Simpson rule on an odd number of equally spaced samples."""
    n = y.shape[0]
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson needs an odd number (>= 3) of samples")
    return float(dx / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def weighted_square_integral(history: HistoryTrajectory, t: float, width: float,
                             decay: float) -> float:
    """int_{t-width}^{t} exp(-decay*(t-s)) * |x(s)|^2 ds by composite Simpson.

    Uses two panels per history grid step; off-grid endpoints are read
    through the dense output.
    """
    if t - width < history.times[0] - 1e-12 or t > history.t_current + 1e-12:
        raise OutOfRangeError(
            f"need history on [{t - width}, {t}], have [{history.times[0]}, {history.t_current}]"
        )
    n = 2 * max(1, round(width / history.h))
    s = np.linspace(t - width, t, n + 1)
    s[0] = max(s[0], history.times[0])
    s[-1] = min(s[-1], history.t_current)
    xs = history.interpolate_many(s)
    y = np.exp(-decay * (t - s)) * np.einsum("ij,ij->i", xs, xs)
    return simpson(y, width / n)


def eval_V(cert: LyapunovCertificate, t: float, history: HistoryTrajectory) -> float:
    if t - history.tau < history.times[0] - 1e-12:
        raise OutOfRangeError(f"history does not cover [{t - history.tau}, {t}]")
    x = history.interpolate(t)
    return float(cert.V1(t, x) + cert.V2(t, history))


@dataclass
class DecreaseReport:
    ok: bool
    worst_margin: float  # max of (forward difference) - (allowed bound); <= 0 passes
    t_worst: float
    violations: int
    checked: int
    rel_tol: float

    def as_dict(self):
        return {
            "ok": self.ok,
            "worst_margin": self.worst_margin,
            "t_worst": self.t_worst,
            "violations": self.violations,
            "checked": self.checked,
            "rel_tol": self.rel_tol,
        }


def decrease_check(cert: LyapunovCertificate, result, rel_tol: float = 0.02,
                   min_dt: float = 0.0) -> DecreaseReport:
    """Forward-difference check of D+V <= -mu*V + chi(|eps|) along a run.

    Tolerance at each record is ``rel_tol * max(1, V(t))``.  V is
    recomputed from the run's history with ``cert`` (so an altered
    certificate is judged on its own functional).
    """
    t = result.t
    V = np.array([eval_V(cert, ti, result.history) for ti in t])
    dt = np.diff(t)
    keep = dt > min_dt
    dV = np.diff(V)[keep] / dt[keep]
    Vk = V[:-1][keep]
    chi = np.array([k_eval(cert.chi, e) for e in result.eps_norm[:-1][keep]])
    bound = -cert.mu * Vk + chi + rel_tol * np.maximum(1.0, Vk)
    margin = dV - bound
    if margin.size == 0:
        return DecreaseReport(True, -math.inf, math.nan, 0, 0, rel_tol)
    j = int(np.argmax(margin))
    bad = int(np.count_nonzero(margin > 0))
    return DecreaseReport(
        ok=bad == 0,
        worst_margin=float(margin[j]),
        t_worst=float(t[:-1][keep][j]),
        violations=bad,
        checked=int(margin.size),
        rel_tol=rel_tol,
    )


def sandwich_check(cert: LyapunovCertificate, result) -> float:
    """Largest violation of alpha1(|x|) <= V over the records (<= 0 passes)."""
    a1 = np.array([k_eval(cert.alpha1, n) for n in result.x_norm])
    return float(np.max(a1 - result.V))
