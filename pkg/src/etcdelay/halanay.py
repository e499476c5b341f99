"""Numerical oracle for the Halanay-type inequality with initial-value term.

If a nonnegative continuous g satisfies

    D+ g(t) <= gamma1 * g(t0) + gamma2 * sup_{s in [t-r, t]} g(s)

on [t0, t0 + horizon), then g(t) <= |g_{t0}|_r * exp((gamma1 + gamma2)(t - t0)).
The saturated dynamics (equality) dominate every such g, so tabulating
them and checking the exponential bound exercises the whole family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True, eq=False)
class HalanayProblem:
    gamma1: float
    gamma2: float
    r: float
    history: np.ndarray  # samples on a uniform grid over [t0 - r, t0]
    horizon: float
    t0: float = 0.0

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "r", "horizon"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        hist = np.asarray(self.history, dtype=float)
        if hist.ndim != 1 or hist.size < 2:
            raise ValueError("history needs at least two samples")
        if np.any(hist < 0) or not np.all(np.isfinite(hist)):
            raise ValueError("history must be finite and nonnegative")
        object.__setattr__(self, "history", hist)

    @property
    def lam(self) -> float:
        return self.gamma1 + self.gamma2

    @property
    def history_sup(self) -> float:
        return float(self.history.max())

    def history_on(self, n: int) -> np.ndarray:
        """Resample the history onto n + 1 equally spaced points."""
        src = np.linspace(-self.r, 0.0, self.history.size)
        return np.interp(np.linspace(-self.r, 0.0, n + 1), src, self.history)


@dataclass
class Tabulation:
    t: np.ndarray
    g: np.ndarray


def _grid(p: HalanayProblem, h: float):
    if not 0 < h <= p.r / 100 * (1 + 1e-12):
        raise ValueError(f"step h={h} must satisfy 0 < h <= r/100 = {p.r / 100}")
    n = max(100, int(round(p.r / h)))
    h = p.r / n
    steps = int(math.ceil(p.horizon / h - 1e-9))
    return n, h, steps


def extremal_solution(p: HalanayProblem, h: float) -> Tabulation:
    """Tabulate g' = gamma1*g(t0) + gamma2*sup_{[t-r,t]} g on [t0, t0+horizon].

    h is rounded down so that it divides r; the window supremum is kept
    by a monotone deque over the tabulation grid.
    """
    n, h, steps = _grid(p, h)
    g = kernels.halanay_extremal(p.history_on(n), p.gamma1, p.gamma2, steps, h, np.ones(steps))
    return Tabulation(p.t0 + h * np.arange(steps + 1), g)


def damped_solution(p: HalanayProblem, h: float, rng=None) -> Tabulation:
    """A solution of the inequality (not the equality): the saturated rate
    scaled by a random factor in [0, 1] on each step."""
    n, h, steps = _grid(p, h)
    rng = np.random.default_rng(rng)
    g = kernels.halanay_extremal(p.history_on(n), p.gamma1, p.gamma2, steps, h,
                                 rng.random(steps))
    return Tabulation(p.t0 + h * np.arange(steps + 1), g)


def halanay_bound(p: HalanayProblem, t) -> np.ndarray:
    return p.history_sup * np.exp(p.lam * (np.asarray(t) - p.t0))


@dataclass
class HalanayReport:
    ok: bool
    worst_slack: float  # min over the tabulation of bound - g (relative to bound)
    t_worst: float
    max_ratio: float
    rtol: float


def check_halanay_bound(p: HalanayProblem, tab: Tabulation, rtol: float = 1e-6) -> HalanayReport:
    bound = halanay_bound(p, tab.t)
    ratio = np.divide(tab.g, bound, out=np.zeros_like(tab.g), where=bound > 0)
    excess = tab.g - bound * (1 + rtol)
    # zero history: the bound is 0 and g must vanish identically
    bad = excess > 0
    rel = (bound - tab.g) / np.where(bound > 0, bound, 1.0)
    j = int(np.argmin(rel))
    return HalanayReport(
        ok=not bool(bad.any()),
        worst_slack=float(rel[j]),
        t_worst=float(tab.t[j]),
        max_ratio=float(ratio.max()),
        rtol=rtol,
    )


def random_problem(rng, n_hist: int = 257) -> HalanayProblem:
    """gamma_i in [1e-3, 10] (log-uniform), r in [0.1, 5], smooth positive history."""
    g1, g2 = 10.0 ** rng.uniform(-3, 1, size=2)
    r = rng.uniform(0.1, 5.0)
    s = np.linspace(0.0, 1.0, n_hist)
    hist = rng.uniform(0.1, 2.0) * np.ones(n_hist)
    for k in range(1, 4):
        hist += rng.uniform(-0.3, 0.3) * np.sin(k * math.pi * s + rng.uniform(0, 2 * math.pi))
    hist = np.maximum(hist, 0.0)
    horizon = min(rng.uniform(0.2, 3.0), 30.0 / (g1 + g2))
    return HalanayProblem(g1, g2, r, hist, horizon)


@dataclass
class SelftestSummary:
    count: int
    failures: int
    worst_slack: float
    closed_form_error: float
    closed_form_slack: float

    @property
    def ok(self) -> bool:
        return self.failures == 0 and self.closed_form_error <= 1e-6


def closed_form_case(h: float = 1e-3):
    """gamma1 = gamma2 = r = 1, history 1: g(t) = 2e^t - 1."""
    p = HalanayProblem(1.0, 1.0, 1.0, np.ones(11), 1.0)
    tab = extremal_solution(p, h)
    return p, tab


def run_selftest(seed: int = 0, count: int = 1000, rtol: float = 1e-6) -> SelftestSummary:
    rng = np.random.default_rng(seed)
    worst = math.inf
    failures = 0
    for _ in range(count):
        p = random_problem(rng)
        rep = check_halanay_bound(p, extremal_solution(p, p.r / 200), rtol)
        failures += not rep.ok
        worst = min(worst, rep.worst_slack)
    p, tab = closed_form_case()
    err = abs(tab.g[-1] - (2 * math.e - 1))
    slack = float(halanay_bound(p, tab.t[-1]) - tab.g[-1])
    return SelftestSummary(count, failures, worst, err, slack)
