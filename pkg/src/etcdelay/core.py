"""Shared domain types: comparison functions, history trajectories, models."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels


class EtcError(Exception):
    """Base class for errors raised by this package."""


class DomainError(EtcError, ValueError):
    pass


class OutOfRangeError(EtcError, ValueError):
    pass


class ConfigurationError(EtcError, ValueError):
    pass


class IntegrationBlowup(EtcError, FloatingPointError):
    def __init__(self, t: float, message: str = ""):
        self.t = t
        super().__init__(message or f"state diverged (non-finite or above 1e100) at t={t!r}")


class ZenoGuardError(EtcError, RuntimeError):
    def __init__(self, times):
        self.times = list(times)
        shown = ", ".join(f"{t:.12g}" for t in self.times[-7:])
        super().__init__(f"Zeno guard tripped; recent event times: {shown}")


# ---------------------------------------------------------------------------
# comparison functions

INVERSION_TOL = 1e-10


class KFunction:
    """A class-K comparison function on [0, inf)."""

    def __call__(self, s: float) -> float:
        return k_eval(self, s)

    def evaluate(self, s: float) -> float:
        raise NotImplementedError

    def inverse(self, y: float) -> float:
        raise NotImplementedError

    @property
    def sup(self) -> float:
        """Supremum of the range (inf for class K-infinity)."""
        return math.inf


@dataclass(frozen=True)
class PowerLaw(KFunction):
    """c * s**p with c > 0, p > 0."""

    c: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and self.p > 0):
            raise DomainError(f"power law needs c>0 and p>0, got c={self.c}, p={self.p}")

    def evaluate(self, s):
        return self.c * s**self.p

    def inverse(self, y):
        return (y / self.c) ** (1.0 / self.p)

    def inverse_lipschitz(self, lo: float, hi: float) -> float:
        """Lipschitz constant of the inverse on [lo, hi]."""
        if lo < 0 or hi < lo:
            raise DomainError(f"bad interval [{lo}, {hi}]")
        q = 1.0 / self.p
        y = lo if q < 1 else hi
        if y == 0 and q < 1:
            return math.inf
        return q / self.c * (y / self.c) ** (q - 1.0)


@dataclass(frozen=True, eq=False)
class Tabulated(KFunction):
    """Piecewise-linear interpolant of strictly increasing breakpoint values.

    Defined on [0, s[-1]]; the first breakpoint must be (0, 0).
    """

    s: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.ndim != 1 or s.shape != v.shape or s.size < 2:
            raise DomainError("tabulated K-function needs matching 1-d arrays of length >= 2")
        if s[0] != 0.0 or v[0] != 0.0:
            raise DomainError("tabulated K-function must start at (0, 0)")
        if np.any(np.diff(s) <= 0) or np.any(np.diff(v) <= 0):
            raise DomainError("breakpoints and values must be strictly increasing")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn, s_max: float, n: int = 201) -> "Tabulated":
        s = np.linspace(0.0, s_max, n)
        return cls(s, np.array([fn(x) for x in s]))

    @property
    def sup(self):
        return float(self.values[-1])

    def evaluate(self, s):
        if s > self.s[-1]:
            raise OutOfRangeError(f"s={s} beyond tabulated domain [0, {self.s[-1]}]")
        return float(np.interp(s, self.s, self.values))

    def inverse(self, y):
        if y > self.values[-1]:
            raise OutOfRangeError(f"y={y} outside tabulated range [0, {self.values[-1]}]")
        lo, hi = 0.0, float(self.s[-1])
        # bisection; the interval shrinks far below the inversion tolerance
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.evaluate(mid) < y:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    def inverse_lipschitz(self, lo, hi):
        slopes = np.diff(self.values) / np.diff(self.s)
        seg_lo = np.searchsorted(self.values, lo, side="right") - 1
        seg_hi = np.searchsorted(self.values, hi, side="left")
        seg = slopes[max(seg_lo, 0) : max(seg_hi, seg_lo + 1)]
        return float(1.0 / seg.min())


def k_eval(kf: KFunction, s: float) -> float:
    if s < 0 or not math.isfinite(s):
        raise DomainError(f"K-function argument must be finite and >= 0, got {s}")
    if s == 0:
        return 0.0
    return float(kf.evaluate(s))


def k_invert(kf: KFunction, y: float) -> float:
    if y < 0 or not math.isfinite(y):
        raise DomainError(f"K-function inverse needs finite y >= 0, got {y}")
    if y == 0:
        return 0.0
    return float(kf.inverse(y))


# ---------------------------------------------------------------------------
# history trajectories


class HistoryTrajectory:
    """Append-only dense record of x on [t_start - tau, t_current].

    The initial segment sits on a uniform grid with step ``h = tau / N``.
    Later knots are appended by the integrator: grid points plus any
    event times or delay-propagated breakpoints.  Each knot carries a left
    and a right derivative so the cubic Hermite dense output stays accurate
    across derivative jumps at events.
    """

    def __init__(self, t_start: float, tau: float, h: float, dim: int, capacity: int = 1024):
        n = round(tau / h)
        if n < 1 or abs(n * h - tau) > 1e-9 * tau:
            raise ConfigurationError(f"step h={h} must divide tau={tau} exactly")
        self.t_start = float(t_start)
        self.tau = float(tau)
        self.h = float(h)
        self.steps_per_tau = n
        self.dim = dim
        self._t = np.empty(capacity)
        self._x = np.empty((capacity, dim))
        self._dl = np.empty((capacity, dim))
        self._dr = np.empty((capacity, dim))
        self._tl: list[float] = []
        self.count = 0

    @classmethod
    def from_initial(cls, phi: Callable, t_start: float, tau: float, h: float,
                     dphi: Optional[Callable] = None, capacity: int = 1024):
        x0 = np.atleast_1d(np.asarray(phi(0.0), dtype=float))
        hist = cls(t_start, tau, h, x0.size, capacity=max(capacity, 4 * round(tau / h)))
        n = hist.steps_per_tau
        for j in range(n + 1):
            s = -tau + j * h if j < n else 0.0
            x = np.atleast_1d(np.asarray(phi(s), dtype=float))
            if dphi is not None:
                d = np.atleast_1d(np.asarray(dphi(s), dtype=float))
            else:
                d = _numeric_derivative(phi, s, tau)
            hist.append(t_start + s, x, d, d)
        return hist

    def _grow(self):
        cap = 2 * self._t.shape[0]
        for name in ("_t", "_x", "_dl", "_dr"):
            old = getattr(self, name)
            new = np.empty((cap,) + old.shape[1:])
            new[: self.count] = old[: self.count]
            setattr(self, name, new)

    def append(self, t, x, dl, dr=None):
        if self.count and t <= self._tl[-1]:
            raise ValueError(f"knot t={t} not after last knot {self._tl[-1]}")
        if self.count == self._t.shape[0]:
            self._grow()
        i = self.count
        self._t[i] = t
        self._x[i] = x
        self._dl[i] = dl
        self._dr[i] = dl if dr is None else dr
        self._tl.append(float(t))
        self.count += 1

    def set_right_derivative(self, d):
        self._dr[self.count - 1] = d

    @property
    def t_current(self) -> float:
        return self._tl[-1]

    @property
    def times(self) -> np.ndarray:
        return self._t[: self.count]

    @property
    def states(self) -> np.ndarray:
        return self._x[: self.count]

    @property
    def last_state(self) -> np.ndarray:
        return self._x[self.count - 1].copy()

    def covers(self, s: float) -> bool:
        return self._tl[0] <= s <= self._tl[-1]

    def interpolate(self, s: float) -> np.ndarray:
        tl = self._tl
        if not (tl[0] <= s <= tl[-1]):
            raise OutOfRangeError(
                f"query s={s!r} outside covered span [{tl[0]!r}, {tl[-1]!r}]"
            )
        k = bisect_right(tl, s) - 1
        if tl[k] == s:
            return self._x[k].copy()
        return kernels.hermite_eval(self._t, self._x, self._dl, self._dr, self.count, float(s))

    def interpolate_many(self, ss) -> np.ndarray:
        ss = np.asarray(ss, dtype=float)
        tl = self._tl
        if ss.size and (ss.min() < tl[0] or ss.max() > tl[-1]):
            raise OutOfRangeError(
                f"queries [{ss.min()!r}, {ss.max()!r}] outside covered span [{tl[0]!r}, {tl[-1]!r}]"
            )
        return kernels.hermite_many(self._t, self._x, self._dl, self._dr, self.count, ss)

    def segment(self, t: float, now: Optional[np.ndarray] = None) -> "Segment":
        return Segment(t, self.interpolate(t) if now is None else now, self)

    def sup_norm(self, t: float, tau: Optional[float] = None) -> float:
        """sup over s in [t - tau, t] of ||x(s)||, taken over the stored knots."""
        tau = self.tau if tau is None else tau
        ts = self.times
        mask = (ts >= t - tau - 1e-12) & (ts <= t + 1e-12)
        return float(np.linalg.norm(self.states[mask], axis=1).max())


def interpolate(history: HistoryTrajectory, s: float) -> np.ndarray:
    return history.interpolate(s)


def _numeric_derivative(phi, s, tau, d=1e-6):
    lo = max(s - d, -tau)
    hi = min(s + d, 0.0)
    a = np.atleast_1d(np.asarray(phi(lo), dtype=float))
    b = np.atleast_1d(np.asarray(phi(hi), dtype=float))
    return (b - a) / (hi - lo)


class Segment:
    """The state segment x_t seen by a right-hand side.

    ``seg(0.0)`` (or ``seg.now``) is the current state, possibly an RK
    stage value; ``seg(theta)`` for theta in [-tau, 0) reads the history.
    """

    __slots__ = ("t", "now", "_past", "tau")

    def __init__(self, t, now, past, tau=None):
        self.t = t
        self.now = now
        self._past = past
        self.tau = past.tau if tau is None else tau

    def __call__(self, theta: float) -> np.ndarray:
        if theta == 0.0:
            return self.now
        if theta < -self.tau - 1e-12 or theta > 0:
            raise OutOfRangeError(f"segment offset {theta} outside [-{self.tau}, 0]")
        if isinstance(self._past, HistoryTrajectory):
            return self._past.interpolate(self.t + theta)
        return np.asarray(self._past(theta), dtype=float)


class FunctionSegment(Segment):
    """Segment backed by a plain callable theta -> state (used for sampling)."""

    def __init__(self, fn, tau):
        now = np.asarray(fn(0.0), dtype=float)
        super().__init__(0.0, now, fn, tau)


# ---------------------------------------------------------------------------
# system models


@dataclass
class SystemModel:
    """x'(t) = f(t, x_t, u), u = k(x(t_i)), x_{t0} = phi."""

    dim_state: int
    dim_input: int
    rhs: Callable  # (t, Segment, u) -> ndarray
    feedback: Callable  # x -> u
    tau: float
    initial_fn: Callable  # s in [-tau, 0] -> x
    initial_deriv: Optional[Callable] = None
    name: str = "model"

    def __post_init__(self):
        if self.dim_state < 1 or self.dim_input < 1:
            raise ConfigurationError("state and input dimensions must be >= 1")
        if not self.tau > 0:
            raise ConfigurationError(f"delay horizon tau must be positive, got {self.tau}")

    def f(self, t, seg, u) -> np.ndarray:
        return np.asarray(self.rhs(t, seg, u), dtype=float)

    def k(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.feedback(x), dtype=float))

    def check_zero_solution(self, t: float = 0.0, atol: float = 0.0) -> bool:
        zero = np.zeros(self.dim_state)
        seg = Segment(t, zero, lambda theta: zero, self.tau)
        ok_f = np.all(np.abs(self.f(t, seg, np.zeros(self.dim_input))) <= atol)
        ok_k = np.all(np.abs(self.k(zero)) <= atol)
        return bool(ok_f and ok_k)

    def with_initial(self, phi, dphi=None) -> "SystemModel":
        return SystemModel(self.dim_state, self.dim_input, self.rhs, self.feedback, self.tau,
                           phi, dphi, self.name)
