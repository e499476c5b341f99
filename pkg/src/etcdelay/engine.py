"""Fixed-step RK4 integration of the closed loop with held control."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigurationError,
    HistoryTrajectory,
    IntegrationBlowup,
    Segment,
    SystemModel,
    ZenoGuardError,
)
from .events import EventLog, TriggerConfig, residual

ZENO_GUARD_COUNT = 5
# states beyond this magnitude would overflow |x|^2 in the trigger
BLOWUP_LIMIT = 1e100


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 0.005
    t_end: float = 60.0
    event_time_tol: float = 1e-9
    zeno_floor: float = 1e-8

    def validate(self, tau: float) -> int:
        """Check the config against delay ``tau``; return the steps per tau."""
        if not self.h > 0:
            raise ConfigurationError(f"integrator.h must be positive, got {self.h}")
        n = round(tau / self.h)
        if n < 1 or abs(n * self.h - tau) > 1e-9 * tau:
            raise ConfigurationError(f"integrator.h={self.h} must divide tau={tau} exactly")
        if not self.t_end > 0:
            raise ConfigurationError(f"integrator.t_end must be positive, got {self.t_end}")
        if not 0 < self.event_time_tol < self.h:
            raise ConfigurationError("integrator.event_time_tol must lie in (0, h)")
        if self.zeno_floor < 2 * self.event_time_tol:
            raise ConfigurationError("integrator.zeno_floor must be >= 2*event_time_tol")
        return n

    def n_steps(self, t0: float = 0.0) -> int:
        return int(math.ceil((self.t_end - t0) / self.h - 1e-9))


@dataclass
class SimulationResult:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    eps_norm: np.ndarray
    residual: np.ndarray
    event_flag: np.ndarray
    V: np.ndarray
    event_log: EventLog
    history: HistoryTrajectory
    model: SystemModel
    trigger: TriggerConfig | None = None
    config: IntegratorConfig | None = None
    stats: dict = field(default_factory=dict)

    @property
    def x_norm(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis=1)

    @property
    def n_events(self) -> int:
        """Events after the initial sample at t0."""
        return max(len(self.event_log) - 1, 0)

    @property
    def gaps(self) -> np.ndarray:
        return self.event_log.gaps


class _Records:
    def __init__(self):
        self.t, self.x, self.u, self.eps, self.r, self.flag = [], [], [], [], [], []

    def add(self, t, x, u, eps, r, flag):
        self.t.append(t)
        self.x.append(x.copy())
        self.u.append(u)
        self.eps.append(eps)
        self.r.append(r)
        self.flag.append(flag)


def _rk4(f, hist: HistoryTrajectory, t, x, h, k1):
    """One classical RK4 step; ``f(t, seg)`` sees delayed values via ``hist``."""
    k2 = f(t + 0.5 * h, Segment(t + 0.5 * h, x + 0.5 * h * k1, hist))
    k3 = f(t + 0.5 * h, Segment(t + 0.5 * h, x + 0.5 * h * k2, hist))
    k4 = f(t + h, Segment(t + h, x + h * k3, hist))
    xn = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.abs(xn) < BLOWUP_LIMIT):
        raise IntegrationBlowup(t + h)
    return xn


def step(model: SystemModel, history: HistoryTrajectory, t: float, u_held, h: float) -> np.ndarray:
    """Advance x(t) -> x(t + h) with the input held at ``u_held``.

    Delayed arguments at stage times are read from ``history`` by
    interpolation, so the history must reach back to t - tau and forward
    to t.
    """
    u_held = np.atleast_1d(np.asarray(u_held, dtype=float))
    x = history.interpolate(t)

    def f(s, seg):
        return model.f(s, seg, u_held)

    k1 = f(t, Segment(t, x, history))
    if not np.all(np.isfinite(k1)):
        raise IntegrationBlowup(t)
    return _rk4(f, history, t, x, h, k1)


def _check_finite(v, t):
    if not np.all(np.isfinite(v)):
        raise IntegrationBlowup(t)
    return v


def _hermite_mid(x0, x1, d0, d1, h):
    return 0.5 * (x0 + x1) + 0.125 * h * (d0 - d1)


def simulate(model: SystemModel, trig: TriggerConfig, lyap=None,
             cfg: IntegratorConfig = IntegratorConfig(), *, fire_events: bool = True
             ) -> SimulationResult:
    """Integrate the event-triggered closed loop on [t0, t0 + t_end].

    The trigger residual is sampled at every grid point and at the step
    midpoint.  A sign change (strictly positive sample) is located by
    bisection on partial RK4 steps; at the located time the control is
    resampled, eps resets to 0 and integration resumes from there.
    Delay-propagated breakpoints t_i + tau split steps so that the kink of
    the delayed argument never sits inside an RK4 step.

    ``fire_events=False`` keeps sampling the residual but never updates
    the control; it exists as a negative control for enforcement checks.
    """
    cfg.validate(model.tau)
    h = cfg.h
    t0 = trig.t0
    tau = model.tau
    n_steps = cfg.n_steps()
    hist = HistoryTrajectory.from_initial(
        model.initial_fn, t0, tau, h, model.initial_deriv,
        capacity=model_capacity(n_steps, tau, h),
    )
    x = hist.last_state
    _check_finite(x, t0)
    u = model.k(x)
    sample = x.copy()
    log = EventLog()
    log.add(t0, x)

    def f_held(uh):
        return lambda s, seg: model.f(s, seg, uh)

    f = f_held(u)
    fx = _check_finite(f(t0, Segment(t0, x, hist)), t0)
    hist.set_right_derivative(fx)

    def r_at(s, xs):
        return residual(trig, s, xs, sample - xs)

    rec = _Records()
    rec.add(t0, x, u, 0.0, r_at(t0, x), 1)
    breakpoints: list[float] = []
    small_gaps = 0
    n_bisect = 0
    t = t0
    k = 0
    snap = 1e-12 * max(1.0, abs(t0) + cfg.t_end)
    while k < n_steps:
        t_grid = t0 + (k + 1) * h
        target = t_grid
        while breakpoints and breakpoints[0] <= t + snap:
            breakpoints.pop(0)
        if breakpoints and breakpoints[0] < t_grid - snap:
            target = breakpoints[0]
        dt = target - t
        x_new = _rk4(f, hist, t, x, dt, fx)
        f_new = _check_finite(f(target, Segment(target, x_new, hist)), target)

        hi = None
        if fire_events:
            x_mid = _hermite_mid(x, x_new, fx, f_new, dt)
            if r_at(t + 0.5 * dt, x_mid) > 0:
                # confirm with an actual partial step
                xm = _rk4(f, hist, t, x, 0.5 * dt, fx)
                if r_at(t + 0.5 * dt, xm) > 0:
                    hi, x_hi = t + 0.5 * dt, xm
            if hi is None and r_at(target, x_new) > 0:
                hi, x_hi = target, x_new

        if hi is not None:
            lo = t
            while hi - lo > cfg.event_time_tol:
                mid = 0.5 * (lo + hi)
                xm = _rk4(f, hist, t, x, mid - t, fx)
                n_bisect += 1
                if r_at(mid, xm) > 0:
                    hi, x_hi = mid, xm
                else:
                    lo = mid
            te, xe = hi, x_hi
            on_grid = te >= target - snap
            if on_grid:
                te, xe = target, x_new
            fl = _check_finite(f(te, Segment(te, xe, hist)), te)
            gap = te - log.times[-1]
            small_gaps = small_gaps + 1 if gap < cfg.zeno_floor else 0
            log.add(te, xe)
            if small_gaps > ZENO_GUARD_COUNT:
                raise ZenoGuardError(log.times)
            u = model.k(xe)
            sample = xe.copy()
            f = f_held(u)
            fr = _check_finite(f(te, Segment(te, xe, hist)), te)
            hist.append(te, xe, fl, fr)
            rec.add(te, xe, u, 0.0, r_at(te, xe), 1)
            breakpoints.append(te + tau)
            t, x, fx = te, xe, fr
            if on_grid and target == t_grid:
                k += 1
            continue

        hist.append(target, x_new, f_new, f_new)
        t, x, fx = target, x_new, f_new
        if target == t_grid:
            rec.add(t, x, u, float(np.linalg.norm(sample - x)), r_at(t, x), 0)
            k += 1

    result = _finish(rec, log, hist, model, trig, cfg, lyap)
    result.stats["bisection_steps"] = n_bisect
    return result


def model_capacity(n_steps, tau, h):
    return n_steps + round(tau / h) + 64


def simulate_continuous(model: SystemModel, cfg: IntegratorConfig = IntegratorConfig(),
                        lyap=None, t0: float = 0.0) -> SimulationResult:
    """Baseline loop with u = k(x(t)) re-evaluated at every RK4 stage."""
    cfg.validate(model.tau)
    h = cfg.h
    n_steps = cfg.n_steps()
    hist = HistoryTrajectory.from_initial(
        model.initial_fn, t0, model.tau, h, model.initial_deriv,
        capacity=model_capacity(n_steps, model.tau, h),
    )

    def f(s, seg):
        return model.f(s, seg, model.k(seg.now))

    x = hist.last_state
    fx = _check_finite(f(t0, Segment(t0, x, hist)), t0)
    hist.set_right_derivative(fx)
    rec = _Records()
    rec.add(t0, x, model.k(x), 0.0, math.nan, 0)
    t = t0
    for k in range(n_steps):
        tn = t0 + (k + 1) * h
        x = _rk4(f, hist, t, x, tn - t, fx)
        fx = _check_finite(f(tn, Segment(tn, x, hist)), tn)
        hist.append(tn, x, fx, fx)
        rec.add(tn, x, model.k(x), 0.0, math.nan, 0)
        t = tn
    return _finish(rec, EventLog(), hist, model, None, cfg, lyap)


def _finish(rec, log, hist, model, trig, cfg, lyap):
    t = np.asarray(rec.t)
    if lyap is not None:
        from .lyapunov import eval_V

        V = np.array([eval_V(lyap, ti, hist) for ti in t])
    else:
        V = np.full(t.shape, np.nan)
    return SimulationResult(
        t=t,
        x=np.asarray(rec.x),
        u=np.asarray(rec.u),
        eps_norm=np.asarray(rec.eps),
        residual=np.asarray(rec.r),
        event_flag=np.asarray(rec.flag, dtype=np.int8),
        V=V,
        event_log=log,
        history=hist,
        model=model,
        trigger=trig,
        config=cfg,
    )
