import math

import numpy as np
import pytest

from etcdelay.core import (
    ConfigurationError,
    HistoryTrajectory,
    IntegrationBlowup,
    SystemModel,
    ZenoGuardError,
)
from etcdelay.engine import IntegratorConfig, simulate, simulate_continuous, step
from etcdelay.events import TriggerConfig


def scalar_model(rhs, phi=1.0, tau=1.0, feedback=None):
    return SystemModel(
        1, 1, rhs, feedback or (lambda x: np.zeros(1)), tau,
        lambda s: np.array([phi]), lambda s: np.zeros(1),
    )


def decay(t, seg, u):
    return -seg.now + u


def delayed_decay(t, seg, u):
    return -seg(-1.0) + u


def test_zero_dynamics_step_keeps_state():
    m = scalar_model(lambda t, seg, u: np.zeros(1), phi=3.5)
    hist = HistoryTrajectory.from_initial(m.initial_fn, 0.0, 1.0, 0.1, m.initial_deriv)
    assert step(m, hist, 0.0, np.zeros(1), 0.1)[0] == 3.5


def test_zero_dynamics_run_holds_initial_value():
    m = scalar_model(lambda t, seg, u: np.zeros(1), phi=-2.0)
    res = simulate_continuous(m, IntegratorConfig(h=0.1, t_end=5.0))
    assert np.all(res.x == -2.0)


def test_exponential_decay_closed_form():
    res = simulate_continuous(scalar_model(decay), IntegratorConfig(h=0.01, t_end=1.0))
    assert abs(res.x[-1, 0] - math.exp(-1.0)) < 1e-8
    assert np.max(np.abs(res.x[:, 0] - np.exp(-res.t))) < 1e-8


def test_delay_first_interval_is_linear():
    # x' = -x(t-1), x = 1 on [-1, 0]  ->  x(t) = 1 - t on [0, 1]
    res = simulate_continuous(scalar_model(delayed_decay), IntegratorConfig(h=0.01, t_end=1.0))
    assert abs(res.x[-1, 0]) < 1e-8
    assert np.max(np.abs(res.x[:, 0] - (1.0 - res.t))) < 1e-8


def test_delay_second_interval_closed_form():
    # on [1, 2]: x(t) = 1 - t + (t-1)^2 / 2
    res = simulate_continuous(scalar_model(delayed_decay), IntegratorConfig(h=0.01, t_end=2.0))
    t = res.t
    ref = np.where(t <= 1.0, 1.0 - t, 1.0 - t + 0.5 * (t - 1.0) ** 2)
    assert np.max(np.abs(res.x[:, 0] - ref)) < 1e-10


def _observed_order(rhs, exact, t_end=1.0, hs=(0.02, 0.01, 0.005)):
    errs = []
    for h in hs:
        res = simulate_continuous(scalar_model(rhs), IntegratorConfig(h=h, t_end=t_end))
        errs.append(abs(res.x[-1, 0] - exact))
    return [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)], errs


def test_rk4_order_on_linear_decay():
    orders, errs = _observed_order(decay, math.exp(-1.0))
    assert min(orders) >= 3.5, (orders, errs)


def test_rk4_order_on_delay_equation():
    # nonlinear delay equation over three delay intervals, fine-step reference;
    # breakpoints at multiples of tau fall on knots, so the order survives
    def nonlinear(t, seg, u):
        return -seg(-1.0) * (1.0 + 0.5 * np.sin(seg.now))

    hs = (0.05, 0.025, 0.0125)
    ref = simulate_continuous(scalar_model(nonlinear), IntegratorConfig(h=0.00125, t_end=3.0))
    errs = []
    for h in hs:
        res = simulate_continuous(scalar_model(nonlinear), IntegratorConfig(h=h, t_end=3.0))
        errs.append(abs(res.x[-1, 0] - ref.x[-1, 0]))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 3.5, (orders, errs)


@pytest.mark.parametrize(
    "kw",
    [dict(h=0.3), dict(h=0.0), dict(t_end=-1.0), dict(event_time_tol=0.1),
     dict(event_time_tol=1e-6, zeno_floor=1e-7)],
)
def test_integrator_config_validation(kw):
    with pytest.raises(ConfigurationError):
        IntegratorConfig(**kw).validate(1.0)


def test_zero_solution_has_no_events():
    m = scalar_model(decay, phi=0.0, feedback=lambda x: -x)
    trig = TriggerConfig(sigma=0.2, a=0.0, b=1.0)
    res = simulate(m, trig, None, IntegratorConfig(h=0.01, t_end=5.0))
    assert res.n_events == 0
    assert np.all(res.x == 0.0)


def test_held_input_is_piecewise_constant(chatter_run):
    res = chatter_run
    ev_t = np.asarray(res.event_log.times)
    ev_u = np.array([res.model.k(x) for x in res.event_log.sampled_states])
    idx = np.searchsorted(ev_t, res.t, side="right") - 1
    assert np.array_equal(res.u, ev_u[idx])


def test_eps_norm_matches_latest_sample(chatter_run):
    res = chatter_run
    ev_t = np.asarray(res.event_log.times)
    ev_x = np.asarray(res.event_log.sampled_states)
    idx = np.searchsorted(ev_t, res.t, side="right") - 1
    eps = np.linalg.norm(ev_x[idx] - res.x, axis=1)
    assert np.allclose(res.eps_norm, eps, rtol=0, atol=1e-15)
    assert np.all(res.eps_norm[res.event_flag == 1] == 0.0)


def test_record_layout(chatter_run, default_icfg):
    res = chatter_run
    n_grid = math.ceil(default_icfg.t_end / default_icfg.h)
    assert res.t.size == n_grid + res.n_events + 1
    assert np.all(np.diff(res.t) > 0)
    assert res.t[0] == 0.0 and res.t[-1] == pytest.approx(60.0, abs=1e-9)
    assert int(res.event_flag.sum()) == len(res.event_log)
    assert res.event_log.times[0] == 0.0


def test_chatter_event_run_converges(chatter_run):
    assert 0 < chatter_run.n_events < 1000
    assert np.linalg.norm(chatter_run.x[-1]) < 0.05
    assert chatter_run.gaps.min() > 0


def test_chatter_feedback_run_converges(chatter_feedback_run):
    assert np.linalg.norm(chatter_feedback_run.x[-1]) < 0.05
    assert len(chatter_feedback_run.event_log) == 0


def test_step_halving_event_times(chatter_run, chatter_model, chatter_trig):
    # self-consistency at 10 * event_time_tol
    half = simulate(chatter_model, chatter_trig, None, IntegratorConfig(h=0.0025, t_end=60.0))
    assert half.n_events == chatter_run.n_events
    diff = np.abs(np.subtract(half.event_log.times, chatter_run.event_log.times))
    assert diff.max() <= 10 * 1e-9, f"max event-time shift {diff.max():.3e}"


def test_simulation_is_deterministic(chatter_model, chatter_trig):
    cfg = IntegratorConfig(h=0.01, t_end=10.0)
    r1 = simulate(chatter_model, chatter_trig, None, cfg)
    r2 = simulate(chatter_model, chatter_trig, None, cfg)
    assert np.array_equal(r1.x, r2.x)
    assert r1.event_log.times == r2.event_log.times


def test_zeno_guard_trips():
    # x' = u, u = -sign(x) sqrt|x| reaches 0 in finite time: gaps shrink geometrically
    m = scalar_model(lambda t, seg, u: u, phi=1.0,
                     feedback=lambda x: -np.sign(x) * np.sqrt(np.abs(x)))
    trig = TriggerConfig(sigma=0.25, a=0.0, b=1.0)
    with pytest.raises(ZenoGuardError) as info:
        simulate(m, trig, None, IntegratorConfig(h=0.01, t_end=5.0, zeno_floor=1e-3))
    gaps = np.diff(info.value.times)
    assert np.all(gaps[-6:] < 1e-3)


def test_blowup_detected():
    m = scalar_model(lambda t, seg, u: seg.now**2, phi=1.0)
    with pytest.raises(IntegrationBlowup) as info:
        simulate_continuous(m, IntegratorConfig(h=0.01, t_end=3.0))
    assert 0.9 < info.value.t < 3.0


def test_event_located_within_tolerance(chatter_run, chatter_trig):
    # just before each located event the residual is still non-positive
    from etcdelay.events import residual

    res = chatter_run
    hist = res.history
    times = res.event_log.times
    for i in range(1, len(times)):
        te = times[i]
        s = te - 2e-9
        x = hist.interpolate(s)
        r = residual(chatter_trig, s, x, res.event_log.sampled_states[i - 1] - x)
        assert r <= 1e-9
