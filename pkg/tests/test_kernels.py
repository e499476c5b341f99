"""Compiled and fallback kernels against brute-force references."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etcdelay import kernels


def _knots(rng, n=40, dim=3):
    ts = np.cumsum(rng.uniform(0.01, 0.2, n))
    xs = rng.standard_normal((n, dim))
    dl = rng.standard_normal((n, dim))
    dr = dl.copy()
    dr[::5] += 1.0  # derivative jumps at some knots
    return ts, xs, dl, dr


def test_hermite_reproduces_cubic():
    # cubic Hermite is exact for cubics when derivatives are exact
    def p(t):
        return 1.0 - 2.0 * t + 0.5 * t**2 + 0.3 * t**3

    def dp(t):
        return -2.0 + t + 0.9 * t**2

    ts = np.array([0.0, 0.3, 1.1, 2.0])
    xs = p(ts)[:, None]
    d = dp(ts)[:, None]
    ss = np.linspace(0.0, 2.0, 57)
    for fn in (kernels.hermite_many_numpy, kernels.hermite_many_numba):
        out = fn(ts, xs, d, d, 4, ss)
        assert np.allclose(out[:, 0], p(ss), atol=1e-13)


def test_hermite_exact_at_knots(rng):
    ts, xs, dl, dr = _knots(rng)
    for fn in (kernels.hermite_many_numpy, kernels.hermite_many_numba):
        assert np.array_equal(fn(ts, xs, dl, dr, ts.size, ts), xs)


def test_hermite_variants_agree(rng):
    ts, xs, dl, dr = _knots(rng)
    ss = rng.uniform(ts[0], ts[-1], 500)
    ref = np.array([kernels.hermite_eval_numpy(ts, xs, dl, dr, ts.size, s) for s in ss])
    for fn in (kernels.hermite_many_numpy, kernels.hermite_many_numba):
        assert np.allclose(fn(ts, xs, dl, dr, ts.size, ss), ref, rtol=0, atol=1e-13)
    single = np.array([kernels.hermite_eval_numba(ts, xs, dl, dr, ts.size, s) for s in ss])
    assert np.allclose(single, ref, rtol=0, atol=1e-13)


def test_hermite_uses_right_then_left_derivative():
    # interval [0, 1]: start slope from dr[0], end slope from dl[1]
    ts = np.array([0.0, 1.0, 2.0])
    xs = np.zeros((3, 1))
    dl = np.array([[5.0], [0.0], [0.0]])
    dr = np.array([[1.0], [7.0], [0.0]])
    eps = 1e-7
    out = kernels.hermite_many_numpy(ts, xs, dl, dr, 3, np.array([eps, 1.0 - eps]))
    assert out[0, 0] / eps == pytest.approx(1.0, rel=1e-5)
    assert -out[1, 0] / eps == pytest.approx(0.0, abs=1e-5)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=200),
    st.integers(1, 50),
)
def test_sliding_window_max_matches_brute_force(vals, width):
    v = np.asarray(vals, dtype=float)
    ref = np.array([v[max(0, i - width + 1) : i + 1].max() for i in range(v.size)])
    assert np.array_equal(kernels.sliding_window_max_numpy(v, width), ref)
    assert np.array_equal(kernels.sliding_window_max_numba(v, width), ref)


def _halanay_brute(hist, g1, g2, n_steps, h, damping):
    """Same RK4 scheme with an O(N) window scan per stage."""
    N = hist.size - 1
    buf = list(hist)
    g0 = hist[-1]
    for k in range(n_steps):
        cur = N + k
        g = buf[cur]
        s_now = max(buf[k : cur + 1])
        w = max(buf[k + 1 : cur + 1]) if cur >= k + 1 else 0.0
        d = damping[k]
        k1 = d * (g1 * g0 + g2 * s_now)
        k2 = d * (g1 * g0 + g2 * max(w, g + 0.5 * h * k1))
        k3 = d * (g1 * g0 + g2 * max(w, g + 0.5 * h * k2))
        k4 = d * (g1 * g0 + g2 * max(w, g + h * k3))
        buf.append(g + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
    return np.array(buf[N:])


@pytest.mark.parametrize("seed", range(5))
def test_halanay_kernel_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    hist = rng.uniform(0.0, 2.0, 31)
    damp = rng.random(120)
    g1, g2, h = 0.7, 1.3, 0.01
    ref = _halanay_brute(hist, g1, g2, 120, h, damp)
    for fn in (kernels.halanay_extremal_numpy, kernels.halanay_extremal_numba):
        assert np.allclose(fn(hist, g1, g2, 120, h, damp), ref, rtol=1e-14, atol=0)


def test_env_flag_selects_fallback(monkeypatch):
    import importlib

    monkeypatch.setenv("ETCDELAY_DISABLE_NUMBA", "1")
    mod = importlib.reload(kernels)
    try:
        assert not mod.USE_NUMBA
        assert mod.hermite_many is mod.hermite_many_numpy
        assert mod.halanay_extremal is mod.halanay_extremal_numpy
    finally:
        monkeypatch.undo()
        importlib.reload(kernels)


def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    path = Path(__file__).resolve().parent.parent / "benchmarks" / "bench_kernels.py"
    mod = runpy.run_path(str(path))
    assert mod["main"](["--repeat", "1"]) == 0
    assert "halanay_extremal" in capsys.readouterr().out
