"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Each kernel exists twice: ``*_numba`` (compiled with ``@njit``) and
``*_numpy`` (plain Python / vectorized numpy).  The unsuffixed name is
bound to one of them at import time.  Set ``ETCDELAY_DISABLE_NUMBA=1`` to
force the fallback, e.g. for debugging or on platforms without numba.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("ETCDELAY_DISABLE_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)


def _maybe_njit(fn):
    if HAVE_NUMBA:
        return njit(cache=True)(fn)
    return fn


# ---------------------------------------------------------------------------
# cubic Hermite dense output


def _hermite_interval(t0, t1, x0, x1, d0, d1, s, out):
    dt = t1 - t0
    th = (s - t0) / dt
    th2 = th * th
    th3 = th2 * th
    h00 = 2.0 * th3 - 3.0 * th2 + 1.0
    h10 = th3 - 2.0 * th2 + th
    h01 = -2.0 * th3 + 3.0 * th2
    h11 = th3 - th2
    for j in range(out.shape[0]):
        out[j] = h00 * x0[j] + h10 * dt * d0[j] + h01 * x1[j] + h11 * dt * d1[j]


def _hermite_eval_loop(ts, xs, dl, dr, count, s):
    """Evaluate the dense output at a single time ``s``.

    ``ts[:count]`` are knot times, ``dr`` is the right derivative used at
    the start of an interval and ``dl`` the left derivative used at its end.
    Exact at knots.
    """
    n = xs.shape[1]
    out = np.empty(n)
    k = np.searchsorted(ts[:count], s, side="right") - 1
    if k < 0:
        k = 0
    if ts[k] == s or k >= count - 1:
        for j in range(n):
            out[j] = xs[k, j]
        return out
    _hermite_interval(ts[k], ts[k + 1], xs[k], xs[k + 1], dr[k], dl[k + 1], s, out)
    return out


def _hermite_many_loop(ts, xs, dl, dr, count, ss):
    n = xs.shape[1]
    out = np.empty((ss.shape[0], n))
    for i in range(ss.shape[0]):
        out[i] = _hermite_eval_loop(ts, xs, dl, dr, count, ss[i])
    return out


def hermite_many_numpy(ts, xs, dl, dr, count, ss):
    ts = ts[:count]
    ss = np.asarray(ss, dtype=float)
    k = np.searchsorted(ts, ss, side="right") - 1
    k = np.clip(k, 0, count - 1)
    at_knot = (ts[k] == ss) | (k >= count - 1)
    kk = np.minimum(k, count - 2) if count > 1 else k
    out = xs[k].copy()
    idx = np.nonzero(~at_knot)[0]
    if idx.size:
        k0 = kk[idx]
        t0 = ts[k0]
        dt = ts[k0 + 1] - t0
        th = ((ss[idx] - t0) / dt)[:, None]
        th2 = th * th
        th3 = th2 * th
        out[idx] = (
            (2.0 * th3 - 3.0 * th2 + 1.0) * xs[k0]
            + (th3 - 2.0 * th2 + th) * dt[:, None] * dr[k0]
            + (-2.0 * th3 + 3.0 * th2) * xs[k0 + 1]
            + (th3 - th2) * dt[:, None] * dl[k0 + 1]
        )
    return out


hermite_eval_numpy = _hermite_eval_loop


if HAVE_NUMBA:
    _hermite_interval_jit = njit(cache=True)(_hermite_interval)

    @njit(cache=True)
    def hermite_eval_numba(ts, xs, dl, dr, count, s):
        n = xs.shape[1]
        out = np.empty(n)
        k = np.searchsorted(ts[:count], s, side="right") - 1
        if k < 0:
            k = 0
        if ts[k] == s or k >= count - 1:
            for j in range(n):
                out[j] = xs[k, j]
            return out
        _hermite_interval_jit(ts[k], ts[k + 1], xs[k], xs[k + 1], dr[k], dl[k + 1], s, out)
        return out

    @njit(cache=True)
    def hermite_many_numba(ts, xs, dl, dr, count, ss):
        n = xs.shape[1]
        m = ss.shape[0]
        out = np.empty((m, n))
        ks = np.searchsorted(ts[:count], ss, side="right") - 1
        for i in range(m):
            k = ks[i]
            if k < 0:
                k = 0
            if ts[k] == ss[i] or k >= count - 1:
                for j in range(n):
                    out[i, j] = xs[k, j]
            else:
                _hermite_interval_jit(ts[k], ts[k + 1], xs[k], xs[k + 1], dr[k], dl[k + 1],
                                      ss[i], out[i])
        return out

else:  # pragma: no cover
    hermite_eval_numba = _hermite_eval_loop
    hermite_many_numba = _hermite_many_loop


# ---------------------------------------------------------------------------
# sliding-window maximum (monotone deque)


def _sliding_window_max(values, width):
    """out[i] = max(values[max(0, i - width + 1) : i + 1])."""
    n = values.shape[0]
    out = np.empty(n)
    dq = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for i in range(n):
        while tail > head and values[dq[tail - 1]] <= values[i]:
            tail -= 1
        dq[tail] = i
        tail += 1
        if dq[head] <= i - width:
            head += 1
        out[i] = values[dq[head]]
    return out


sliding_window_max_numpy = _sliding_window_max
sliding_window_max_numba = _maybe_njit(_sliding_window_max)


# ---------------------------------------------------------------------------
# saturated Halanay dynamics


def _halanay_extremal(hist, gamma1, gamma2, n_steps, h, damping):
    """RK4 tabulation of g' = d_k * (gamma1*g(t0) + gamma2*sup_{[t-r,t]} g).

    ``hist`` holds N+1 samples on [t0-r, t0] with spacing h (so r = N*h).
    ``damping`` holds one factor in [0, 1] per step; all ones gives the
    extremal solution.  Returns the n_steps+1 samples on [t0, t0+n_steps*h].
    """
    nh = hist.shape[0]
    N = nh - 1
    buf = np.empty(nh + n_steps)
    for i in range(nh):
        buf[i] = hist[i]
    g0 = hist[N]
    dq = np.empty(nh + n_steps, dtype=np.int64)
    head = 0
    tail = 0
    for i in range(nh):
        while tail > head and buf[dq[tail - 1]] <= buf[i]:
            tail -= 1
        dq[tail] = i
        tail += 1
    base = gamma1 * g0
    for k in range(n_steps):
        cur = N + k
        g = buf[cur]
        # window at t covers indices [k, cur]
        while dq[head] < k:
            head += 1
        s_now = buf[dq[head]]
        # drop index k: stages after t only see (k, cur]
        if dq[head] == k:
            head += 1
        w = buf[dq[head]] if tail > head else 0.0
        d = damping[k]
        k1 = d * (base + gamma2 * s_now)
        y = g + 0.5 * h * k1
        k2 = d * (base + gamma2 * max(w, y))
        y = g + 0.5 * h * k2
        k3 = d * (base + gamma2 * max(w, y))
        y = g + h * k3
        k4 = d * (base + gamma2 * max(w, y))
        gn = g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nxt = cur + 1
        buf[nxt] = gn
        while tail > head and buf[dq[tail - 1]] <= gn:
            tail -= 1
        dq[tail] = nxt
        tail += 1
    return buf[N:].copy()


halanay_extremal_numpy = _halanay_extremal
halanay_extremal_numba = _maybe_njit(_halanay_extremal)


if USE_NUMBA:
    hermite_eval = hermite_eval_numba
    hermite_many = hermite_many_numba
    sliding_window_max = sliding_window_max_numba
    halanay_extremal = halanay_extremal_numba
else:
    hermite_eval = hermite_eval_numpy
    hermite_many = hermite_many_numpy
    sliding_window_max = sliding_window_max_numpy
    halanay_extremal = halanay_extremal_numpy
