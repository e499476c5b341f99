"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]

Each kernel is warmed up once (so compile time is excluded), checked for
agreement between the two paths, and then timed.  ``--end-to-end`` also
times one default simulate run in two subprocesses, with and without
ETCDELAY_DISABLE_NUMBA.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from etcdelay import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    n = 12_000
    ts = np.cumsum(rng.uniform(0.001, 0.01, n))
    xs = rng.standard_normal((n, 2))
    dl = rng.standard_normal((n, 2))
    dr = dl.copy()
    ss = np.sort(rng.uniform(ts[0], ts[-1], 401))
    yield ("hermite_many (401 queries)", kernels.hermite_many_numba, kernels.hermite_many_numpy,
           (ts, xs, dl, dr, n, ss))
    yield ("hermite_eval (single query)", kernels.hermite_eval_numba, kernels.hermite_eval_numpy,
           (ts, xs, dl, dr, n, float(ss[200])))
    vals = rng.standard_normal(200_000)
    yield ("sliding_window_max (2e5, w=200)", kernels.sliding_window_max_numba,
           kernels.sliding_window_max_numpy, (vals, 200))
    hist = rng.uniform(0.1, 2.0, 201)
    steps = 20_000
    yield ("halanay_extremal (2e4 steps)", kernels.halanay_extremal_numba,
           kernels.halanay_extremal_numpy, (hist, 0.5, 1.5, steps, 0.005, np.ones(steps)))


def end_to_end():
    code = ("import time; from etcdelay.chatter import *; "
            "from etcdelay.engine import simulate, IntegratorConfig; "
            "m=build_chatter_model(); c=build_chatter_certificate(); tr=build_chatter_trigger(); "
            "simulate(m,tr,c,IntegratorConfig(t_end=2.0)); t=time.perf_counter(); "
            "simulate(m,tr,c,IntegratorConfig()); print(time.perf_counter()-t)")
    out = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, ETCDELAY_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                              text=True, check=True)
        out[label] = float(proc.stdout.strip())
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba not importable; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<34}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, fast, slow, a in cases(rng):
        ref, got = slow(*a), fast(*a)  # warm-up and agreement
        if not np.allclose(ref, got, rtol=1e-12, atol=1e-12):
            print(f"{name}: numba and numpy results differ")
            return 1
        tf = best_of(lambda: fast(*a), args.repeat)
        ts = best_of(lambda: slow(*a), max(1, args.repeat // 2))
        print(f"{name:<34}{tf * 1e3:>12.3f}{ts * 1e3:>12.3f}{ts / tf:>9.1f}x")
    if args.end_to_end:
        e = end_to_end()
        print(f"{'simulate, default run':<34}{e['numba'] * 1e3:>12.0f}{e['numpy'] * 1e3:>12.0f}"
              f"{e['numpy'] / e['numba']:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
