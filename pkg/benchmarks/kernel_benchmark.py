"""Compiled-extension vs NumPy-fallback timings for the hot kernels.

Runs each distance kernel on score-batch-sized inputs and the ADMM chunk
through full planner QP solves, once per backend, and prints a table of
median wall times. The two backends are imported side by side, so this
does not depend on SUSGUARD_PURE_PYTHON.

Usage: python3 benchmarks/kernel_benchmark.py [--reps 5] [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import susguard._kernels as K
from susguard._kernels import fallback

try:
    from susguard._kernels import _core
except ImportError:
    _core = None

from susguard.mpc import mpc_config_from_dict
from susguard.mpc.planner import plan_goal_mpc

_SWAPPED = ("pair_sqdist", "min_sqdist", "argmin_sqdist", "loo_min_sqdist", "admm_chunk")


class use_backend:
    """Temporarily rebind the kernel functions the solver sees."""

    def __init__(self, module):
        self.module = module

    def __enter__(self):
        self.saved = {name: getattr(K, name) for name in _SWAPPED}
        for name in _SWAPPED:
            setattr(K, name, getattr(self.module, name))

    def __exit__(self, *exc):
        for name, fn in self.saved.items():
            setattr(K, name, fn)


def median_time(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def distance_cases(quick):
    rng = np.random.default_rng(0)
    scale = 4 if quick else 1
    ref = rng.normal(size=(1000 // scale, 9))
    queries = rng.normal(size=(20000 // scale, 9))
    pts = rng.normal(size=(2000 // scale, 9))
    a = rng.normal(size=(20000 // scale, 9))
    b = rng.normal(size=(20000 // scale, 9))
    return [
        ("pair_sqdist", lambda m: m.pair_sqdist(a, b)),
        ("min_sqdist", lambda m: m.min_sqdist(ref, queries)),
        ("argmin_sqdist", lambda m: m.argmin_sqdist(ref, queries)),
        ("loo_min_sqdist", lambda m: m.loo_min_sqdist(pts)),
    ]


def solver_case(quick):
    config = mpc_config_from_dict(
        {"mpc": {"goal_state": [0.0, 0.0, 1.5, 0, 0, 0, 0, 0, 0], "solver_tolerance": 1e-4}}
    )
    x0 = np.array([-4.0, -4.0, 0.5, 0, 0, 0, 0, 0, 0])
    n_solves = 1 if quick else 3

    def run():
        for _ in range(n_solves):
            # cold start: the whole transient runs through admm_chunk
            plan_goal_mpc(x0, config.goal_state, config, None)

    return "planner_qp_solve", run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=5, help="repetitions per case (median reported)")
    ap.add_argument("--quick", action="store_true", help="smaller inputs for a smoke run")
    args = ap.parse_args()

    if _core is None:
        print("compiled extension unavailable; timing the fallback only")
    backends = [("numpy", fallback)] + ([("compiled", _core)] if _core else [])

    rows = []
    for name, fn in distance_cases(args.quick):
        timings = {}
        for bname, module in backends:
            out = fn(module)  # warm up and keep results comparable
            timings[bname] = median_time(lambda: fn(module), args.reps)
            del out
        rows.append((name, timings))

    sname, srun = solver_case(args.quick)
    timings = {}
    for bname, module in backends:
        with use_backend(module):
            srun()
            timings[bname] = median_time(srun, max(2, args.reps // 2))
    rows.append((sname, timings))

    width = max(len(r[0]) for r in rows)
    header = f"{'kernel':<{width}}  {'numpy [ms]':>12}"
    if _core:
        header += f"  {'compiled [ms]':>14}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, timings in rows:
        line = f"{name:<{width}}  {timings['numpy'] * 1e3:>12.3f}"
        if _core:
            spd = timings["numpy"] / timings["compiled"]
            line += f"  {timings['compiled'] * 1e3:>14.3f}  {spd:>7.2f}x"
        print(line)


if __name__ == "__main__":
    main()
