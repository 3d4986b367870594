#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Usage: python bench/bench_kernels.py [--quick]

Times the four hot kernels on a range of dimensions, then a full MAP fit
through each backend. The compiled extension must be built for the
comparison to be meaningful (pip install -e . --no-build-isolation).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from grassbin._kernels import _ref

try:
    from grassbin._kernels import _fast
except ImportError:
    _fast = None


def _time(fn, reps):
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        best = min(best, (time.perf_counter() - t0) / reps)
    return best


def _fmt_s(seconds):
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    if seconds < 1.0:
        return f"{seconds * 1e3:8.2f} ms"
    return f"{seconds:8.3f} s "


def bench_kernels(quick=False):
    rng = np.random.default_rng(0)
    sizes = (5, 8, 10) if quick else (5, 8, 10, 12)
    print(f"{'kernel':<22}{'p':>3}{'numpy':>14}{'cython':>14}{'speedup':>9}")
    for p in sizes:
        sigma = rng.normal(0, 0.3 / np.sqrt(p), (p, p))
        np.fill_diagonal(sigma, rng.uniform(0.3, 0.7, p))
        lam = np.linalg.inv(sigma)
        det_lam = float(np.linalg.det(lam))
        w = rng.uniform(0.5, 2.0, 2 ** p)
        shifted = lam - np.eye(p)
        reps = max(2, int(2 ** (14 - p)))
        cases = [
            ("det", lambda k: (lambda: k.det(sigma))),
            ("joint_table", lambda k: (lambda: k.joint_table(lam, det_lam))),
            ("sum_principal_minors", lambda k: (lambda: k.sum_principal_minors(shifted))),
            ("p0_witness", lambda k: (lambda: k.p0_witness(shifted, 1e-10))),
            ("loglik_grad", lambda k: (lambda: k.loglik_grad(lam, w))),
        ]
        for name, make in cases:
            t_ref = _time(make(_ref), reps)
            if _fast is None:
                print(f"{name:<22}{p:>3}{_fmt_s(t_ref):>14}{'n/a':>14}")
            else:
                t_fast = _time(make(_fast), reps)
                print(f"{name:<22}{p:>3}{_fmt_s(t_ref):>14}{_fmt_s(t_fast):>14}"
                      f"{t_ref / t_fast:>8.1f}x")
        print()


def bench_fit(quick=False):
    import os
    import subprocess
    import sys

    code = r"""
import time
import numpy as np
from grassbin import FitConfig, fit_map, kernel_backend
from grassbin.experiments import reference_model
from grassbin.sampling import sample, seeded_rng

model = reference_model()
trials = __TRIALS__
t0 = time.time()
for t in range(trials):
    data = sample(model, 500, seeded_rng(1000 + t))
    fit_map(data, FitConfig())
dt = (time.time() - t0) / trials
print(f"  {kernel_backend():>7}: {dt * 1000:7.1f} ms per MAP fit (N=500, p=5)")
"""
    trials = 3 if quick else 10
    print("MAP fit comparison:", flush=True)
    for backend in ("cython", "numpy"):
        env = dict(os.environ, GRASSBIN_BACKEND=backend)
        subprocess.run([sys.executable, "-c", code.replace("__TRIALS__", str(trials))],
                       env=env, check=True)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="fewer sizes and reps")
    args = ap.parse_args()
    bench_kernels(args.quick)
    bench_fit(args.quick)
