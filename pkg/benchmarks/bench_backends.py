"""Compare the numba and numpy walk-on-spheres backends.

    python benchmarks/bench_backends.py [--paths 20000] [--repeat 3]

Each kernel runs once per backend to warm up (numba compiles on first use),
then ``--repeat`` timed runs; the best time is reported together with the
largest difference between the two backends' outputs.
"""

import argparse
import os
import time

import numpy as np

from stablecones import _kernels
from stablecones.cone import Cone
from stablecones.wos import Ball, WosConfig, exit_density_sums, exit_points, sample_ball_exit


def cases(paths):
    cone = Cone(3, 1.0734)
    x = np.array([1.0, 0.2, 0.3])
    cfg = WosConfig(paths=paths, batch_size=max(1, paths // 100), seed=1)
    targets = np.array([[0.5, 0.0, 0.8], [0.0, 0.9, -1.2], [1.0, 1.0, 1.5]])
    return {
        "ball_exit": lambda: sample_ball_exit(np.zeros(3), 1.0, 0.5, 10 * paths, seed=1)[0],
        "exit_points_cone": lambda: exit_points(cone, x, 0.5, cfg)[0],
        "exit_density_cone": lambda: exit_density_sums(cone, x, targets, 0.5, cfg)[0],
        "exit_points_ball": lambda: exit_points(Ball((0.0, 0.0, 0.0), 1.0), np.array([0.3, 0, 0]), 0.7, cfg)[0],
    }


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--paths", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=3)
    a = p.parse_args()
    saved = os.environ.get(_kernels.ENV_VAR)
    print(f"{'kernel':<20}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max diff':>12}")
    try:
        for name, fn in cases(a.paths).items():
            res = {}
            for be in ("numba", "numpy"):
                os.environ[_kernels.ENV_VAR] = be
                res[be] = best_time(fn, a.repeat)
            diff = float(np.max(np.abs(res["numba"][1] - res["numpy"][1])))
            tn, tp = res["numba"][0], res["numpy"][0]
            print(f"{name:<20}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}{diff:>12.2e}")
    finally:
        if saved is None:
            os.environ.pop(_kernels.ENV_VAR, None)
        else:
            os.environ[_kernels.ENV_VAR] = saved


if __name__ == "__main__":
    main()
