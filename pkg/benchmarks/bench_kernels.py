"""Timing comparison of the compiled scalar kernel and its Python twin.

Run as a script:

    python benchmarks/bench_kernels.py [--steps N] [--repeats R]

Both backends integrate the same tamed path (identical Gaussian input)
and the outputs are compared bitwise before timings are reported, so the
benchmark doubles as an end-to-end equivalence check.
"""

import argparse
import math
import time

import numpy as np

from noiselab._kernels import _pykernels

try:
    from noiselab._kernels import _ckernels
except ImportError:
    _ckernels = None


def _run(kernel, u0, dt, n_steps, omega, stride):
    cap = n_steps // stride + 4
    rec_t = np.empty(cap)
    rec_u = np.empty(cap)
    out = kernel.scalar_path(u0, dt, n_steps, omega, 1, 1.0, 1.0, 1.0,
                             1e6, 1e-12, stride, rec_t, rec_u)
    return out, rec_t[:out[0]].copy(), rec_u[:out[0]].copy()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.Generator(np.random.Philox(key=np.array([7, 0],
                                                            dtype=np.uint64)))
    dt = 1e-5
    omega = rng.standard_normal(args.steps) * math.sqrt(dt)
    stride = 100

    out_py, t_py, u_py = _run(_pykernels, 0.5, dt, args.steps, omega, stride)
    if _ckernels is None:
        print("compiled kernel not built; python backend only")
    else:
        out_c, t_c, u_c = _run(_ckernels, 0.5, dt, args.steps, omega, stride)
        events_match = (out_py[2] == out_c[2]
                        or (math.isnan(out_py[2]) and math.isnan(out_c[2])))
        same = (out_py[:2] == out_c[:2] and events_match
                and out_py[3] == out_c[3] and np.array_equal(t_py, t_c)
                and np.array_equal(u_py, u_c))
        print(f"outputs bitwise identical: {same}")
        if not same:
            raise SystemExit("backend mismatch, timings would be meaningless")

    def best_of(kernel) -> float:
        times = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            _run(kernel, 0.5, dt, args.steps, omega, stride)
            times.append(time.perf_counter() - t0)
        return min(times)

    py_s = best_of(_pykernels)
    print(f"python   kernel: {py_s * 1e3:9.2f} ms "
          f"({args.steps / py_s / 1e6:6.1f} Msteps/s)")
    if _ckernels is not None:
        c_s = best_of(_ckernels)
        print(f"compiled kernel: {c_s * 1e3:9.2f} ms "
              f"({args.steps / c_s / 1e6:6.1f} Msteps/s)")
        print(f"speedup: {py_s / c_s:.1f}x")


if __name__ == "__main__":
    main()
