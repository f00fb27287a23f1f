"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from temposync import kernels
from temposync._jit import HAVE_NUMBA
from temposync.dynamics import VAN_DER_POL, _csr, limit_cycle_point
from temposync.graph import vdp5_network
from temposync.greedy import RandomSpec, random_temporal_network


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_propagation(repeat):
    tn = random_temporal_network(RandomSpec(20, 5, 0.2, seed=1))
    masks = kernels.subset_masks(20, 5)
    arrays = kernels.compile_network(tn)
    rows = {}
    for backend in ("numba", "numpy"):
        kernels.propagate_batch(masks[:8], *arrays, backend=backend)  # warm-up / compile
        rows[backend] = best_of(lambda: kernels.propagate_batch(masks, *arrays, backend=backend), repeat)
    assert np.array_equal(rows["numba"][1], rows["numpy"][1])
    return f"propagate_batch, N=20, {masks.size} pin sets", rows


def bench_rk4(repeat):
    tn = vdp5_network()
    ptr, idx = _csr(tn.snapshots[0])
    ref0 = limit_cycle_point()
    Y0 = np.vstack([ref0, np.random.default_rng(0).uniform(-3, 3, (5, 2))])
    ctrl = np.zeros(5, dtype=bool)
    steps = 20000

    def go(backend):
        Y = Y0.copy()
        kernels.integrate(Y, VAN_DER_POL, ptr, idx, 225.0, 0.0, ctrl, 1e-6, 1e-5, steps, 1000, backend)
        return Y

    rows = {}
    for backend in ("numba", "numpy"):
        go(backend)
        rows[backend] = best_of(lambda: go(backend), repeat)
    assert np.allclose(rows["numba"][1], rows["numpy"][1], atol=1e-9)
    return f"RK4 integrate, N=5, {steps} steps", rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<44} {'numba s':>10} {'numpy s':>10} {'speed-up':>9}")
    for bench in (bench_propagation, bench_rk4):
        name, rows = bench(args.repeat)
        tj, tn = rows["numba"][0], rows["numpy"][0]
        print(f"{name:<44} {tj:>10.4f} {tn:>10.4f} {tn / tj:>8.1f}x")


if __name__ == "__main__":
    main()
