"""Compare the numba kernels with the pure-numpy loss/gradient path.

Times one full-batch ``loss_and_gradient`` call (the per-epoch cost of
training) on Sim-sized data for the logistic model and the (3, 10, 1)
network, then one complete Sim2 fit per backend.

Run::

    python benchmarks/bench_kernels.py [--repeats 20]
"""

import argparse
import statistics
import time

import numpy as np

from crcen import accel
from crcen.linalg import RngStream
from crcen.nn import init_model
from crcen.simulation import SimConfig, sample_sim1, sample_sim2
from crcen.trainer import loss_and_gradient, train


def time_call(fn, repeats):
    fn()  # warm-up; also triggers JIT compilation
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def bench_gradient(name, model, data, lam, repeats):
    times = {}
    for backend, switch in (("numba", accel.enable_jit), ("numpy", accel.disable_jit)):
        switch()
        times[backend] = time_call(lambda: loss_and_gradient(model, data.X, data.y, lam, 0.0), repeats)
    accel.reset_jit()
    speedup = times["numpy"] / times["numba"]
    print(f"{name:<24} numba {times['numba'] * 1e3:8.3f} ms   numpy {times['numpy'] * 1e3:8.3f} ms   "
          f"speedup {speedup:5.2f}x")
    return times


def bench_fit(repeats):
    cfg = SimConfig(sim=2)
    data = sample_sim2(RngStream(0), 1000, 10000)
    lam = 10000 / 11000
    out = {}
    for backend, switch in (("numba", accel.enable_jit), ("numpy", accel.disable_jit)):
        switch()
        init = init_model((3, 10, 1), "sigmoid", RngStream(1))

        def fit():
            train(init.copy(), data, cfg.train_config(lam))

        out[backend] = time_call(fit, max(1, repeats // 10))
    accel.reset_jit()
    print(f"{'Sim2 fit (one lambda)':<24} numba {out['numba']:8.3f} s    numpy {out['numpy']:8.3f} s    "
          f"speedup {out['numpy'] / out['numba']:5.2f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()
    if not accel.HAVE_NUMBA:
        print("numba is not importable; both columns use the numpy path")
    rng = RngStream(0)
    sim1 = sample_sim1(rng, 1000, 10000)
    sim2 = sample_sim2(rng, 1000, 10000)
    bench_gradient("logistic, N=11000", init_model((1, 1), rng=1), sim1, 10 / 11, args.repeats)
    bench_gradient("3-10-1 sigmoid, N=11000", init_model((3, 10, 1), rng=1), sim2, 10 / 11, args.repeats)
    bench_gradient("3-10-1 tanh, N=11000", init_model((3, 10, 1), "tanh", rng=1), sim2, 10 / 11, args.repeats)
    bench_fit(args.repeats)


if __name__ == "__main__":
    main()
