"""Time each hot kernel as plain Python/numpy and as a numba-compiled
function, independent of MMSP_OFFLOAD_BACKEND.

    python3 benchmarks/bench_kernels.py [--levels 4096] [--files 20000]
"""
import argparse
import time

import numpy as np

from mmsp_offload import ChannelParams, OffloadPolicy, SystemParams, kernels, qbd, simulator
from mmsp_offload._accel import compile_always
from mmsp_offload.embedded import build_chain


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=4096)
    ap.add_argument("--files", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = SystemParams(ChannelParams(0.007, 0.016), OffloadPolicy(100.0), 0.564, 0.564, 0.1)
    gen = qbd.build_generator(params)
    mu = np.ascontiguousarray(gen.mu)
    mod = np.ascontiguousarray(gen.modulation)
    sol = qbd.solve(params)
    q = np.ascontiguousarray(build_chain(params).Qhat)
    p = np.ascontiguousarray(np.resize(sol.p, (args.levels + 1, 3)))
    et = np.array([61.3, 1.79, 3.41])

    cases = {
        "solve_levels": (kernels.solve_levels_py, (0.1, mu, mod, args.levels)),
        "start_service_sum": (kernels.start_service_sum_py, (q, p)),
        "waiting_time_sum": (kernels.waiting_time_sum_py, (q, et, p)),
    }
    print(f"{'kernel':<20}{'python [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, (py, call_args) in cases.items():
        nb = compile_always(py)
        nb(*call_args)  # compile
        t_py = best_of(lambda: py(*call_args), args.repeat)
        t_nb = best_of(lambda: nb(*call_args), args.repeat)
        print(f"{name:<20}{t_py:>12.4f}{t_nb:>12.5f}{t_py / t_nb:>10.1f}")

    # whole simulator, swapping the event loop in place
    cfg = simulator.SimConfig(params, n_files=args.files, replications=1, seed=0)
    saved = kernels.simulate
    try:
        timings = {}
        for label, fn in (("python", kernels.simulate_py), ("numba", compile_always(kernels.simulate_py))):
            kernels.simulate = fn
            simulator.run(cfg)
            timings[label] = (best_of(lambda: simulator.run(cfg), args.repeat), simulator.run(cfg).mean_delay)
    finally:
        kernels.simulate = saved
    assert timings["python"][1] == timings["numba"][1], "backends disagree"
    t_py, t_nb = timings["python"][0], timings["numba"][0]
    print(f"{'simulate':<20}{t_py:>12.4f}{t_nb:>12.5f}{t_py / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
