"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--n 500] [--repeat 20] [--slots 200]
"""
import argparse
import time

import numpy as np

from roundsim import _core
from roundsim.config import from_mapping
from roundsim.harness import run_scenario


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--slots", type=int, default=200)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(1)
    n, length = args.n, 6000.0
    pos = rng.uniform(0, length, n)
    ids = rng.permutation(np.arange(1, n + 1)).astype(np.uint32)
    order = _core.sort_order(pos)
    arrival = _core.arrival_rank(12345, ids)
    ignore = np.zeros((n, n), dtype=np.uint8)
    cfg = from_mapping({"n_vehicles": n, "sim_time": args.slots / 10, "seed": 3})

    backends = _core.available_backends()
    print(f"n={n}  backends={backends}  default={_core.BACKEND}")
    print(f"{'kernel':<16}" + "".join(f"{b:>14}" for b in backends))
    rows = {
        "window_counts": lambda b: best_of(
            lambda: _core.window_counts(pos, order, length, 500.0, backend=b), args.repeat),
        "resolve_slot": lambda b: best_of(
            lambda: _core.resolve_slot(pos, ids, order, length, 500.0, 0.005, 225, 12345,
                                       arrival, ignore, 0, backend=b), args.repeat),
        f"run {args.slots} slots": lambda b: best_of(
            lambda: run_scenario(cfg, backend=b), 1),
    }
    for name, fn in rows.items():
        times = [fn(b) for b in backends]
        print(f"{name:<16}" + "".join(f"{t * 1e3:>11.3f} ms" for t in times))


if __name__ == "__main__":
    main()
