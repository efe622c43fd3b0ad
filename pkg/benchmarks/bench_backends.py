"""Throughput of the compiled hot loop against the numpy fallback.

    python benchmarks/bench_backends.py [--events 1000000] [--repeat 3]

Times (a) the per-chunk accumulation alone on pre-sampled events and
(b) a full single run (sampling + accumulation), for each available
backend, and checks both backends return the same sums.
"""
import argparse
import math
import time

import numpy as np

from tomobell.backend import available_backends
from tomobell.estimator import CHUNK, chunk_sums
from tomobell.model import CHSH_ANGLES, NopaParams, validate_run_config
from tomobell.runner import run_single
from tomobell.sampler import sample_events


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=10**6)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--eta", type=float, default=0.85)
    args = ap.parse_args()

    params = NopaParams.from_mean_photon(0.5, math.pi)
    rng = np.random.default_rng(0)
    batches = [sample_events(rng, params, args.eta, CHUNK) for _ in range(max(1, args.events // CHUNK))]
    n = sum(len(b) for b in batches)
    pairs = CHSH_ANGLES.pairs()
    backends = available_backends()

    print(f"{n} events, eta = {args.eta}, best of {args.repeat}")
    print(f"{'backend':>10} {'kernel ev/s':>14} {'full run ev/s':>14}")
    sums = {}
    for be in backends:
        sums[be] = sum(chunk_sums(b, args.eta, pairs, be) for b in batches)
        t_kernel = best_of(lambda: [chunk_sums(b, args.eta, pairs, be) for b in batches], args.repeat)
        cfg = validate_run_config(params, CHSH_ANGLES, args.eta, n, 20, 0)
        t_run = best_of(lambda: run_single(cfg, backend=be), args.repeat)
        print(f"{be:>10} {n / t_kernel:14.3g} {n / t_run:14.3g}")
    if len(backends) == 2:
        a, b = sums["compiled"], sums["python"]
        print(f"max relative difference of sums: {np.max(np.abs(a - b) / np.abs(b)):.2e}")


if __name__ == "__main__":
    main()
