"""Benchmark the compiled kernels against the NumPy fallback.

Times the full per-round reputation pass (the simulation hot loop) and a
whole desk-scale simulation under each backend.  Run:

    python3 benchmarks/bench_backend.py [--repeats N]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def time_kernels(impl, n_raters: int, n_candidates: int, repeats: int) -> float:
    rng = np.random.default_rng(0)
    shape = (n_raters, n_candidates)
    rec_pos = rng.integers(0, 10, shape).astype(float)
    past_pos = rng.integers(0, 30, shape).astype(float)
    rec_neg = rng.integers(0, 10, shape).astype(float)
    past_neg = rng.integers(0, 30, shape).astype(float)
    link = rng.uniform(0.6, 1.0, shape)
    sb = rng.uniform(0, 1, shape)
    su = rng.uniform(0, 1, shape) * (1 - sb)
    sd = 1.0 - sb - su
    valid = (rng.uniform(0, 1, shape) < 0.7).astype(float)

    def one_pass():
        alpha, beta = impl.weighted_counts_batch(
            rec_pos, past_pos, rec_neg, past_neg, 0.6, 0.4, 0.4, 0.6
        )
        b, d, u = impl.local_opinions_batch(alpha, beta, link)
        delta = impl.recommendation_weights_batch(alpha, beta, 1.0)
        rb, rd, ru, have = impl.aggregate_excluding_self_batch(delta, sb, sd, su, valid)
        impl.fuse_batch(b, d, u, rb, rd, ru, have)
        impl.tsl_average_batch(sb, su, valid)

    one_pass()  # warm-up
    start = time.perf_counter()
    for _ in range(repeats):
        one_pass()
    return (time.perf_counter() - start) / repeats


def time_simulation() -> float:
    from repdpos.config import AttackConfig, ScenarioConfig
    from repdpos.consensus import run_simulation

    config = ScenarioConfig(
        attack=AttackConfig(
            malicious_candidates=10, onset_round=5,
            colluders_per_candidate=10, compromised_vehicles=20,
        ),
        seed=1,
    )
    start = time.perf_counter()
    run_simulation(config)
    return time.perf_counter() - start


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--backend", choices=["pure", "cython"],
                        help=argparse.SUPPRESS)  # internal re-exec hook
    args = parser.parse_args()

    if args.backend is None:
        # re-exec once per backend so the import-time selection applies
        for backend in ("pure", "cython"):
            env = dict(os.environ, REPDPOS_BACKEND=backend)
            result = subprocess.run(
                [sys.executable, __file__, "--repeats", str(args.repeats),
                 "--backend", backend],
                env=env,
            )
            if result.returncode != 0 and backend == "cython":
                print("compiled backend unavailable; pure results above stand")
        return 0

    from repdpos import backend as selected

    if selected.BACKEND != args.backend:
        print(f"requested {args.backend!r} backend but got {selected.BACKEND!r}")
        return 1

    print(f"backend: {selected.BACKEND}")
    for shape in ((60, 40), (200, 400)):
        per_pass = time_kernels(selected, *shape, repeats=args.repeats)
        print(f"  round pass {shape[0]}x{shape[1]}: {per_pass * 1e6:9.1f} us")
    print(f"  desk-scale simulation:      {time_simulation() * 1e3:9.1f} ms")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
