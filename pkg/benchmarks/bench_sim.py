"""Throughput benchmark for the service-path simulator backends.

Runs the same workload against the pure-python chunk loop and the
compiled kernel (when present) and reports blocks per second plus the
speedup. The two backends are bit-identical (tests/test_backends.py),
so this only measures speed.

Usage:
    python3 benchmarks/bench_sim.py --paths 4000 --blocks 400 --repeats 3
"""

import argparse
import time
from dataclasses import replace

from d2d_effcap._backend import HAVE_KERNEL
from d2d_effcap.config import load_config
from d2d_effcap.markov import overlay_row, underlay_row
from d2d_effcap.modeselect import map_to_hypotheses
from d2d_effcap.montecarlo import SimConfig, detection_triple_db, simulate_service_paths


def time_backend(name, params, budget, det, rows, sim, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        simulate_service_paths(params, budget, det, rows, sim, backend=name)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=4000)
    ap.add_argument("--blocks", type=int, default=400)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1234)
    args = ap.parse_args()

    cfg = load_config(env={})
    det = map_to_hypotheses(detection_triple_db(cfg.budget), cfg.sigma)
    rows = (overlay_row(cfg.params, cfg.budget, det),
            underlay_row(cfg.params, cfg.budget, det))
    sim = replace(cfg.sim, num_paths=args.paths, num_blocks=args.blocks,
                  seed=args.seed)
    total_blocks = args.paths * args.blocks

    print(f"workload: {args.paths} paths x {args.blocks} blocks, "
          f"best of {args.repeats}")
    t_py = time_backend("python", cfg.params, cfg.budget, det, rows, sim,
                        args.repeats)
    print(f"python : {t_py:8.3f} s   {total_blocks / t_py / 1e6:7.2f} Mblocks/s")
    if HAVE_KERNEL:
        t_k = time_backend("kernel", cfg.params, cfg.budget, det, rows, sim,
                           args.repeats)
        print(f"kernel : {t_k:8.3f} s   {total_blocks / t_k / 1e6:7.2f} Mblocks/s")
        print(f"speedup: {t_py / t_k:.2f}x")
    else:
        print("kernel : not built (pip install -e . rebuilds it)")


if __name__ == "__main__":
    main()
