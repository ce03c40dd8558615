#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the three hot kernels on a representative workload (n = 20 objects,
full round robin) plus a full sampler iteration mix through each backend.

Usage: python benchmarks/benchmark_kernels.py [--rounds 40] [--repeat 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from icbt.data import ComparisonDataset
from icbt.kernels import available_backends
from icbt.priors import Hyperparameters
from icbt.sampler import SamplerSchedule, _Workspace, run_chain
from icbt.simulate import TournamentSpec, scenario_preset, simulate_round_robin


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rounds", type=int, default=40)
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--chain-iters", type=int, default=2000)
    args = parser.parse_args()

    backends = available_backends()
    truth = scenario_preset(3, seed=1)
    data = simulate_round_robin(truth, TournamentSpec(n=20, m=args.rounds, seed=2))
    h = Hyperparameters.defaults(20)
    ws = _Workspace(truth, data)
    rng = np.random.default_rng(3)
    u_pairs = rng.random(ws.n_free)
    u_objs = rng.random(ws.n - 1)

    print(f"workload: n=20, m={args.rounds} round robin, "
          f"{data.n_comparisons} comparisons, {ws.n_free} free pairs")
    print(f"backends available: {', '.join(backends)}")
    print()
    header = f"{'kernel':<22}" + "".join(f"{name:>14}" for name in backends)
    print(header + ("      speedup" if len(backends) > 1 else ""))

    rows = {
        "dataset_loglik": lambda mod: mod.dataset_loglik(
            ws.cp_slot, ws.cp_i, ws.cp_j, ws.cp_w, ws.cp_m, ws.z, ws.theta, ws.r
        ),
        "gibbs_pair_sweep": lambda mod: mod.gibbs_pair_sweep(
            ws.fp_i, ws.fp_j, ws.fp_w, ws.fp_m, ws.z.copy(), ws.occ_z.copy(),
            ws.theta, h.gamma_k, ws.r, u_pairs,
        ),
        "gibbs_object_sweep": lambda mod: mod.gibbs_object_sweep(
            ws.adj_ptr, ws.adj_opp, ws.adj_w, ws.adj_m, ws.adj_slot, ws.adj_sign,
            ws.z, ws.theta, ws.phi, ws.y.copy(), ws.r.copy(), ws.occ_y.copy(),
            h.gamma_a, u_objs, 1, ws.n,
        ),
    }
    for name, call in rows.items():
        times = [
            _time(lambda mod=mod: call(mod), args.repeat) for mod in backends.values()
        ]
        line = f"{name:<22}" + "".join(f"{t * 1e6:>11.1f} us" for t in times)
        if len(times) > 1:
            line += f"{times[0] / times[-1]:>11.1f}x"
        print(line)

    # full chain throughput through the backend selector is what users feel;
    # monkeypatch the selected functions to time both paths honestly
    import icbt.kernels as sel

    schedule = SamplerSchedule(iterations=args.chain_iters, burn_in=200, thin=20)
    originals = (sel.dataset_loglik, sel.gibbs_pair_sweep, sel.gibbs_object_sweep)
    times = []
    for name, mod in backends.items():
        sel.dataset_loglik = mod.dataset_loglik
        sel.gibbs_pair_sweep = mod.gibbs_pair_sweep
        sel.gibbs_object_sweep = mod.gibbs_object_sweep
        t0 = time.perf_counter()
        run_chain(truth, data, h, schedule, seed=9)
        times.append(time.perf_counter() - t0)
    sel.dataset_loglik, sel.gibbs_pair_sweep, sel.gibbs_object_sweep = originals
    total = schedule.burn_in + schedule.iterations
    line = f"{'full chain (per iter)':<22}" + "".join(
        f"{t / total * 1e6:>11.1f} us" for t in times
    )
    if len(times) > 1:
        line += f"{times[0] / times[-1]:>11.1f}x"
    print(line)


if __name__ == "__main__":
    main()
