"""Throughput comparison of the conversion kernels.

Runs the same batch through every available backend, checks the outputs
are identical, and prints samples/second. The workload is the calibrated
device with a coherent sine plus a small metastability window so the
hash-based tie-break path is exercised too.

    python3 benchmarks/bench_kernels.py [--n-samples 2000000] [--repeat 3]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from capflash import kernels
from capflash.analog_chain import build_chain_plan
from capflash.config import load_config
from capflash.mismatch import draw_instance
from capflash.seeding import derive_seed
from capflash.simulate import stimulus_voltages


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-samples", type=int, default=2_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cfg = load_config(Path(__file__).resolve().parents[1] / "configs"
                      / "calibrated_600msps.toml")
    topo = cfg.topology()
    inst = draw_instance(cfg.mismatch(), topo,
                         derive_seed(cfg.seed, "instance"))
    plan = build_chain_plan(topo, inst)
    spec = cfg.stimulus(n_samples=args.n_samples)
    volts = stimulus_voltages(spec, cfg.mismatch(), cfg.seed)
    ms_seed = derive_seed(cfg.seed, "meta")
    v_meta = 1e-4  # wide enough that some samples take the slow path

    print(f"default backend: {kernels.backend_name()}")
    print(f"n_samples={args.n_samples}  repeat={args.repeat}")
    results = {}
    for name in kernels.available_backends():
        best = None
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            out = kernels.convert_batch(plan, volts, v_meta, ms_seed,
                                        backend=name)
            dt = time.perf_counter() - t0
            best = dt if best is None else min(best, dt)
        results[name] = out
        print(f"{name:>9}: {args.n_samples / best / 1e6:7.2f} Msamples/s "
              f"({best * 1e3:.0f} ms best of {args.repeat})")

    names = list(results)
    for other in names[1:]:
        for a, b in zip(results[names[0]], results[other]):
            if not np.array_equal(a, b):
                print(f"MISMATCH between {names[0]} and {other}")
                return 1
    if len(names) > 1:
        print(f"outputs identical across {', '.join(names)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
