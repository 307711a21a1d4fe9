"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--json results.json]

Every workload runs on each available backend; outputs are checked for
agreement before timings are reported, so a fast wrong kernel fails loudly.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from tilescape.kernels import available_backends
from tilescape.similarity import DEFAULT_PARAMS


def workloads(rng):
    """(name, args, call) triples sized like real tilesets and terrain maps."""
    strips_a = rng.integers(0, 256, size=(4096, 4 * 32)).astype(np.float64)
    strips_b = rng.integers(0, 256, size=(4096, 4 * 32)).astype(np.float64)

    # region-growing graph of a 128x128-tile sheet: 70% active, 80% of edges open
    active = (rng.random((128, 128)) < 0.7).astype(np.uint8)
    h_full = (rng.random((128, 128)) < 0.8).astype(np.uint8)
    v_full = (rng.random((128, 128)) < 0.8).astype(np.uint8)
    h_full[:, -1] = 0
    v_full[-1, :] = 0

    cave = (rng.random((256, 256)) < 0.45).astype(np.uint8)
    return [
        ("ssim_batch 4096x128", lambda k: k.ssim_batch(strips_a, strips_b, DEFAULT_PARAMS.c1, DEFAULT_PARAMS.c2)),
        ("grid_components 128x128", lambda k: k.grid_components(active, h_full, v_full)),
        ("ca_step 256x256", lambda k: k.ca_step(cave, 5, 4)),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", dest="json_out", help="Write timings as JSON.")
    args = parser.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the Python fallback only", file=sys.stderr)
    rng = np.random.default_rng(args.seed)
    rows = []
    for name, call in workloads(rng):
        outputs = {b: call(mod) for b, mod in backends.items()}
        ref = outputs["python"]
        for b, out in outputs.items():
            if not np.allclose(out, ref, rtol=0, atol=1e-12):
                raise SystemExit(f"{name}: backend {b} disagrees with the Python fallback")
        timing = {b: min(timeit.repeat(lambda m=mod: call(m), number=1, repeat=args.repeat))
                  for b, mod in backends.items()}
        rows.append({"kernel": name, **{f"{b}_s": t for b, t in timing.items()}})

    header = f"{'kernel':<26}" + "".join(f"{b + ' (ms)':>14}" for b in backends) + f"{'speedup':>10}"
    print(header)
    for row in rows:
        line = f"{row['kernel']:<26}" + "".join(f"{row[b + '_s'] * 1e3:>14.2f}" for b in backends)
        if "cython_s" in row:
            row["speedup"] = row["python_s"] / row["cython_s"]
            line += f"{row['speedup']:>9.1f}x"
        print(line)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
