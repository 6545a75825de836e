"""Time the scheduler with compiled kernels against the pure-Python fallback.

Each mode runs in its own interpreter because the kernel choice is fixed at
import time by ADTSCHED_NO_NUMBA.

    python3 benchmarks/bench_kernels.py --sizes 125 250 500 1000
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
from adtsched.generate import GeneratorParams, and_tree, max_nodes
from adtsched.preprocess import preprocess
from adtsched.scheduler import min_schedule

def tree(n):
    width = int(0.8 * n)
    return and_tree(GeneratorParams(4, width, 32, min(n, max_nodes(4, width, 32)), 1))

min_schedule(preprocess(tree(60)))  # compile or load cached kernels
rows = []
for n in json.loads(sys.argv[1]):
    adt = tree(n)
    best = float("inf")
    for _ in range(int(sys.argv[2])):
        t0 = time.perf_counter()
        s = min_schedule(preprocess(adt))
        best = min(best, time.perf_counter() - t0)
    rows.append([len(adt.nodes), best, s[0].agents_used])
print(json.dumps(rows))
"""


def run(sizes, repeat, pure):
    env = dict(os.environ)
    env.pop("ADTSCHED_NO_NUMBA", None)
    if pure:
        env["ADTSCHED_NO_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", CHILD, json.dumps(sizes), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[125, 250, 500, 1000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    jit = run(args.sizes, args.repeat, pure=False)
    pure = run(args.sizes, args.repeat, pure=True)
    print(f"{'nodes':>6} {'agents':>6} {'numba ms':>10} {'python ms':>10} {'speedup':>8}")
    for (n, tj, m), (_, tp, mp) in zip(jit, pure):
        assert m == mp, "kernel modes disagree"
        print(f"{n:>6} {m:>6} {tj * 1000:>10.1f} {tp * 1000:>10.1f} {tp / tj:>8.1f}")


if __name__ == "__main__":
    main()
