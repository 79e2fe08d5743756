"""Benchmark the compiled BDD backend against the pure-Python one.

Runs the oracle over a seeded batch of random instances in two
subprocesses, one per backend (the backend is chosen at import time, so
each measurement needs a fresh interpreter), and prints the wall times
side by side.

Usage: python benchmarks/bench_core.py [--seed N] [--count N] [--max-vars N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from qbfcompress import randgen
from qbfcompress._core import BACKEND
from qbfcompress.compressor import compress
from qbfcompress.oracle import evaluate

seed, count, max_vars = json.loads(sys.argv[1])
qs = randgen.qbf_suite(seed, count, max_vars=max_vars)
t0 = time.time()
for q in qs:
    evaluate(q, limit=None)
t_oracle = time.time() - t0
t0 = time.time()
reduced = [compress(q).reduced for q in qs]
t_compress = time.time() - t0
t0 = time.time()
for r in reduced:
    evaluate(r, limit=None)
t_reduced = time.time() - t0
print(json.dumps({"backend": BACKEND, "oracle": t_oracle,
                  "compress": t_compress, "reduced_oracle": t_reduced}))
"""


def run_backend(pure, seed, count, max_vars):
    env = dict(os.environ)
    if pure:
        env["QBFCOMPRESS_PURE"] = "1"
    else:
        env.pop("QBFCOMPRESS_PURE", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps([seed, count, max_vars])],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--max-vars", type=int, default=10)
    args = ap.parse_args()

    rows = [run_backend(False, args.seed, args.count, args.max_vars),
            run_backend(True, args.seed, args.count, args.max_vars)]
    print("%-8s %10s %10s %14s" % ("backend", "oracle", "compress",
                                   "reduced_oracle"))
    for row in rows:
        print("%-8s %9.2fs %9.2fs %13.2fs" % (
            row["backend"], row["oracle"], row["compress"],
            row["reduced_oracle"]))
    if rows[0]["backend"] == rows[1]["backend"]:
        print("note: compiled backend unavailable, both runs used %s"
              % rows[0]["backend"])
    else:
        base = rows[1]["oracle"] + rows[1]["reduced_oracle"]
        fast = rows[0]["oracle"] + rows[0]["reduced_oracle"]
        if fast > 0:
            print("oracle speedup: %.2fx" % (base / fast))


if __name__ == "__main__":
    main()
