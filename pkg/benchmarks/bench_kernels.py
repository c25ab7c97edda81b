"""Compare the compiled kernels against the numpy fallback.

Times each hot kernel on identical inputs with both backends and checks the
outputs match, then times whole constructions end to end with each backend
selected through ``PARTYSOLVE_PURE``.

    python benchmarks/bench_kernels.py --puzzle type2 --calls 200 --constructions 200
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

from partysolve.benchmark import kernel_report, run_kernel_benchmark
from partysolve.persistence import resolve_pool, resolve_puzzle

_END_TO_END = """
import json, sys, time
from partysolve import kernels
from partysolve.constructor import ConstructorConfig, construct
from partysolve.persistence import resolve_pool, resolve_puzzle
pool = resolve_pool(sys.argv[1]); puzzle = resolve_puzzle(sys.argv[2], pool.schema)
n = int(sys.argv[3])
construct(pool, puzzle, ConstructorConfig(rng_seed=0))  # warm-up
t0 = time.perf_counter()
found = sum(hasattr(construct(pool, puzzle, ConstructorConfig(rng_seed=s)), "assignment")
            for s in range(n))
print(json.dumps({"backend": kernels.BACKEND, "seconds": time.perf_counter() - t0,
                  "solutions": found}))
"""


def end_to_end(pool: str, puzzle: str, n: int, pure: bool) -> dict:
    env = dict(os.environ, PARTYSOLVE_PURE="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", _END_TO_END, pool, puzzle, str(n)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--pool", default="default")
    p.add_argument("--puzzle", default="type2")
    p.add_argument("--calls", type=int, default=200)
    p.add_argument("--constructions", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    pool = resolve_pool(args.pool)
    puzzle = resolve_puzzle(args.puzzle, pool.schema)
    print(kernel_report(run_kernel_benchmark(pool, puzzle, args.calls, args.seed)))
    print()
    rows = [end_to_end(args.pool, args.puzzle, args.constructions, pure)
            for pure in (True, False)]
    for r in rows:
        print(f"construct x{args.constructions:<5} {r['backend']:<7} {r['seconds']:8.2f}s  "
              f"({r['solutions']} solutions)")
    if rows[1]["backend"] == "cython" and rows[1]["seconds"] > 0:
        print(f"end-to-end speedup {rows[0]['seconds'] / rows[1]['seconds']:.1f}x")
    if rows[0]["solutions"] != rows[1]["solutions"]:
        print("warning: backends found different numbers of solutions", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
