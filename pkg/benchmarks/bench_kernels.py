"""Time the inner-loop kernels with numba and with the pure-Python fallback.

Each mode runs in its own interpreter because the switch is read at import
time from HHASA_DISABLE_NUMBA.  Example:

    python benchmarks/bench_kernels.py --customers 50 --stations 5 --iters 2000
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from hhasa import _kernels as K
from hhasa._jit import HAS_NUMBA
from hhasa.instance import random_instance
from hhasa.solution import construct_initial
from hhasa.solver import SolverConfig, run

n_c, n_s, iters, seed = (int(x) for x in sys.argv[1:5])
rng = np.random.default_rng(seed)
inst = random_instance(n_c, n_s, rng, max_energy=1e9)
tour = construct_initial(inst, rng).seq
cands = [(int(rng.integers(4)), *(int(c) for c in rng.choice(np.arange(1, n_c + 1), 2, replace=False)))
         for _ in range(iters)]

def sweep():
    seq = tour
    for op, c1, c2 in cands:
        rand = rng.random((K.count_routes(seq), 4))
        cand, status, length = K.propose(seq, op, c1, c2, rand, 0.5, 0.6, inst.demand,
                                         inst.max_load, inst.dist, inst.energy_matrix,
                                         inst.max_energy, inst.n_c, inst.n_nodes)
        if status == K.OK:
            seq = cand

t0 = time.perf_counter(); sweep(); first = time.perf_counter() - t0
t0 = time.perf_counter(); sweep(); warm = time.perf_counter() - t0
t0 = time.perf_counter()
rec = run(inst, SolverConfig(max_evaluations=iters, seed=seed))
solve = time.perf_counter() - t0
print(json.dumps({"numba": HAS_NUMBA, "first_s": first, "propose_us": 1e6 * warm / iters,
                  "run_s": solve, "best": rec.best_fitness}))
"""


def measure(disable: bool, args) -> dict:
    env = dict(os.environ, HHASA_DISABLE_NUMBA="1" if disable else "0")
    cmd = [sys.executable, "-c", WORKER, str(args.customers), str(args.stations),
           str(args.iters), str(args.seed)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--customers", type=int, default=50)
    ap.add_argument("--stations", type=int, default=5)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    jit = measure(False, args)
    pure = measure(True, args)
    print(f"instance: {args.customers} customers, {args.stations} stations, {args.iters} moves")
    print(f"{'mode':<8}{'first sweep s':>15}{'us/propose':>13}{'run s':>10}{'best':>12}")
    for name, r in (("numba", jit), ("pure", pure)):
        print(f"{name:<8}{r['first_s']:>15.3f}{r['propose_us']:>13.1f}{r['run_s']:>10.3f}"
              f"{r['best']:>12.3f}")
    if not jit["numba"]:
        print("numba is not importable; both rows used the pure path")
    else:
        print(f"speed-up per move: {pure['propose_us'] / jit['propose_us']:.1f}x")
    if jit["best"] != pure["best"]:
        print("WARNING: the two paths disagree on the best fitness")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
