"""Compare the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py            # kernels + end-to-end
    python3 benchmarks/bench_kernels.py --quick

The kernel section calls both implementations in one process. The end-to-end
section trains agents in two subprocesses, one with MEPS_DISABLE_JIT=1.
"""
import argparse
import json
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from meps import _kernels

WORKLOAD = r"""
import json, time, numpy as np
from meps import BACKEND
from meps.agents import MepsInvasionAgent, MepsMaintenanceAgent
from meps.envs import DistractionEnv, MaintenanceEnv
out = {"backend": BACKEND}
agent = MepsInvasionAgent("distraction", [(2, 1)], np.random.default_rng(0))
env = DistractionEnv(np.random.default_rng(1))
agent.act(env.reset())  # compile outside the timer
t = time.perf_counter()
for _ in range(ROUNDS):
    agent.learn(env.step(agent.act(env.reset()))[0])
out["distraction_rounds_per_s"] = ROUNDS / (time.perf_counter() - t)
agent = MepsMaintenanceAgent(np.random.default_rng(0))
env = MaintenanceEnv(np.random.default_rng(1))
obs = env.reset()
t = time.perf_counter()
for _ in range(STEPS):
    choice = agent.act(obs)
    r, done, _ = env.step(choice)
    if choice is not None:
        agent.learn(r)
    if done:
        obs = env.reset()
out["maintenance_steps_per_s"] = STEPS / (time.perf_counter() - t)
print(json.dumps(out))
"""


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    jit = {"softmax": _kernels._softmax_pick_jit, "standard": _kernels._standard_pick_jit}
    ref = {"softmax": _kernels._softmax_pick_np, "standard": _kernels._standard_pick_np}
    if _kernels.JIT_DISABLED:
        print("numba disabled in this process; kernel comparison skipped")
        return []
    rows = []
    for n in sizes:
        h = rng.uniform(0.5, 5.0, size=max(n, 10) * 2)
        idx = np.sort(rng.choice(len(h), size=n, replace=False)).astype(np.int64)
        calls = max(10, 200_000 // n)
        for name in ("softmax", "standard"):
            args = (h, idx, 1.0, 0.37) if name == "softmax" else (h, idx, 0.37)
            jit[name](*args)
            tj = min(timeit.repeat(lambda: jit[name](*args), number=calls, repeat=repeat)) / calls
            tn = min(timeit.repeat(lambda: ref[name](*args), number=calls, repeat=repeat)) / calls
            assert jit[name](*args) == ref[name](*args)
            rows.append((name, n, tn * 1e6, tj * 1e6, tn / tj))
    print(f"{'kernel':<9}{'edges':>8}{'numpy us':>12}{'numba us':>12}{'speedup':>9}")
    for name, n, tn, tj, s in rows:
        print(f"{name:<9}{n:>8}{tn:>12.2f}{tj:>12.2f}{s:>9.1f}")
    return rows


def bench_end_to_end(rounds, steps):
    code = WORKLOAD.replace("ROUNDS", str(rounds)).replace("STEPS", str(steps))
    results = []
    for flag in ("0", "1"):
        env = dict(os.environ, MEPS_DISABLE_JIT=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(out.stdout))
    print(f"\n{'backend':<8}{'distraction rounds/s':>22}{'maintenance steps/s':>22}")
    for r in results:
        print(f"{r['backend']:<8}{r['distraction_rounds_per_s']:>22.0f}{r['maintenance_steps_per_s']:>22.0f}")
    return results


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--quick", action="store_true")
    args = p.parse_args()
    sizes = [2, 30, 1000, 100_000] if not args.quick else [2, 1000]
    t = time.perf_counter()
    bench_kernels(sizes, 3 if args.quick else 5)
    bench_end_to_end(2000 if args.quick else 10_000, 2000 if args.quick else 10_000)
    print(f"\ntotal {time.perf_counter() - t:.1f} s")


if __name__ == "__main__":
    main()
