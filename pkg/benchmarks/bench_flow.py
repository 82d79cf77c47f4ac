"""Compare the compiled and pure-Python flow kernels.

Two workloads: a batch of forward flows from random seeds, and the full
Morse complex of a catalog model (dominated by link sampling).

    python benchmarks/bench_flow.py --model torus_3 --flows 200
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from novmorse.morse import FlowConfig, build_morse_complex, find_critical_points, get_model, integrate_flow, kernel
from novmorse.morse.links import link_analysis


def _flows(model, cfg, n, seed):
    rng = np.random.default_rng(seed)
    crit = find_critical_points(model, cfg)
    pts = [model.retract(rng.uniform(-1, 1, model.ambient_dim)) for _ in range(n)]
    start = time.perf_counter()
    steps = sum(integrate_flow(model, x, cfg, crit=crit).steps for x in pts)
    return time.perf_counter() - start, steps


def _complex(model, cfg):
    link_analysis.cache_clear()
    start = time.perf_counter()
    build_morse_complex(model, cfg)
    return time.perf_counter() - start


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="torus_3")
    ap.add_argument("--flows", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    model = get_model(args.model)
    cfg = FlowConfig()
    find_critical_points(model, cfg)
    rows = []
    for b in kernel.available():
        with kernel.using(b):
            t_flow, steps = _flows(model, cfg, args.flows, args.seed)
            t_cx = _complex(model, cfg)
        rows.append((b, t_flow, steps, t_cx))
    print(f"model {model.name}, {args.flows} flows")
    print(f"{'backend':<8} {'flows [s]':>10} {'steps':>8} {'us/step':>8} {'complex [s]':>12}")
    for b, t_flow, steps, t_cx in rows:
        print(f"{b:<8} {t_flow:>10.3f} {steps:>8d} {1e6 * t_flow / max(steps, 1):>8.2f} {t_cx:>12.3f}")
    if len(rows) == 2:
        py = next(r for r in rows if r[0] == "python")
        cy = next(r for r in rows if r[0] == "cython")
        print(f"speedup: flows x{py[1] / cy[1]:.1f}, complex x{py[3] / cy[3]:.1f}")


if __name__ == "__main__":
    main()
