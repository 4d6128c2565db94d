"""Compiled vs pure-Python kernels: per-step cost and a full trajectory.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from stefan_spread import kernels
from stefan_spread.core import config_from_dict
from stefan_spread.stefan import simulate

CASE2 = {
    "case_id": "Case2Reflected", "alpha": 1.0, "lambda": 1.0, "a": 0.0, "b": 1.0,
    "s_plus_0": 0.55, "s_minus_0": 0.45,
    "sigma_profile": {"kind": "sine", "amplitude": 0.1},
    "initial_profile": {"kind": "sine", "amplitude": 0.1},
    "grad_bound_M": 10.0, "horizon_T": 0.5, "grid": {"ny": 128, "nt": 2000}, "seed": 1,
}


def bench_step(backend, ny: int, number: int, repeat: int) -> float:
    rng = np.random.default_rng(0)
    v = np.abs(rng.standard_normal(ny))
    f = 0.01 * rng.standard_normal(ny)
    eta = np.empty(ny)
    fac = kernels.implicit_heat(ny, 0.8)
    stmt = lambda: backend.spde_step(v, v, -0.1, f, 0.0, 0.0, fac, True, eta)  # noqa: E731
    return min(timeit.repeat(stmt, number=number, repeat=repeat)) / number


def bench_simulate(backend, repeat: int) -> float:
    cfg = config_from_dict(CASE2)
    saved = kernels._impl
    kernels._impl = backend
    try:
        return min(timeit.repeat(lambda: simulate(cfg), number=1, repeat=repeat))
    finally:
        kernels._impl = saved


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = ["python"]
    try:
        kernels.get_backend("cython")
        names.insert(0, "cython")
    except ImportError:
        print("compiled extension not built; timing the fallback only")
    rows = {}
    for name in names:
        be = kernels.get_backend(name)
        rows[name] = [bench_step(be, ny, 2000, args.repeat) for ny in (128, 512, 2048)]
        rows[name].append(bench_simulate(be, args.repeat))
    print(f"{'backend':8s} {'step ny=128':>13s} {'step ny=512':>13s} {'step ny=2048':>13s} {'case-2 path':>12s}")
    for name, r in rows.items():
        print(f"{name:8s} {r[0]*1e6:11.2f}us {r[1]*1e6:11.2f}us {r[2]*1e6:11.2f}us {r[3]*1e3:10.1f}ms")
    if len(rows) == 2:
        sp = [p / c for p, c in zip(rows["python"], rows["cython"])]
        print("speedup  " + " ".join(f"{s:12.1f}x" for s in sp))


if __name__ == "__main__":
    main()
