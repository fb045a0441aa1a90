"""Compiled versus pure-numpy pointwise kernels.

Usage::

    python benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]

Prints the best-of-``repeat`` wall time of each kernel on both backends, the
speed-up, and the largest absolute difference between the two outputs.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cgllab import kernels


def _best(fn, repeat: int) -> tuple[float, object]:
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _cases(n: int, seed: int):
    rng = np.random.default_rng(seed)
    field = rng.standard_normal((2, n))
    u = rng.standard_normal((n, 2))
    v = u + 1e-3 * rng.standard_normal((n, 2))
    return {
        "grad_psi(r=4)": lambda k: k.grad_psi(field, 4.0),
        "abs_pow(r=3.5)": lambda k: k.abs_pow(field, 3.5),
        "resolvent_psi(r=4, mu=0.1)": lambda k: k.resolvent_psi(field, 0.1, 4.0, 1e-13, 200),
        "lipschitz_scan(r=3.5)": lambda k: k.lipschitz_scan(u, v, 3.5, 1.5, 1.0),
    }


def _diff(a, b) -> float:
    if isinstance(a, tuple):
        return max(abs(float(x) - float(y)) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1_000_000, help="points per call")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled backend unavailable; build it with `python setup.py build_ext --inplace`")
        return 1
    comp, py = kernels.get_backend("compiled"), kernels.get_backend("python")
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<28}{'compiled [s]':>14}{'python [s]':>14}{'speed-up':>10}{'max |diff|':>12}")
    for name, call in _cases(args.n, args.seed).items():
        tc, oc = _best(lambda: call(comp), args.repeat)
        tp, op = _best(lambda: call(py), args.repeat)
        print(f"{name:<28}{tc:>14.4f}{tp:>14.4f}{tp / tc:>10.2f}{_diff(oc, op):>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
