"""Compare the compiled and pure-numpy kernel paths.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np
from scipy.interpolate import PchipInterpolator

from sectorshock import _kernels
from sectorshock.geometry import MappedGrid, _pairs, boundary_distance


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def bench_inverse(repeat):
    xk = np.linspace(0.0, np.pi / 6, 65)
    yk = np.sin(xk) ** 2 + 0.1 * xk
    dk = PchipInterpolator(xk, yk).derivative()(xk)
    targets = np.random.default_rng(1).uniform(yk[0], yk[-1], (129, 64))
    res = {}
    for flag in (False, True):
        if flag and not _kernels.HAVE_NUMBA:
            continue
        _kernels.hermite_inverse(xk, yk, dk, targets[:2], use_numba=flag)  # warm-up
        res[flag] = _best(lambda: _kernels.hermite_inverse(xk, yk, dk, targets, use_numba=flag), repeat)
    return res


def bench_holder(repeat):
    g = MappedGrid(2.0, 3.0, np.pi / 6, 129, 64)
    X, E = np.meshgrid(g.xi, g.eta, indexing="ij")
    v = (np.cos(6 * E) * (X - 2.0) ** 2).ravel()
    x, y = (X * np.cos(E)).ravel(), (X * np.sin(E)).ravel()
    d = boundary_distance(g, "wall").ravel()
    ia, ib = _pairs(g.n_r, g.n_phi, n_random=20000)
    res = {}
    for flag in (False, True):
        if flag and not _kernels.HAVE_NUMBA:
            continue
        _kernels.holder_quotient(v, x, y, d, ia[:5], ib[:5], 0.6, 1.6, use_numba=flag)
        res[flag] = _best(lambda: _kernels.holder_quotient(v, x, y, d, ia, ib, 0.6, 1.6,
                                                           use_numba=flag), repeat)
    return res


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    for name, fn in (("hermite_inverse", bench_inverse), ("holder_quotient", bench_holder)):
        res = fn(args.repeat)
        t_np, out_np = res[False]
        line = f"{name:16s} numpy {t_np * 1e3:9.3f} ms"
        if True in res:
            t_nb, out_nb = res[True]
            diff = float(np.max(np.abs(np.asarray(out_nb) - np.asarray(out_np))))
            line += f"   numba {t_nb * 1e3:9.3f} ms   speedup {t_np / t_nb:6.1f}x   max diff {diff:.1e}"
        else:
            line += "   numba unavailable"
        print(line)


if __name__ == "__main__":
    main()
