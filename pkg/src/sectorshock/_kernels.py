"""Loop kernels compiled with numba, with pure-numpy twins.

Set ``SECTORSHOCK_NO_NUMBA=1`` to force the numpy versions.  Both paths
produce the same numbers up to floating-point reassociation.
"""
from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("SECTORSHOCK_NO_NUMBA", "").strip().lower()
try:
    import numba as nb
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    nb = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _flag not in ("1", "true", "yes", "on")

_njit_opts = dict(nopython=True, cache=False, fastmath=False)


def _maybe_jit(fn):
    if HAVE_NUMBA:
        return nb.jit(**_njit_opts)(fn)
    return fn


# -- monotone Hermite inverse --------------------------------------------

def _hermite_eval_scalar(xk, yk, dk, k, x):
    h = xk[k + 1] - xk[k]
    t = (x - xk[k]) / h
    t2 = t * t
    t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * yk[k] + (t3 - 2 * t2 + t) * h * dk[k]
            + (-2 * t3 + 3 * t2) * yk[k + 1] + (t3 - t2) * h * dk[k + 1])


_hermite_eval_scalar_jit = _maybe_jit(_hermite_eval_scalar)


if HAVE_NUMBA:
    @nb.jit(**_njit_opts)
    def _hermite_inverse_jit(xk, yk, dk, targets, out):
        n = xk.shape[0]
        for p in range(targets.shape[0]):
            w = targets[p]
            if w <= yk[0]:
                out[p] = xk[0]
                continue
            if w >= yk[n - 1]:
                out[p] = xk[n - 1]
                continue
            lo_k = 0
            hi_k = n - 1
            while hi_k - lo_k > 1:
                mid = (lo_k + hi_k) // 2
                if yk[mid] <= w:
                    lo_k = mid
                else:
                    hi_k = mid
            k = lo_k
            a = xk[k]
            b = xk[k + 1]
            fa = yk[k] - w
            for _ in range(60):
                m = 0.5 * (a + b)
                fm = _hermite_eval_scalar_jit(xk, yk, dk, k, m) - w
                if fm == 0.0:
                    a = m
                    b = m
                    break
                if (fm < 0.0) == (fa < 0.0):
                    a = m
                    fa = fm
                else:
                    b = m
                if b - a < 1e-15 * (1.0 + abs(a)):
                    break
            fa = _hermite_eval_scalar_jit(xk, yk, dk, k, a) - w
            fb = _hermite_eval_scalar_jit(xk, yk, dk, k, b) - w
            if fb != fa:
                x = a - fa * (b - a) / (fb - fa)
                if x < a or x > b:
                    x = 0.5 * (a + b)
            else:
                x = 0.5 * (a + b)
            out[p] = x
        return out


def _hermite_inverse_numpy(xk, yk, dk, targets):
    """Vectorised bisection over all targets at once."""
    w = np.clip(targets, yk[0], yk[-1])
    k = np.clip(np.searchsorted(yk, w, side="right") - 1, 0, len(xk) - 2)
    a = xk[k].copy()
    b = xk[k + 1].copy()
    h = b - a

    def ev(x):
        t = (x - xk[k]) / h
        t2, t3 = t * t, t * t * t
        return ((2 * t3 - 3 * t2 + 1) * yk[k] + (t3 - 2 * t2 + t) * h * dk[k]
                + (-2 * t3 + 3 * t2) * yk[k + 1] + (t3 - t2) * h * dk[k + 1])

    fa = ev(a) - w
    for _ in range(60):
        m = 0.5 * (a + b)
        fm = ev(m) - w
        left = (fm < 0.0) == (fa < 0.0)
        a = np.where(left, m, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, m)
        if np.all(b - a < 1e-15 * (1.0 + np.abs(a))):
            break
    fa = ev(a) - w
    fb = ev(b) - w
    den = fb - fa
    safe = den != 0.0
    x = np.where(safe, a - fa * (b - a) / np.where(safe, den, 1.0), 0.5 * (a + b))
    x = np.where((x < a) | (x > b), 0.5 * (a + b), x)
    x = np.where(targets <= yk[0], xk[0], x)
    x = np.where(targets >= yk[-1], xk[-1], x)
    return x


def hermite_inverse(xk, yk, dk, targets, use_numba: bool | None = None) -> np.ndarray:
    """Invert an increasing cubic Hermite interpolant.

    Parameters
    ----------
    xk, yk, dk : ndarray
        Knots, values and slopes of a monotone increasing interpolant.
    targets : ndarray
        Values to invert; clipped to ``[yk[0], yk[-1]]``.
    """
    xk = np.ascontiguousarray(xk, dtype=float)
    yk = np.ascontiguousarray(yk, dtype=float)
    dk = np.ascontiguousarray(dk, dtype=float)
    t = np.ascontiguousarray(np.ravel(targets), dtype=float)
    use = USE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    if use:
        out = _hermite_inverse_jit(xk, yk, dk, t, np.empty_like(t))
    else:
        out = _hermite_inverse_numpy(xk, yk, dk, t)
    return out.reshape(np.shape(targets))


# -- weighted Hoelder quotient --------------------------------------------

def _holder_loop(v, x, y, dlt, ia, ib, alpha, wexp):
    best = 0.0
    for p in range(ia.shape[0]):
        a = ia[p]
        b = ib[p]
        dx = x[a] - x[b]
        dy = y[a] - y[b]
        dist = np.sqrt(dx * dx + dy * dy)
        if dist == 0.0:
            continue
        d = min(dlt[a], dlt[b])
        if d <= 0.0:
            continue
        q = d ** wexp * abs(v[a] - v[b]) / dist ** alpha
        if q > best:
            best = q
    return best


_holder_jit = _maybe_jit(_holder_loop)


def _holder_numpy(v, x, y, dlt, ia, ib, alpha, wexp):
    dist = np.hypot(x[ia] - x[ib], y[ia] - y[ib])
    d = np.minimum(dlt[ia], dlt[ib])
    ok = (dist > 0) & (d > 0)
    if not np.any(ok):
        return 0.0
    q = d[ok] ** wexp * np.abs(v[ia][ok] - v[ib][ok]) / dist[ok] ** alpha
    return float(q.max())


def holder_quotient(v, x, y, dlt, ia, ib, alpha, wexp, use_numba: bool | None = None) -> float:
    """``max min(d_a,d_b)^wexp |v_a - v_b| / |x_a - x_b|^alpha`` over pairs."""
    args = [np.ascontiguousarray(a, dtype=float) for a in (v, x, y, dlt)]
    ia = np.ascontiguousarray(ia, dtype=np.int64)
    ib = np.ascontiguousarray(ib, dtype=np.int64)
    use = USE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    fn = _holder_jit if use else _holder_numpy
    return float(fn(*args, ia, ib, float(alpha), float(wexp)))
