import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import PchipInterpolator

from sectorshock import _kernels

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _monotone(rng, n=40):
    xk = np.linspace(0.0, 1.0, n)
    yk = np.cumsum(rng.uniform(0.1, 1.0, n))
    return xk, yk, PchipInterpolator(xk, yk).derivative()(xk)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hermite_inverse_round_trip(seed):
    rng = np.random.default_rng(seed)
    xk, yk, dk = _monotone(rng)
    x = rng.uniform(0.0, 1.0, 50)
    y = PchipInterpolator(xk, yk)(x)
    np.testing.assert_allclose(_kernels.hermite_inverse(xk, yk, dk, y, use_numba=False), x,
                               atol=1e-12)


def test_hermite_inverse_clips_and_keeps_shape(rng):
    xk, yk, dk = _monotone(rng)
    t = np.array([[yk[0] - 1.0, yk[-1] + 1.0]])
    out = _kernels.hermite_inverse(xk, yk, dk, t)
    assert out.shape == (1, 2)
    np.testing.assert_array_equal(out, [[0.0, 1.0]])


def test_holder_quotient_brute_force(rng):
    n = 30
    v, x, y = rng.normal(size=(3, n))
    dlt = rng.uniform(0.0, 1.0, n)
    ia, ib = np.triu_indices(n, 1)
    ref = max(min(dlt[a], dlt[b]) ** 1.3 * abs(v[a] - v[b]) / np.hypot(x[a] - x[b], y[a] - y[b])
              ** 0.6 for a, b in zip(ia, ib))
    got = _kernels.holder_quotient(v, x, y, dlt, ia, ib, 0.6, 1.3, use_numba=False)
    assert got == pytest.approx(ref, rel=1e-14)


@needs_numba
def test_numba_matches_numpy(rng):
    xk, yk, dk = _monotone(rng, 200)
    t = rng.uniform(yk[0], yk[-1], 1000)
    a = _kernels.hermite_inverse(xk, yk, dk, t, use_numba=True)
    b = _kernels.hermite_inverse(xk, yk, dk, t, use_numba=False)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)
    n = 200
    v, x, y = rng.normal(size=(3, n))
    dlt = rng.uniform(0.0, 1.0, n)
    ia, ib = np.triu_indices(n, 1)
    qa = _kernels.holder_quotient(v, x, y, dlt, ia, ib, 0.6, 0.4, use_numba=True)
    qb = _kernels.holder_quotient(v, x, y, dlt, ia, ib, 0.6, 0.4, use_numba=False)
    assert qa == pytest.approx(qb, rel=1e-14)


def test_environment_flag_disables_numba():
    code = "from sectorshock import _kernels; print(_kernels.USE_NUMBA)"
    env = dict(os.environ, SECTORSHOCK_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "False"
