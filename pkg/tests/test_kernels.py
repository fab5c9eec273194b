import os
import subprocess
import sys

import numpy as np
import pytest

from ltlab import _kernels_py, kernels

BACKENDS = kernels.backends()


def test_python_backend_always_present():
    assert "python" in BACKENDS
    assert kernels.BACKEND in ("python", "cython")


@pytest.mark.parametrize("name", sorted(BACKENDS))
@pytest.mark.parametrize("improved", [True, False])
@pytest.mark.parametrize("n_exp", [2, 3, 5])
def test_vec_gap_batch_matches_reference(name, improved, n_exp, rng):
    a = rng.standard_normal((500, 4))
    b = rng.standard_normal((500, 4))
    got = BACKENDS[name].vec_gap_batch(a, b, n_exp, improved)
    ref = _kernels_py.vec_gap_batch(a, b, n_exp, improved)
    assert np.allclose(got, ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_scalar_pow_gaps_matches_reference(name, rng):
    k, l = rng.uniform(0, 5, 300), rng.uniform(0, 5, 300)
    q = rng.uniform(1, 6, 300)
    got = BACKENDS[name].scalar_pow_gaps(k, l, q)
    ref = _kernels_py.scalar_pow_gaps(k, l, q)
    for g, r in zip(got, ref):
        assert np.allclose(g, r, rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_legendre_table_matches_reference(name):
    x = np.cos(np.linspace(0.05, np.pi - 0.05, 37))
    p, dp = BACKENDS[name].legendre_table(8, x)
    pr, dpr = _kernels_py.legendre_table(8, x)
    assert np.allclose(p, pr, rtol=1e-12, atol=1e-12)
    assert np.allclose(dp, dpr, rtol=1e-12, atol=1e-11)


def test_legendre_normalization():
    # mean over the sphere of P[l, 0]^2 is 1: (1/2) int_{-1}^{1} P^2 dx
    x, w = np.polynomial.legendre.leggauss(40)
    p, _ = _kernels_py.legendre_table(6, x)
    for l in range(7):
        assert 0.5 * np.sum(w * p[l, 0] ** 2) == pytest.approx(1.0, rel=1e-12)


def test_pure_python_switch():
    env = dict(os.environ, LTLAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from ltlab import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
