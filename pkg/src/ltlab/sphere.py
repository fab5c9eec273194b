"""Quadrature grids and real orthonormal harmonics on S^1 and S^2.

Harmonics are normalized against the *mean* over the sphere, so that
``mean(h_l h_m) = delta_lm`` and ``h_0 = 1``.

Index conventions:

* n = 2: ``index 0`` is ``sqrt(2) cos(l theta)``, ``index 1`` is
  ``sqrt(2) sin(l theta)``; for l = 0 only index 0 exists.
* n = 3: ``index m`` in ``[-l, l]``; m > 0 uses ``cos(m phi)``, m < 0 uses
  ``sin(|m| phi)``. ``theta`` is the polar angle.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ltlab import kernels
from ltlab.errors import DomainError, UnsupportedDimensionError

DEFAULT_RESOLUTION = {2: (256,), 3: (64, 128)}
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Tensor grid on S^{n-1} with weights summing to one."""

    n: int
    angles: tuple  # (theta,) or (theta, phi), each shape (S,)
    weights: np.ndarray
    resolution: tuple

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def area(self) -> float:
        return 2.0 * np.pi if self.n == 2 else 4.0 * np.pi

    def mean(self, values, axis=-1):
        return np.tensordot(values, self.weights, axes=([axis], [0]))


def _check_dim(n):
    if n not in (2, 3):
        raise UnsupportedDimensionError(f"sphere quadrature supports n in {{2, 3}}, got {n}")


@lru_cache(maxsize=16)
def sphere_grid(n: int, resolution: tuple | None = None) -> SphereGrid:
    _check_dim(n)
    res = tuple(resolution) if resolution else DEFAULT_RESOLUTION[n]
    if n == 2:
        (m,) = res
        theta = 2.0 * np.pi * np.arange(m) / m
        return SphereGrid(2, (theta,), np.full(m, 1.0 / m), res)
    npol, naz = res
    x, w = np.polynomial.legendre.leggauss(npol)
    phi = 2.0 * np.pi * np.arange(naz) / naz
    theta = np.arccos(x)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    ww = np.outer(w / 2.0, np.full(naz, 1.0 / naz))
    return SphereGrid(3, (tt.ravel(), pp.ravel()), ww.ravel(), res)


def surface_area(n: int) -> float:
    _check_dim(n)
    return 2.0 * np.pi if n == 2 else 4.0 * np.pi


def validate_mode(n: int, l: int, index: int) -> None:
    _check_dim(n)
    if l < 0:
        raise DomainError("harmonic degree must be >= 0")
    if n == 2:
        if index not in (0, 1) or (l == 0 and index != 0):
            raise DomainError(f"invalid circle harmonic (l={l}, index={index})")
    elif abs(index) > l:
        raise DomainError(f"invalid sphere harmonic (l={l}, m={index})")


def eval_harmonics(n: int, modes, angles):
    """Values and tangential gradients of several harmonics.

    Parameters
    ----------
    modes : sequence of (l, index)
    angles : tuple of arrays, all of the same shape

    Returns
    -------
    values : list of arrays
    grads : list of tuples of arrays (one component for n = 2, two for n = 3:
        the theta and phi components of the unit-sphere gradient)
    """
    _check_dim(n)
    values, grads = [], []
    if n == 2:
        (theta,) = angles
        for l, idx in modes:
            validate_mode(2, l, idx)
            if l == 0:
                values.append(np.ones_like(theta))
                grads.append((np.zeros_like(theta),))
            elif idx == 0:
                values.append(SQRT2 * np.cos(l * theta))
                grads.append((-SQRT2 * l * np.sin(l * theta),))
            else:
                values.append(SQRT2 * np.sin(l * theta))
                grads.append((SQRT2 * l * np.cos(l * theta),))
        return values, grads

    theta, phi = angles
    shape = np.shape(theta)
    lmax = max((l for l, _ in modes), default=0)
    for l, m in modes:
        validate_mode(3, l, m)
    x = np.cos(np.ravel(theta))
    p, dp = kernels.legendre_table(lmax, x)
    sin_t = np.sin(np.ravel(theta))
    ph = np.ravel(phi)
    for l, m in modes:
        k = abs(m)
        if m == 0:
            trig, dtrig = 1.0, 0.0
        elif m > 0:
            trig, dtrig = np.cos(k * ph), -k * np.sin(k * ph)
        else:
            trig, dtrig = np.sin(k * ph), k * np.cos(k * ph)
        val = p[l, k] * trig
        g_theta = dp[l, k] * trig
        g_phi = p[l, k] * dtrig / sin_t
        values.append(np.reshape(val, shape))
        grads.append((np.reshape(g_theta * np.ones_like(x), shape),
                      np.reshape(g_phi * np.ones_like(x), shape)))
    return values, grads


def random_directions(n: int, size: int, rng: np.random.Generator):
    """Uniform directions on S^{n-1} as angle tuples (n in {2, 3})."""
    _check_dim(n)
    if n == 2:
        return (rng.uniform(0.0, 2.0 * np.pi, size),)
    z = np.clip(rng.uniform(-1.0, 1.0, size), -1.0 + 1e-12, 1.0 - 1e-12)
    return (np.arccos(z), rng.uniform(0.0, 2.0 * np.pi, size))
