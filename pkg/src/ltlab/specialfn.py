"""Logarithmic weights, structural constants and pointwise inequalities.

The weights are

    X1(t) = 1 / (1 - log t),  X1(0) = 0,
    X2(t) = X1(X1(t)),

both increasing maps of [0, 1] onto [0, 1]. Most of the package evaluates them
through the log-depth ``tau = -log r`` (see :func:`x1_from_depth`), which stays
finite when ``r`` itself underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ltlab import kernels
from ltlab.errors import DomainError

#: below this argument X1 is clamped to 0
TINY = 1e-300


@dataclass(frozen=True)
class Dimension:
    """Ambient dimension ``n >= 2``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def supports_nonradial(self) -> bool:
        return self.n in (2, 3)

    def __int__(self):
        return self.n


def as_dim(dim) -> int:
    """Coerce an int or :class:`Dimension` to a validated integer."""
    if isinstance(dim, Dimension):
        return dim.n
    return Dimension(dim).n


@dataclass(frozen=True)
class StructuralConstants:
    n: int
    lambda_n: float
    kappa_n: float
    omega_n: float
    moser_threshold: float


def _check_unit_interval(t):
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("argument must lie in [0, 1]")
    return arr


def _neg_log(arr):
    # -log t, with log1p near t = 1 to keep relative accuracy
    with np.errstate(divide="ignore"):
        near_one = arr > 0.5
        return np.where(near_one, -np.log1p(np.where(near_one, arr, 1.0) - 1.0),
                        -np.log(np.where(near_one, 1.0, np.maximum(arr, TINY))))


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def x1(t):
    """Leray weight ``(1 - log t)^-1`` on [0, 1], with ``x1(0) = 0``."""
    arr = _check_unit_interval(t)
    out = np.where(arr < TINY, 0.0, 1.0 / (1.0 + _neg_log(arr)))
    return _scalar_or_array(out, t)


def x2(t):
    """Iterated weight ``x1(x1(t))``."""
    arr = _check_unit_interval(t)
    return _scalar_or_array(np.asarray(x1(x1(arr))), t)


def x1_derivative(t):
    """d/dt X1(t) = X1(t)^2 / t for t in (0, 1]."""
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(arr > 1.0):
        raise DomainError("x1_derivative needs t in (0, 1]")
    w = np.asarray(x1(arr))
    return _scalar_or_array(w * w / arr, t)


def x1_from_depth(tau):
    """X1 at radius ``exp(-tau)``; valid for any depth ``tau >= 0``."""
    return 1.0 / (1.0 + np.asarray(tau, dtype=float))


def x2_from_depth(tau):
    """X2 at radius ``exp(-tau)``: ``1 / (1 + log(1 + tau))``."""
    return 1.0 / (1.0 + np.log1p(np.asarray(tau, dtype=float)))


def unit_ball_volume(n: int) -> float:
    n = as_dim(n)
    if n == 2:
        return math.pi
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def structural_constants(dim) -> StructuralConstants:
    n = as_dim(dim)
    lam = 2.0 ** (n - 1) - 1.0
    kappa = lam * (2.0 * n / (n - 1)) ** (n - 2)
    omega = unit_ball_volume(n)
    threshold = (4.0 * omega * n ** (n - 2) / kappa) ** (1.0 / (n - 1))
    return StructuralConstants(n, lam, kappa, omega, threshold)


def gamma_fn(x):
    """Euler Gamma for positive real arguments (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0.0)):
        raise DomainError("gamma_fn needs x > 0")
    if arr.ndim == 0:
        return math.gamma(float(arr))
    return special.gamma(arr)


def log_gamma(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0.0)):
        raise DomainError("log_gamma needs x > 0")
    return special.gammaln(arr) if arr.ndim else math.lgamma(float(arr))


def vec_gap(a, b, n_exp: int, variant: str = "improved"):
    """Slack in the pointwise vectorial inequalities.

    ``improved``::

        |b-a|^n - |a|^n - |a|^(n-2) |b|^2 / (lambda_n 2^(n-2)) + n |a|^(n-2) a.b

    ``classic``::

        |b-a|^n - |a|^n - |b|^n / lambda_n + n |a|^(n-2) a.b

    Both are nonnegative. ``a`` and ``b`` may be single vectors or stacks of
    shape ``(N, d)``; the result has the matching leading shape.
    """
    if int(n_exp) != n_exp or n_exp < 2:
        raise DomainError(f"n_exp must be an integer >= 2, got {n_exp}")
    if variant not in ("improved", "classic"):
        raise DomainError(f"unknown variant {variant!r}")
    a_arr = np.atleast_2d(np.asarray(a, dtype=float))
    b_arr = np.atleast_2d(np.asarray(b, dtype=float))
    if a_arr.shape != b_arr.shape:
        raise DomainError("a and b must have the same shape")
    gaps = kernels.vec_gap_batch(np.ascontiguousarray(a_arr), np.ascontiguousarray(b_arr),
                                 int(n_exp), variant == "improved")
    if np.ndim(a) <= 1:
        return float(gaps[0])
    return gaps


def scalar_pow_gaps(kappa, lam, q):
    """Slacks of ``(k+l)^q >= k^q + l^q`` and ``k^q + l^q >= 2^(1-q) (k+l)^q``."""
    k = np.ascontiguousarray(np.atleast_1d(np.asarray(kappa, dtype=float)))
    l = np.ascontiguousarray(np.atleast_1d(np.asarray(lam, dtype=float)))
    qq = np.ascontiguousarray(np.broadcast_to(np.asarray(q, dtype=float), k.shape).copy())
    if np.any(k < 0) or np.any(l < 0) or np.any(qq < 1):
        raise DomainError("scalar inequalities need kappa, lambda >= 0 and q >= 1")
    return kernels.scalar_pow_gaps(k, l, qq)
