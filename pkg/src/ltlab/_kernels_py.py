"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them loop by loop.
"""

import numpy as np


def vec_gap_batch(a, b, n_exp, improved):
    lam = 2.0 ** (n_exp - 1) - 1.0
    na = np.sqrt(np.einsum("ij,ij->i", a, a))
    nb2 = np.einsum("ij,ij->i", b, b)
    d = b - a
    nd = np.sqrt(np.einsum("ij,ij->i", d, d))
    ab = np.einsum("ij,ij->i", a, b)
    na_pow = na ** (n_exp - 2)
    if improved:
        extra = na_pow * nb2 / (lam * 2.0 ** (n_exp - 2))
    else:
        extra = np.sqrt(nb2) ** n_exp / lam
    return nd ** n_exp - na ** n_exp - extra + n_exp * na_pow * ab


def scalar_pow_gaps(k, l, q):
    s = k + l
    sq = s ** q
    pk = k ** q + l ** q
    return sq - pk, pk - 2.0 ** (1.0 - q) * sq


def legendre_table(lmax, x):
    """Fully normalized associated Legendre functions and their theta-derivatives.

    Normalization: the sphere mean of ``(P[l, m] * trig(m phi))**2`` is 1, where
    trig is 1 for m = 0 and sqrt(2) cos / sin otherwise is folded into P.
    Returns arrays of shape ``(lmax + 1, lmax + 1, len(x))``; entries with
    m > l are zero. ``x`` must avoid the poles.
    """
    x = np.asarray(x, dtype=float)
    u = np.sqrt((1.0 - x) * (1.0 + x))
    p = np.zeros((lmax + 1, lmax + 1, x.size))
    dp = np.zeros_like(p)
    p[0, 0] = 1.0
    for m in range(1, lmax + 1):
        fac = np.sqrt(3.0) if m == 1 else np.sqrt((2.0 * m + 1.0) / (2.0 * m))
        p[m, m] = fac * u * p[m - 1, m - 1]
    for m in range(0, lmax):
        p[m + 1, m] = np.sqrt(2.0 * m + 3.0) * x * p[m, m]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0) / ((l - m) * (l + m)))
            b = np.sqrt((2.0 * l + 1.0) * (l + m - 1.0) * (l - m - 1.0)
                        / ((l - m) * (l + m) * (2.0 * l - 3.0)))
            p[l, m] = a * x * p[l - 1, m] - b * p[l - 2, m]
    for l in range(1, lmax + 1):
        for m in range(0, l + 1):
            c = np.sqrt((2.0 * l + 1.0) * (l * l - m * m) / (2.0 * l - 1.0))
            prev = p[l - 1, m] if m <= l - 1 else 0.0
            dp[l, m] = (l * x * p[l, m] - c * prev) / u
    return p, dp
