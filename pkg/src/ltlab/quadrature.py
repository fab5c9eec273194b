"""Radially weighted integration over the unit ball.

Radial integrals are split at r = 1/2. On [1/2, 1] we integrate in r; on
(0, 1/2] we substitute ``s = n (1 - log r)``, which turns powers of X1 into
powers of ``n / s`` and the volume element ``r^(n-1) dr`` into
``exp(n - s) ds / n``. The s-axis is covered by doubling panels. Integrands
with only algebraic decay in s (Hardy-type terms, whose weight cancels the
volume element) get an extrapolated geometric tail once the panel-to-panel
ratio has settled.

Integrands receive the radius ``r`` together with the log-depth
``tau = -log r``; ``tau`` stays finite where ``r`` underflows to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ltlab import sphere
from ltlab.errors import ConvergenceError, DomainError, UnsupportedDimensionError
from ltlab.specialfn import unit_ball_volume

# Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])        # 15 nodes ascending
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = [_WG[0], _WG[1], _WG[2], _WG[3], _WG[2], _WG[1], _WG[0]]

LOG_CAP = 700.0
S_MAX = 1e300
# deepest tau usable as an s-axis break (s = n (1 + tau) must stay finite)
TAU_MAX = 1e290
SPHERE_CHUNK = 1 << 20      # samples per nonradial evaluation block


@dataclass(frozen=True)
class WeightSpec:
    """Radial weight ``r^r_power X1(r)^x1_power X2(r)^x2_power``."""

    r_power: float = 0.0
    x1_power: float = 0.0
    x2_power: float = 0.0

    def log_r_factor(self, r, tau):
        """log of the weight at radius r (log-depth tau), region-independent."""
        return -self.r_power * tau + self.log_x_factor(tau)

    def log_x_factor(self, tau):
        """log of the X1/X2 part of the weight."""
        out = np.zeros(np.shape(tau))
        if self.x1_power:
            out = out - self.x1_power * np.log1p(tau)
        if self.x2_power:
            out = out - self.x2_power * np.log1p(np.log1p(tau))
        return out


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be positive")


@dataclass
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int
    overflow: bool = False
    parts: dict = field(default_factory=dict, repr=False)


DEFAULT_CONFIG = QuadConfig()
# integrands with kinks on the sphere (or tabulated from sphere means) carry
# discretization noise near this level, so radial refinement stops there
ROUGH_REL_TOL = 1e-7


def rough_config(cfg: QuadConfig | None = None) -> QuadConfig:
    cfg = cfg or DEFAULT_CONFIG
    return QuadConfig(max(cfg.rel_tol, ROUGH_REL_TOL), cfg.abs_tol, cfg.max_subdivisions)


def _gk_apply(f, a, b):
    """Kronrod value, error estimate and abs-integral on each panel."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x), dtype=float).reshape(x.shape)
    fx = np.where(np.isfinite(fx), fx, np.nan)
    kron = half * (fx @ _KW)
    gauss = half * (fx @ _GW)
    resabs = np.abs(half) * (np.abs(fx) @ _KW)
    mean = kron / np.where(half != 0, 2.0 * half, 1.0)
    resasc = np.abs(half) * (np.abs(fx - mean[:, None]) @ _KW)
    err = np.abs(kron - gauss)
    with np.errstate(over="ignore"):
        scale = np.where(resasc > 0, np.minimum(1.0, (200.0 * err / np.where(resasc > 0, resasc, 1.0)) ** 1.5), 1.0)
    err = np.where(resasc > 0, resasc * scale, err)
    floor = 50.0 * np.finfo(float).eps * resabs
    err = np.maximum(err, floor)
    return kron, err


class _Adaptive:
    """Global adaptive bisection over a set of panels, vectorized per sweep."""

    def __init__(self, f, edges, max_sub):
        self.f = f
        edges = np.asarray(edges, dtype=float)
        self.a = edges[:-1].copy()
        self.b = edges[1:].copy()
        self.val, self.err = _gk_apply(f, self.a, self.b)
        self.nevals = 15 * self.a.size
        self.max_sub = max_sub

    @property
    def total(self):
        return float(np.sum(self.val))

    @property
    def error(self):
        return float(np.sum(self.err))

    def refine(self, tol_abs, tol_rel, floor=0.0):
        while True:
            if np.any(np.isnan(self.val)):
                raise ConvergenceError("integrand produced non-finite values",
                                       QuadResult(float("nan"), float("inf"), self.nevals))
            total, err = self.total, self.error
            tol = max(tol_abs, tol_rel * max(abs(total), floor))
            if err <= tol:
                return
            if self.a.size >= self.max_sub:
                raise ConvergenceError(
                    f"tolerance {tol:.3g} not reached (error {err:.3g}) within "
                    f"{self.max_sub} subdivisions",
                    QuadResult(total, err, self.nevals))
            order = np.argsort(-self.err)
            cum = np.cumsum(self.err[order])
            k = int(np.searchsorted(cum, err - 0.5 * tol)) + 1
            sel = order[:k]
            width = self.b[sel] - self.a[sel]
            splittable = np.abs(width) > 1e-13 * np.maximum(np.abs(self.a[sel]), np.abs(self.b[sel]))
            if not np.any(splittable):
                return
            sel = sel[splittable]
            keep = np.ones(self.a.size, dtype=bool)
            keep[sel] = False
            mid = 0.5 * (self.a[sel] + self.b[sel])
            na = np.concatenate([self.a[sel], mid])
            nb = np.concatenate([mid, self.b[sel]])
            nv, ne = _gk_apply(self.f, na, nb)
            self.nevals += 15 * na.size
            self.a = np.concatenate([self.a[keep], na])
            self.b = np.concatenate([self.b[keep], nb])
            self.val = np.concatenate([self.val[keep], nv])
            self.err = np.concatenate([self.err[keep], ne])


class _Overflow:
    def __init__(self):
        self.hit = False


def _evaluate(h, r, tau, log_weight, log_mode, cap, flag):
    if log_mode:
        logv = np.asarray(h(r, tau), dtype=float) + log_weight
        if cap is not None and np.any(logv > cap):
            flag.hit = True
            logv = np.minimum(logv, cap)
        return np.exp(logv)
    vals = np.asarray(h(r, tau), dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        w = np.exp(log_weight)
        out = vals * w
        # the weight alone can under/overflow (or go subnormal) while the
        # product is representable
        big = np.broadcast_to(np.abs(log_weight) > 700.0, vals.shape)
        bad = big & (vals != 0.0) & np.isfinite(vals)
        if np.any(bad):
            lw = np.broadcast_to(log_weight, vals.shape)[bad]
            out = np.array(out, copy=True)
            out[bad] = np.sign(vals[bad]) * np.exp(np.log(np.abs(vals[bad])) + lw)
    return out


def radial_integral(h, weight: WeightSpec, n: int, cfg: QuadConfig = DEFAULT_CONFIG,
                    breaks_tau=(), interval=(0.0, 1.0), log_mode=False, cap=LOG_CAP):
    """Integral of ``h(r, tau) r^(n-1) W(r)`` over ``interval`` (within [0, 1]).

    ``breaks_tau`` lists log-depths where the integrand has kinks or changes
    regime; the s-axis is always covered up to the deepest of them. With
    ``log_mode`` the integrand returns the *log* of its values and the combined
    log-integrand is capped at ``cap`` (``QuadResult.overflow`` records a hit).
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not (0.0 <= lo < hi <= 1.0):
        raise DomainError("interval must satisfy 0 <= lo < hi <= 1")
    if any(not (b < TAU_MAX) for b in breaks_tau):
        raise DomainError("break depth not representable in tau; use the log-depth path")
    flag = _Overflow()
    tau_hi = -math.log(hi)
    tau_lo = math.inf if lo == 0.0 else -math.log(lo)
    breaks = sorted(float(b) for b in breaks_tau if tau_hi < b < tau_lo)
    split_tau = math.log(2.0)
    total = 0.0
    error = 0.0
    nevals = 0
    parts = {}

    # outer region, r in [max(lo, 1/2), hi], integrated in r
    if tau_hi < split_tau:
        r_lo = max(lo, 0.5)
        edges = {r_lo, hi}
        k = 1
        while True:
            e = 1.0 - 0.5 ** (k + 1)
            if e >= hi:
                break
            if e > r_lo:
                edges.add(e)
            k += 1
            if k > 12:
                break
        edges.update(math.exp(-b) for b in breaks if b < split_tau)
        edges = np.array(sorted(edges))

        def f_outer(r):
            with np.errstate(divide="ignore"):
                tau = -np.log(r)
            logw = (n - 1) * np.log(r) + weight.log_r_factor(r, tau)
            return _evaluate(h, r, tau, logw, log_mode, cap, flag)

        ad = _Adaptive(f_outer, edges, cfg.max_subdivisions)
        ad.refine(cfg.abs_tol, cfg.rel_tol)
        parts["outer"] = ad.total
        total += ad.total
        error += ad.error
        nevals += ad.nevals

    if tau_lo <= split_tau:
        return QuadResult(total, error, nevals, flag.hit, parts)

    # inner region in s = n (1 + tau)
    s_start = n * (1.0 + max(tau_hi, split_tau))
    s_end = n * (1.0 + tau_lo) if math.isfinite(tau_lo) else math.inf
    s_breaks = [n * (1.0 + b) for b in breaks if b > split_tau]

    def f_inner(s):
        tau = s / n - 1.0
        r = np.exp(-tau)
        # exponents of r are merged before multiplying by tau: at large depth
        # -n tau + n tau would lose all digits
        logw = -(n + weight.r_power) * tau - math.log(n) + weight.log_x_factor(tau)
        return _evaluate(h, r, tau, logw, log_mode, cap, flag)

    core_end = s_breaks[-1] if s_breaks else s_start
    if math.isfinite(s_end):
        core_end = s_end
    edges = {s_start, core_end, *s_breaks}
    s = s_start
    while s * 2.0 < core_end:
        s *= 2.0
        edges.add(s)
    edges = np.array(sorted(e for e in edges if s_start <= e <= core_end))
    core_total = 0.0
    if edges.size >= 2 and core_end > s_start:
        ad = _Adaptive(f_inner, edges, cfg.max_subdivisions * 4)
        ad.refine(cfg.abs_tol, cfg.rel_tol, floor=abs(total))
        core_total = ad.total
        error += ad.error
        nevals += ad.nevals
    parts["core"] = core_total
    total += core_total
    if math.isfinite(s_end):
        return QuadResult(total, error, nevals, flag.hit, parts)

    tail_total, tail_err, tail_evals = _tail(f_inner, max(core_end, s_start), cfg, total)
    parts["tail"] = tail_total
    total += tail_total
    error += tail_err
    nevals += tail_evals
    return QuadResult(total, error, nevals, flag.hit, parts)


def _tail(f, s0, cfg, running):
    """Doubling panels on [s0, inf) with geometric extrapolation."""
    contribs = []
    total = 0.0
    error = 0.0
    nevals = 0
    s = s0
    chunk = 4
    while True:
        edges = s * 2.0 ** np.arange(chunk + 1)
        vals = []
        for a, b in zip(edges[:-1], edges[1:]):
            ad = _Adaptive(f, np.array([a, b]), cfg.max_subdivisions)
            ad.refine(cfg.abs_tol * 0.1, cfg.rel_tol * 0.1, floor=abs(running + total))
            vals.append(ad.total)
            error += ad.error
            nevals += ad.nevals
        s = edges[-1]
        for c in vals:
            contribs.append(c)
            total += c
            tol = max(cfg.abs_tol, cfg.rel_tol * abs(running + total))
            if len(contribs) >= 2 and abs(c) <= 0.1 * tol and abs(c) <= abs(contribs[-2]):
                return total, error + abs(c), nevals
            if len(contribs) >= 3 and c != 0.0:
                c1, c2, c3 = contribs[-3:]
                if c1 != 0.0 and c2 != 0.0 and c1 * c2 > 0 and c2 * c3 > 0:
                    rho1, rho2 = c2 / c1, c3 / c2
                    # a ratio of 1 up to rounding is a log-divergent tail, not a series
                    if 0.0 < rho2 < 1.0 - 1e-6:
                        extra = c3 * rho2 / (1.0 - rho2)
                        drift = abs(rho2 - rho1) / (1.0 - rho2) ** 2 * abs(c3)
                        if drift <= 0.5 * max(cfg.abs_tol, cfg.rel_tol * abs(running + total + extra)):
                            return total + extra, error + drift, nevals
        if s > S_MAX:
            best = QuadResult(running + total, abs(contribs[-1]), nevals)
            if abs(contribs[-1]) <= max(cfg.abs_tol, 1e-6 * abs(running + total)):
                return total, error + abs(contribs[-1]), nevals
            raise ConvergenceError("radial tail did not decay", best)


def integrate_halfline(f, edges, cfg: QuadConfig | None = None) -> QuadResult:
    """Integral of ``f`` over ``[edges[0], inf)`` with kinks at ``edges``.

    The span of ``edges`` is refined adaptively, on a grid refined dyadically
    away from the first edge so that mass near it is not stepped over; beyond
    the span doubling panels with geometric extrapolation take over.
    """
    cfg = cfg or DEFAULT_CONFIG
    edges = sorted(set(float(e) for e in edges))
    if not edges or not all(math.isfinite(e) for e in edges):
        raise DomainError("edges must be finite and non-empty")
    lo, hi = edges[0], edges[-1]
    step = 0.25
    while lo + step < hi:
        edges.append(lo + step)
        step *= 2.0
    edges = np.array(sorted(set(edges)))
    total, error, nevals = 0.0, 0.0, 0
    if edges.size >= 2:
        ad = _Adaptive(f, edges, cfg.max_subdivisions * 4)
        ad.refine(cfg.abs_tol, cfg.rel_tol)
        total, error, nevals = ad.total, ad.error, ad.nevals
    start = max(edges[-1], 1.0)
    if start > edges[-1]:
        ad = _Adaptive(f, np.array([edges[-1], start]), cfg.max_subdivisions)
        ad.refine(cfg.abs_tol, cfg.rel_tol, floor=abs(total))
        total += ad.total
        error += ad.error
        nevals += ad.nevals
    t, e, k = _tail(f, start, cfg, total)
    return QuadResult(total + t, error + e, nevals + k)


def integrate_radial(integrand, weight: WeightSpec, dim, cfg: QuadConfig | None = None,
                     breakpoints=(), interval=(0.0, 1.0)) -> QuadResult:
    """``int integrand(r) r^(n-1) weight(r) dr`` over ``interval``.

    ``dim`` may be any integer >= 1 here (it only sets the volume exponent).
    ``breakpoints`` are radii where the integrand is not smooth.
    """
    n = int(dim)
    if n < 1:
        raise DomainError("dimension exponent must be >= 1")
    breaks = [-math.log(b) for b in breakpoints if 0.0 < b < 1.0]
    return radial_integral(lambda r, tau: integrand(r), weight, n, cfg or DEFAULT_CONFIG,
                           breaks_tau=breaks, interval=interval)


def integrate_sphere(fn, dim, resolution=None) -> QuadResult:
    """Integral of ``fn`` over S^{n-1} (n in {2, 3}); ``fn`` takes angle arrays."""
    n = int(dim)
    grid = sphere.sphere_grid(n, tuple(resolution) if resolution else None)
    full = grid.area * float(grid.mean(np.asarray(fn(*grid.angles), dtype=float)))
    coarse_res = tuple(max(2, k // 2) for k in grid.resolution)
    coarse = sphere.sphere_grid(n, coarse_res)
    approx = coarse.area * float(coarse.mean(np.asarray(fn(*coarse.angles), dtype=float)))
    return QuadResult(full, abs(full - approx), grid.size + coarse.size)


def integrate_ball(fn, weight: WeightSpec, dim, cfg: QuadConfig | None = None, radial=False,
                   breaks_tau=(), sphere_resolution=None, log_mode=False) -> QuadResult:
    """Integral over the unit ball of ``fn(r, tau, angles) * weight(|x|)``.

    For ``radial=True`` the field ignores angles (it is called with
    ``angles=None``) and the result is the sphere area times the radial
    integral. Otherwise ``fn`` gets ``r, tau`` of shape (R, 1) and angle
    arrays of shape (1, S) and must return shape (R, S).
    """
    n = int(dim)
    cfg = cfg or DEFAULT_CONFIG
    area = n * unit_ball_volume(n)
    if radial:
        res = radial_integral(lambda r, tau: fn(r, tau, None), weight, n, cfg,
                              breaks_tau=breaks_tau, log_mode=log_mode)
    else:
        if n not in (2, 3):
            raise UnsupportedDimensionError(f"nonradial integrands need n in {{2, 3}}, got {n}")
        grid = sphere.sphere_grid(n, tuple(sphere_resolution) if sphere_resolution else None)
        angles = tuple(a[None, :] for a in grid.angles)

        rows = max(1, SPHERE_CHUNK // grid.size)

        def block(rr, tt):
            vals = np.asarray(fn(rr, tt, angles), dtype=float)
            if log_mode:
                m = np.max(vals, axis=1, keepdims=True)
                m = np.where(np.isfinite(m), m, 0.0)
                with np.errstate(divide="ignore"):
                    return m[:, 0] + np.log(grid.mean(np.exp(vals - m)))
            return grid.mean(vals)

        def h(r, tau):
            shape = np.shape(r)
            rr = np.reshape(r, (-1, 1))
            tt = np.reshape(tau, (-1, 1))
            out = np.concatenate([block(rr[i:i + rows], tt[i:i + rows])
                                  for i in range(0, rr.shape[0], rows)])
            return np.reshape(out, shape)

        res = radial_integral(h, weight, n, cfg, breaks_tau=breaks_tau, log_mode=log_mode)
    return QuadResult(area * res.value, area * res.error_estimate, res.evaluations,
                      res.overflow, res.parts)


def mc_oracle(fn, weight: WeightSpec, dim, samples: int, seed: int, radial=False,
              proposal: str = "volume", tail_exponent: float = 0.2,
              batch: int = 200_000) -> QuadResult:
    """Monte-Carlo estimate of the same ball integral as :func:`integrate_ball`.

    The log-depth ``tau`` is drawn from the volume density ``n exp(-n tau)``
    (radius density proportional to r^(n-1)). ``proposal="mixture"`` mixes in,
    with equal probability, a heavy-tailed density proportional to
    ``(1 + tau)^(-1 - tail_exponent)``, which keeps the variance finite for
    integrands with algebraic decay in tau. Directions are uniform. The
    error estimate is the sample standard error.
    """
    return mc_oracle_many([(fn, weight)], dim, samples, seed, radial, proposal, tail_exponent,
                          batch)[0]


def mc_oracle_many(terms, dim, samples: int, seed: int, radial=False, proposal: str = "volume",
                   tail_exponent: float = 0.2, batch: int = 200_000) -> list:
    """:func:`mc_oracle` for several ``(fn, weight)`` pairs on one set of draws.

    Each estimate is distributed exactly as a separate :func:`mc_oracle` call
    with the same seed; sharing the draws only saves sampling work.
    """
    n = int(dim)
    if samples < 1000:
        raise DomainError("mc_oracle needs at least 1000 samples")
    if proposal not in ("volume", "mixture"):
        raise DomainError(f"unknown proposal {proposal!r}")
    if not radial and n not in (2, 3):
        raise UnsupportedDimensionError(f"nonradial sampling needs n in {{2, 3}}, got {n}")
    rng = np.random.default_rng(seed)
    area = n * unit_ball_volume(n)
    delta = float(tail_exponent)
    s1 = np.zeros(len(terms))
    s2 = np.zeros(len(terms))
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        u = rng.random(m)
        if proposal == "volume":
            tau = -np.log1p(-u) / n
        else:
            pick = rng.random(m) < 0.5
            tau = np.where(pick, -np.log1p(-u) / n, (1.0 - u) ** (-1.0 / delta) - 1.0)
            log_vol = math.log(n) - n * tau
            log_tail = math.log(delta) - (1.0 + delta) * np.log1p(tau)
            log_p = np.logaddexp(log_vol, log_tail) - math.log(2.0)
        r = np.exp(-tau)
        angles = None if radial else sphere.random_directions(n, m, rng)
        for k, (fn, weight) in enumerate(terms):
            if proposal == "volume":
                log_ratio = -math.log(n) + weight.log_r_factor(r, tau)
            else:
                log_ratio = -(n + weight.r_power) * tau - log_p + weight.log_x_factor(tau)
            with np.errstate(over="ignore", invalid="ignore"):
                vals = np.asarray(fn(r, tau, angles), dtype=float)
                ratio = np.exp(log_ratio)
                est = area * vals * ratio
            # a weight below the smallest double is a zero contribution, even
            # where an algebraically growing integrand overflowed
            est = np.where((vals == 0.0) | (ratio == 0.0), 0.0, est)
            s1[k] += float(np.sum(est))
            s2[k] += float(np.sum(est * est))
        done += m
    out = []
    for a, b in zip(s1, s2):
        mean = a / samples
        var = max(b / samples - mean * mean, 0.0)
        out.append(QuadResult(float(mean), math.sqrt(var / samples), samples))
    return out
