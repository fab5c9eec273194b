"""Scalar functionals of test functions.

Every functional is assembled from named :class:`BallIntegral` pieces. The
same pieces feed the Monte-Carlo oracle, so a cross-check compares two
independent integration routes for one integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ltlab import sphere
from ltlab.errors import AdmissibilityError, DomainError, GaugeError, UnsupportedDimensionError
from ltlab.quadrature import (DEFAULT_CONFIG, LOG_CAP, QuadConfig, QuadResult, WeightSpec,
                              integrate_ball, integrate_halfline, mc_oracle, mc_oracle_many,
                              rough_config)
from ltlab.specialfn import as_dim, unit_ball_volume, x2_from_depth
from ltlab.testfunctions import TestFunction


@dataclass
class FunctionalValue:
    value: float
    quad_error: float
    components: dict = field(default_factory=dict)


@dataclass
class MoserResult:
    value: float
    quad_error: float
    overflow: bool


@dataclass(frozen=True)
class BallIntegral:
    """``int_B expr(sample of field) * weight(|x|) dx`` for one field."""

    name: str
    field: TestFunction
    expr: Callable
    weight: WeightSpec = WeightSpec()
    rough: bool = False

    def integrand(self):
        f, expr = self.field, self.expr

        def fn(r, tau, angles):
            return expr(f.sample(r, tau, angles), tau)

        return fn

    @property
    def is_rough(self) -> bool:
        return self.rough or self.field.rough

    def quad(self, cfg: QuadConfig | None = None, sphere_resolution=None) -> QuadResult:
        cfg = rough_config(cfg) if self.is_rough else (cfg or DEFAULT_CONFIG)
        return integrate_ball(self.integrand(), self.weight, self.field.dim, cfg,
                              radial=self.field.is_radial, breaks_tau=self.field.breaks_tau,
                              sphere_resolution=sphere_resolution)

    def mc(self, samples=1_000_000, seed=0, proposal="mixture") -> QuadResult:
        return mc_oracle(self.integrand(), self.weight, self.field.dim, samples, seed,
                         radial=self.field.is_radial, proposal=proposal)


def mc_shared(pieces, samples=1_000_000, seed=0, proposal="mixture") -> list:
    """Monte-Carlo estimates for pieces on one field from a single set of draws."""
    pieces = list(pieces)
    if not pieces:
        return []
    f = pieces[0].field
    if any(p.field is not f for p in pieces):
        raise GaugeError("mc_shared needs pieces on one field")
    memo = {}

    def sample(r, tau, angles):
        if memo.get("tau") is not tau:
            memo["tau"] = tau
            memo["s"] = f.sample(r, tau, angles)
        return memo["s"]

    terms = [((lambda r, tau, angles, e=p.expr: e(sample(r, tau, angles), tau)), p.weight)
             for p in pieces]
    return mc_oracle_many(terms, f.dim, samples, seed, radial=f.is_radial, proposal=proposal)


def _require(f: TestFunction, dim, gauges):
    if dim is not None and as_dim(dim) != f.dim:
        raise UnsupportedDimensionError(f"field lives in n={f.dim}, not n={as_dim(dim)}")
    if gauges and f.gauge not in gauges:
        raise GaugeError(f"expected a field in gauge {'/'.join(gauges)}, got {f.gauge!r}")
    return f.dim


def _combine(pieces, coeffs, cfg, sphere_resolution=None):
    comps = {}
    total = 0.0
    err = 0.0
    for piece, c in zip(pieces, coeffs):
        res = piece.quad(cfg, sphere_resolution)
        comps[piece.name] = c * res.value
        total += c * res.value
        err += abs(c) * res.error_estimate
    return FunctionalValue(total, err, comps)


# integral builders --------------------------------------------------------

def _kinked(f: TestFunction, p: float) -> bool:
    """``|f|^p`` has kinks on the sphere (f nonradial, p not an even integer)."""
    return not f.is_radial and not (float(p).is_integer() and int(p) % 2 == 0)


def leray_pieces(u: TestFunction):
    n = u.dim
    return [BallIntegral("gradient", u, lambda s, tau: s.grad2_scaled ** (n / 2.0), WeightSpec(-n)),
            BallIntegral("hardy", u, lambda s, tau: np.abs(s.val) ** n, WeightSpec(-n, n),
                         _kinked(u, n))]


def hardy_pieces(u: TestFunction):
    return [BallIntegral("gradient", u, lambda s, tau: s.grad2_scaled, WeightSpec(-2)),
            BallIntegral("hardy", u, lambda s, tau: s.val ** 2, WeightSpec(-2))]


def energy_piece(f: TestFunction, kind: str):
    n = f.dim
    if kind == "grad_n_x1":
        return BallIntegral(kind, f, lambda s, tau: s.grad2_scaled ** (n / 2.0), WeightSpec(-n, 1 - n))
    if kind == "mixed_link2":
        return BallIntegral(kind, f, lambda s, tau: np.abs(s.val) ** (n - 2) * s.grad2_scaled,
                            WeightSpec(-n, -1), _kinked(f, n - 2))
    if kind == "ft_weight":
        return BallIntegral(kind, f, lambda s, tau: s.grad2_scaled, WeightSpec(-n, -1))
    raise GaugeError(f"unknown energy kind {kind!r}")


def ft_pieces(f: TestFunction):
    return [BallIntegral("gradient", f, lambda s, tau: s.grad2_scaled, WeightSpec(-2)),
            BallIntegral("hardy", f, lambda s, tau: s.val ** 2, WeightSpec(-2)),
            BallIntegral("log_hardy", f, lambda s, tau: s.val ** 2, WeightSpec(-2, 2))]


def power_piece(f: TestFunction, p: float, x1_power: float = 0.0, x2_power: float = 0.0,
                scale: float = 1.0):
    """``int (|f|/scale)^p X1^x1_power X2^x2_power``."""
    def expr(s, tau):
        return (np.abs(s.val) / scale) ** p

    return BallIntegral("power", f, expr, WeightSpec(0, x1_power, x2_power), _kinked(f, p))


_ENERGY_GAUGE = {"grad_n_x1": ("v",), "mixed_link2": ("v",), "ft_weight": ("w",)}


# public functionals ---------------------------------------------------------

def leray_functional(u: TestFunction, dim=None, cfg=None, sphere_resolution=None) -> FunctionalValue:
    """``int |grad u|^n - ((n-1)/n)^n int |u|^n |x|^-n X1^n``."""
    n = _require(u, dim, ("u",))
    c = ((n - 1.0) / n) ** n
    return _combine(leray_pieces(u), (1.0, -c), cfg, sphere_resolution)


def hardy_difference(u: TestFunction, dim=None, cfg=None, sphere_resolution=None) -> FunctionalValue:
    """``int |grad u|^2 - ((n-2)/n)^2 int |u|^2 / |x|^2`` for n >= 3."""
    n = _require(u, dim, ("u",))
    if n < 3:
        raise UnsupportedDimensionError("the Hardy difference is defined for n >= 3")
    c = ((n - 2.0) / n) ** 2
    return _combine(hardy_pieces(u), (1.0, -c), cfg, sphere_resolution)


def weighted_energy(f: TestFunction, dim=None, kind="grad_n_x1", cfg=None,
                    sphere_resolution=None) -> FunctionalValue:
    """Weighted energies: ``grad_n_x1``, ``mixed_link2`` (v gauge), ``ft_weight`` (w gauge)."""
    if kind not in _ENERGY_GAUGE:
        raise GaugeError(f"unknown energy kind {kind!r}")
    _require(f, dim, _ENERGY_GAUGE[kind])
    return _combine([energy_piece(f, kind)], (1.0,), cfg, sphere_resolution)


def gradient_energy(u: TestFunction, cfg=None, sphere_resolution=None) -> FunctionalValue:
    """``int |grad u|^n`` (any gauge)."""
    return _combine(leray_pieces(u)[:1], (1.0,), cfg, sphere_resolution)


def ft_difference(f: TestFunction, dim=None, cfg=None, sphere_resolution=None) -> FunctionalValue:
    """``int |grad f|^2 - ((n-2)/2)^2 int f^2/|x|^2 - 1/4 int f^2 X1^2 / |x|^2``."""
    n = _require(f, dim, ())
    if f.inner_cut <= 0.0:
        raise AdmissibilityError("ft_difference needs a field vanishing near the origin")
    return _combine(ft_pieces(f), (1.0, -((n - 2.0) / 2.0) ** 2, -0.25), cfg, sphere_resolution)


def _probe_depths(f: TestFunction):
    base = np.concatenate([np.linspace(0.0, 3.0, 61), np.geomspace(3.0, 1e6, 80)])
    extra = [b * k for b in f.breaks_tau for k in (0.999, 1.0, 1.001)]
    return np.unique(np.concatenate([base, extra]))


def sup_estimate(f: TestFunction, x2_exponent: float = 0.0) -> float:
    """Max of ``|f| X2^beta`` over a probe grid (for scaling, not a bound)."""
    tau = _probe_depths(f)
    weight = x2_from_depth(tau) ** x2_exponent
    if f.is_radial:
        vals = np.abs(f.sample(None, tau).val) * weight
    else:
        grid = sphere.sphere_grid(f.dim, (64,) if f.dim == 2 else (16, 32))
        s = f.sample(None, tau[:, None], tuple(a[None, :] for a in grid.angles))
        vals = np.abs(s.val) * weight[:, None]
    finite = vals[np.isfinite(vals)]
    return float(finite.max()) if finite.size else 0.0


def _peak_scale(f: TestFunction, p: float, x1_power: float, x2_power: float) -> float:
    tau = _probe_depths(f)
    with np.errstate(divide="ignore"):
        log_w = (-x1_power * np.log1p(tau) - x2_power * np.log1p(np.log1p(tau))
                 - f.dim * tau) / p
    if f.is_radial:
        vals = np.abs(f.sample(None, tau).val)
    else:
        grid = sphere.sphere_grid(f.dim, (64,) if f.dim == 2 else (16, 32))
        s = f.sample(None, tau[:, None], tuple(a[None, :] for a in grid.angles))
        vals = np.max(np.abs(s.val), axis=1)
    with np.errstate(divide="ignore"):
        logs = np.log(vals) + log_w
    logs = logs[np.isfinite(logs)]
    return float(np.exp(logs.max())) if logs.size else 0.0


def scaled_power_piece(f: TestFunction, p: float, x1_power: float = 0.0, x2_power: float = 0.0):
    """``(scale, piece)`` with the piece normalized as in :func:`power_mean`."""
    scale = _peak_scale(f, p, x1_power, x2_power) or 1.0
    return scale, power_piece(f, p, x1_power, x2_power, scale)


def power_mean(f: TestFunction, p: float, x1_power: float = 0.0, x2_power: float = 0.0,
               cfg=None, sphere_resolution=None):
    """``(1/omega_n) int |f|^p X1^a X2^b`` as ``(scale, QuadResult)``.

    The field is divided by a probe estimate of the peak of ``|f|`` times the
    weight and volume density to the power ``1/p``, so the normalized
    integrand peaks near 1 and the absolute tolerance stays negligible. The
    true mean is ``scale^p * result.value``.
    """
    scale, piece = scaled_power_piece(f, p, x1_power, x2_power)
    res = piece.quad(cfg, sphere_resolution)
    omega = unit_ball_volume(f.dim)
    return scale, QuadResult(res.value / omega, res.error_estimate / omega, res.evaluations)


def weighted_lq_moment(u: TestFunction, q: float, x2_exponent: float = 0.0, cfg=None,
                       sphere_resolution=None):
    """``(1/omega_n) int (|u| X2^beta)^q`` as ``(scale, QuadResult)``; see :func:`power_mean`."""
    return power_mean(u, q, 0.0, q * x2_exponent, cfg, sphere_resolution)


def weighted_lq_norm(u: TestFunction, q: float, x2_exponent: float = 0.0, dim=None, cfg=None,
                     sphere_resolution=None) -> float:
    """Normalized ``L^q`` norm of ``|u| X2^x2_exponent`` (the mean divides by omega_n)."""
    _require(u, dim, ())
    if q < 1:
        raise AdmissibilityError("weighted_lq_norm needs q >= 1")
    scale, res = weighted_lq_moment(u, q, x2_exponent, cfg, sphere_resolution)
    if res.value <= 0.0:
        return 0.0
    return scale * res.value ** (1.0 / q)


def moser_report(u: TestFunction, alpha: float, x2_exponent: float, dim=None, cfg=None,
                 cap: float = LOG_CAP, sphere_resolution=None) -> MoserResult:
    """Normalized integral of ``exp(alpha (|u| X2^beta)^(n/(n-1)))``.

    Integrated in log space; where the log of the integrand (volume element
    included) exceeds ``cap`` it is clamped and ``overflow`` is set.
    """
    n = _require(u, dim, ())
    if alpha <= 0:
        raise AdmissibilityError("alpha must be positive")
    p = n / (n - 1.0)

    def fn(r, tau, angles):
        s = u.sample(r, tau, angles)
        return alpha * (np.abs(s.val) * x2_from_depth(tau) ** x2_exponent) ** p

    cfg = rough_config(cfg) if u.rough or _kinked(u, p) else (cfg or DEFAULT_CONFIG)
    res = integrate_ball(fn, WeightSpec(), n, cfg, radial=u.is_radial,
                         breaks_tau=u.breaks_tau, sphere_resolution=sphere_resolution,
                         log_mode=True)
    omega = unit_ball_volume(n)
    return MoserResult(res.value / omega, res.error_estimate / omega, res.overflow)


def moser_functional(u: TestFunction, alpha: float, x2_exponent: float, dim=None, cfg=None) -> float:
    return moser_report(u, alpha, x2_exponent, dim, cfg).value


def moser_series(u: TestFunction, alpha: float, x2_exponent: float, terms: int = 40, cfg=None):
    """Partial sum ``sum_l alpha^l / l! * mean((|u| X2^beta)^(l n/(n-1)))``."""
    n = u.dim
    p = n / (n - 1.0)
    total = 1.0
    for l in range(1, terms + 1):
        q = l * p
        scale, res = weighted_lq_moment(u, q, x2_exponent, cfg)
        log_term = l * math.log(alpha) - math.lgamma(l + 1) + q * math.log(scale) \
            + math.log(max(res.value, 1e-300))
        total += math.exp(log_term)
    return total


# log-depth route for radial fields, in y = log(1 + tau). With
# u = V(y) exp(y (1 - 1/n)) the Leray functional and the exponential mean
# become integrals over y whose integrands stay representable at depths where
# tau (and r) do not.

def _deep_parts(u: TestFunction):
    n = _require(u, None, ("u",))
    if not (u.is_radial and u.is_linear) or u.r_exp != 0.0:
        raise DomainError("the log-depth route needs a linear radial field")
    shift = u.x1_exp + 1.0 - 1.0 / n
    profs = [m.profile for m in u.modes]

    def V(y):
        return sum(pr.value_y(y, shift) for pr in profs)

    def dV(y):
        return sum(pr.dy(y, shift) for pr in profs)

    edges = {0.0}
    for pr in profs:
        edges.update(b for b in pr.breaks_y if b > 0.0)
    return n, V, dV, sorted(edges)


def leray_functional_deep(u: TestFunction, cfg=None) -> FunctionalValue:
    """Leray functional of a radial field, integrated in log-depth."""
    n, V, dV, edges = _deep_parts(u)
    c = ((n - 1.0) / n) ** n
    area = n * unit_ball_volume(n)
    a = 1.0 - 1.0 / n
    grad = integrate_halfline(lambda y: np.abs(a * V(y) + dV(y)) ** n, edges, cfg)
    hardy = integrate_halfline(lambda y: np.abs(V(y)) ** n, edges, cfg)
    comps = {"gradient": area * grad.value, "hardy": area * hardy.value}
    return FunctionalValue(comps["gradient"] - c * comps["hardy"],
                           area * (grad.error_estimate + c * hardy.error_estimate), comps)


def moser_report_deep(u: TestFunction, alpha: float, x2_exponent: float, cfg=None,
                      cap: float = LOG_CAP) -> MoserResult:
    """:func:`moser_report` for a radial field, integrated in log-depth.

    The log-integrand ``e^y (alpha |V|^p (1+y)^(-beta p) - n) + n + y`` is
    clamped at ``cap`` (``overflow`` set on a hit).
    """
    if alpha <= 0:
        raise AdmissibilityError("alpha must be positive")
    n, V, dV, edges = _deep_parts(u)
    p = n / (n - 1.0)
    hit = [False]

    def f(y):
        with np.errstate(over="ignore", invalid="ignore"):
            bracket = alpha * np.abs(V(y)) ** p * (1.0 + y) ** (-x2_exponent * p) - n
            logv = np.exp(y) * bracket + n + y
        logv = np.where(np.isnan(logv), -np.inf, logv)
        if np.any(logv > cap):
            hit[0] = True
            logv = np.minimum(logv, cap)
        return n * np.exp(logv)

    res = integrate_halfline(f, edges, cfg)
    return MoserResult(res.value, res.error_estimate, hit[0])


def weighted_lq_moment_deep(u: TestFunction, q: float, x2_exponent: float = 0.0, cfg=None):
    """:func:`weighted_lq_moment` for a radial field, integrated in log-depth.

    The scale is chosen in log form so that the integrand, volume density
    included, peaks near 1 on a probe grid; fields far larger than their
    boundary values stay representable.
    """
    n, V, dV, edges = _deep_parts(u)
    a = 1.0 - 1.0 / n

    def log_weighted(y):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(V(y))) + a * y - x2_exponent * np.log1p(y)

    # the field need not vanish past the last break (bumps are constant there)
    grid = np.unique(np.concatenate([np.linspace(0.0, edges[-1], 4001), edges,
                                     edges[-1] + np.geomspace(1e-3, 1e3, 400)]))
    def log_density(y):
        with np.errstate(over="ignore"):
            return y - n * np.expm1(y)

    log_scale = float(np.max(log_weighted(grid) + log_density(grid) / q))
    if not np.isfinite(log_scale):
        return 1.0, QuadResult(0.0, 0.0, 0)

    def f(y):
        logv = q * (log_weighted(y) - log_scale) + log_density(y)
        return n * np.exp(logv)

    res = integrate_halfline(f, edges, cfg)
    return math.exp(log_scale), res
