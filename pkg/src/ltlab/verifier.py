"""Numbered inequality checks, suites, the sharpness probe and growth fits.

Check semantics
---------------
``inequality``
    ``lhs <= rhs`` is asserted; pass iff ``lhs <= rhs (1 + 1e-8) + tol``.
    ``margin = rhs - lhs`` and the recorded tolerance is the effective one,
    ``tol + 1e-8 |rhs|``, so ``pass <=> margin >= -tolerance``.
``identity``
    ``lhs == rhs``; ``margin = |lhs - rhs|``, tolerance ``tol (1 + |rhs|)``.
``ratio``
    constant-free estimates. ``lhs`` is the newest ratio of the two sides and
    ``rhs`` is 1.05 times the running maximum; pass iff both are finite and
    ``lhs <= rhs``.

Quadrature failures and non-finite values give ``inconclusive``.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ltlab import functionals as fn
from ltlab import sphere
from ltlab.errors import ConvergenceError, DomainError, LtlabError, UnsupportedDimensionError
from ltlab.quadrature import DEFAULT_CONFIG, WeightSpec, radial_integral
from ltlab.specialfn import (as_dim, gamma_fn, log_gamma, scalar_pow_gaps, structural_constants,
                             unit_ball_volume, vec_gap, x2_from_depth)
from ltlab.testfunctions import (FamilyParams, TestFunction, change_gauge, make_family,
                                 MEAN_RESOLUTION, radial_field, relabel, spherical_mean,
                                 without_mean)

INEQUALITY_CHECKS = ("hardy_n3", "leray_nonneg", "link", "link2", "onedim", "key_radial",
                     "gamma_bound", "lq_presum", "holder_mean", "scalar_pow_super",
                     "scalar_pow_sub", "vec", "vec_old")
IDENTITY_CHECKS = ("link_eq_n2", "link2_eq_n2", "ft_identity")
RATIO_CHECKS = ("step1", "step2", "trudinger_growth", "lt_growth")
CHECK_IDS = INEQUALITY_CHECKS + IDENTITY_CHECKS + RATIO_CHECKS
SCALAR_CHECKS = ("scalar_pow_super", "scalar_pow_sub", "vec", "vec_old")
FIELDLESS_CHECKS = SCALAR_CHECKS + ("gamma_bound",)
Q_CHECKS = ("key_radial", "gamma_bound", "lq_presum")

KEY_Q_GRID = (2, 5, 10, 20, 40)
GROWTH_Q_GRID = (4, 8, 16, 32, 64, 120)
REL_SLACK = 1e-8
RATIO_SLACK = 1.05
DEFAULT_TOL = {"inequality": 1e-12, "identity": 1e-6, "ratio": 0.0}
SCALAR_BATCH = 20_000
ONEDIM_GRID = 10_000


def check_kind(check_id: str) -> str:
    if check_id in INEQUALITY_CHECKS:
        return "inequality"
    if check_id in IDENTITY_CHECKS:
        return "identity"
    if check_id in RATIO_CHECKS:
        return "ratio"
    raise DomainError(f"unknown check {check_id!r}")


@dataclass
class CheckReport:
    check_id: str
    dim: int
    family_descriptor: dict
    lhs: float
    rhs: float
    margin: float
    status: str
    tolerance: float
    runtime_ms: int

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _judge(kind: str, lhs: float, rhs: float, tol: float):
    """``(margin, effective tolerance, status)`` for one pair of sides."""
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        return float("nan"), tol, "inconclusive"
    if kind == "inequality":
        eff = tol + REL_SLACK * abs(rhs)
        margin = rhs - lhs
        return margin, eff, "pass" if margin >= -eff else "fail"
    if kind == "identity":
        eff = tol * (1.0 + abs(rhs))
        margin = abs(lhs - rhs)
        return margin, eff, "pass" if margin <= eff else "fail"
    margin = rhs - lhs
    return margin, tol, "pass" if margin >= -tol else "fail"


def _ratio(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0
    return a / b if b > 0 else float("inf")


# per-field quantities -------------------------------------------------------

class FieldContext:
    """Lazily computed quantities shared by the checks on one field."""

    def __init__(self, f: TestFunction, cfg=None):
        self.f = f
        self.n = f.dim
        self.cfg = cfg or DEFAULT_CONFIG
        self.consts = structural_constants(self.n)

    @cached_property
    def v(self):
        return change_gauge(self.f, "v")

    @cached_property
    def w(self):
        return change_gauge(self.v, "w")

    @cached_property
    def leray(self):
        return fn.leray_functional(self.f, cfg=self.cfg)

    @property
    def I(self) -> float:
        return max(self.leray.value, 0.0)

    @cached_property
    def energy_link(self) -> float:
        return fn.weighted_energy(self.v, kind="grad_n_x1", cfg=self.cfg).value

    @cached_property
    def energy_link2(self) -> float:
        return fn.weighted_energy(self.v, kind="mixed_link2", cfg=self.cfg).value

    @cached_property
    def v0(self):
        return spherical_mean(self.v)

    @cached_property
    def w0_field(self):
        return radial_field(spherical_mean(self.w), self.n, gauge="w")

    @cached_property
    def energy_w0(self) -> float:
        return fn.weighted_energy(self.w0_field, kind="ft_weight", cfg=self.cfg).value


def _hardy_n3(ctx, q, rng):
    if ctx.n < 3:
        raise UnsupportedDimensionError("hardy_n3 needs n >= 3")
    comps = fn.hardy_difference(ctx.f, cfg=ctx.cfg).components
    return -comps["hardy"], comps["gradient"]


def _leray_nonneg(ctx, q, rng):
    comps = ctx.leray.components
    return -comps["hardy"], comps["gradient"]


def _link(ctx, q, rng):
    return ctx.energy_link, ctx.consts.lambda_n * ctx.I


def _link2(ctx, q, rng):
    return ctx.energy_link2, ctx.consts.kappa_n * ctx.I


def _need_n2(ctx):
    if ctx.n != 2:
        raise UnsupportedDimensionError("the equality cases are specific to n = 2")


def _link_eq(ctx, q, rng):
    _need_n2(ctx)
    return ctx.energy_link, ctx.leray.value


def _link2_eq(ctx, q, rng):
    _need_n2(ctx)
    return ctx.energy_link2, ctx.leray.value


def _ft_identity(ctx, q, rng):
    g = relabel(ctx.f, "w")
    zeta = change_gauge(g, "zeta")
    lhs = fn.ft_difference(zeta, cfg=ctx.cfg).value
    rhs = fn.weighted_energy(g, kind="ft_weight", cfg=ctx.cfg).value
    return lhs, rhs


def onedim_sides(profile, cfg=None):
    """Both sides of the one-dimensional bound for a radial profile ``g``."""
    half = ONEDIM_GRID // 2
    r = np.linspace(1.0, 0.0, half, endpoint=False)
    tau = np.concatenate([-np.log(r), np.geomspace(1e-3, 1e12, ONEDIM_GRID - half)])
    tau = np.concatenate([tau, [b for b in profile.breaks_tau]])
    vals = np.abs(profile.value(tau)) * np.sqrt(x2_from_depth(tau))
    lhs = float(np.max(vals[np.isfinite(vals)], initial=0.0))
    res = radial_integral(lambda r, t: profile.rdr(t) ** 2, WeightSpec(-1, -1), 1,
                          cfg or DEFAULT_CONFIG, breaks_tau=profile.breaks_tau)
    return lhs, math.sqrt(max(res.value, 0.0))


def _onedim(ctx, q, rng):
    return onedim_sides(ctx.v0, ctx.cfg)


def key_radial_sides(f: TestFunction, q: float, cfg=None):
    """Sides of the radial key estimate for a radial field ``f`` (w gauge energy)."""
    n = f.dim
    scale, res = fn.power_mean(f, 2.0 * q / n, q * (-1.0 + 1.0 / n), q / n, cfg)
    lhs = scale ** (2.0 / n) * max(res.value, 0.0) ** (1.0 / q)
    energy = fn.weighted_energy(relabel(f, "w"), kind="ft_weight", cfg=cfg).value
    a = 1.0 + q * (n - 1.0) / n
    rhs = math.exp(n / q) / n * math.exp(log_gamma(a) / q) * \
        (max(energy, 0.0) / unit_ball_volume(n)) ** (1.0 / n)
    return lhs, rhs


def _key_radial(ctx, q, rng):
    return key_radial_sides(ctx.w0_field, q, ctx.cfg)


def gamma_sides(n: int, q: float, cfg=None):
    a = q * (1.0 - 1.0 / n)
    res = radial_integral(lambda r, t: np.ones_like(t), WeightSpec(0, -a), n, cfg or DEFAULT_CONFIG)
    return n * res.value, math.exp(n - a * math.log(n) + log_gamma(1.0 + a))


def _gamma_bound(ctx, q, rng):
    return gamma_sides(ctx.n, q, ctx.cfg)


def _lq_presum(ctx, q, rng):
    if not ctx.f.is_radial:
        raise UnsupportedDimensionError("lq_presum is stated for radial fields")
    n = ctx.n
    u = ctx.f.scaled(1.0 / max(1.0, ctx.I ** (1.0 / n)))
    scale, res = fn.weighted_lq_moment(u, q, 1.0 / n, ctx.cfg)
    lhs = scale * max(res.value, 0.0) ** (1.0 / q)
    c = ctx.consts
    rhs = math.exp(n / q) * (c.kappa_n / (4.0 * c.omega_n * n ** (n - 2))) ** (1.0 / n) * \
        math.exp(log_gamma(1.0 + q * (n - 1.0) / n) / q)
    return lhs, rhs


def holder_sides(v: TestFunction):
    """Scaled worst excess of ``|v_0|`` over ``w_0^(2/n)`` on a depth grid.

    Both means come from one positive-weight sphere rule, so the discrete
    Jensen inequality holds exactly and only rounding can show up.
    """
    n = v.dim
    tau = np.concatenate([np.linspace(0.0, 3.0, 300), np.geomspace(3.0, 1e6, 300)])
    if v.is_radial:
        vals = v.sample(None, tau).val
        v0 = np.abs(vals)
        w0 = np.abs(vals) ** (n / 2.0)
    else:
        grid = sphere.sphere_grid(n, MEAN_RESOLUTION[n])
        s = v.sample(None, tau[:, None], tuple(a[None, :] for a in grid.angles))
        v0 = np.abs(grid.mean(s.val))
        w0 = grid.mean(np.abs(s.val) ** (n / 2.0))
    bound = w0 ** (2.0 / n)
    top = float(np.max(bound))
    if top == 0.0:
        return float(np.max(v0)), 0.0
    return float(np.max(v0 - bound)) / top, 0.0


def _holder_mean(ctx, q, rng):
    return holder_sides(ctx.v)


def _step1(ctx, q, rng):
    return _ratio(ctx.energy_w0, ctx.energy_link2), None


def _step2(ctx, q, rng):
    lhs = fn.gradient_energy(without_mean(ctx.f), cfg=ctx.cfg).value
    return _ratio(lhs, ctx.energy_link), None


def _draw_scalars(rng, size):
    k = 10.0 ** rng.uniform(-3, 3, size) * (rng.random(size) > 0.02)
    l = 10.0 ** rng.uniform(-3, 3, size)
    q = np.where(rng.random(size) < 0.2, 1.0, rng.uniform(1.0, 12.0, size))
    return k, l, q


def _scalar_pow(which):
    def run(ctx, q, rng):
        k, l, qq = _draw_scalars(rng, SCALAR_BATCH)
        sup, sub = scalar_pow_gaps(k, l, qq)
        gap = sup if which == "super" else sub
        i = int(np.argmin(gap / (k + l) ** qq))
        ki, li, qi = float(k[i]), float(l[i]), float(qq[i])
        pair = ki ** qi + li ** qi
        whole = (ki + li) ** qi
        if which == "super":
            return pair, whole
        return 2.0 ** (1.0 - qi) * whole, pair
    return run


def draw_vectors(rng, size, d):
    a = rng.standard_normal((size, d)) * 10.0 ** rng.uniform(-2, 2, (size, 1))
    b = rng.standard_normal((size, d)) * 10.0 ** rng.uniform(-2, 2, (size, 1))
    near = rng.random(size) < 0.25
    b[near] = a[near] * rng.uniform(-2, 2, (int(near.sum()), 1)) + 1e-3 * b[near]
    return a, b


def vec_sides(a, b, n, variant):
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    lam = 2.0 ** (n - 1) - 1.0
    extra = na ** (n - 2) * nb ** 2 / (lam * 2.0 ** (n - 2)) if variant == "improved" \
        else nb ** n / lam
    lhs = na ** n + extra
    rhs = float(np.linalg.norm(b - a)) ** n + n * na ** (n - 2) * float(np.dot(a, b))
    return lhs, rhs


def _vec(variant):
    def run(ctx, q, rng):
        n = ctx.n
        a, b = draw_vectors(rng, SCALAR_BATCH, n)
        gaps = vec_gap(a, b, n, variant)
        scale = (np.linalg.norm(a, axis=1) + np.linalg.norm(b, axis=1)) ** n
        i = int(np.argmin(gaps / scale))
        return vec_sides(a[i], b[i], n, variant)
    return run


def growth_ratio(u: TestFunction, q: float, mode: str, cfg=None) -> float:
    """``(mean (|u| X2^b)^q)^(1/q) / (q^(1-1/n) E^(1/n))`` for one field."""
    n = u.dim
    if mode == "trudinger":
        beta = 0.0
        energy = fn.gradient_energy(u, cfg=cfg).value
    elif mode in ("leray_trudinger", "lt"):
        beta = 1.0 / n
        if u.is_radial and u.is_linear:
            # weighted families peak deep inside; the log-depth route reaches them
            energy = fn.leray_functional_deep(u, cfg=cfg).value
            scale, res = fn.weighted_lq_moment_deep(u, q, beta, cfg)
            norm = scale * max(res.value, 0.0) ** (1.0 / q)
            return _ratio(norm, q ** (1.0 - 1.0 / n) * max(energy, 0.0) ** (1.0 / n))
        energy = fn.leray_functional(u, cfg=cfg).value
    else:
        raise DomainError(f"unknown growth mode {mode!r}")
    scale, res = fn.weighted_lq_moment(u, q, beta, cfg)
    norm = scale * max(res.value, 0.0) ** (1.0 / q)
    return _ratio(norm, q ** (1.0 - 1.0 / n) * max(energy, 0.0) ** (1.0 / n))


def _growth(mode):
    def run(ctx, q, rng):
        grid = [qq for qq in GROWTH_Q_GRID if qq > ctx.n]
        ratios = [growth_ratio(ctx.f, qq, mode, ctx.cfg) for qq in grid]
        return ratios[-1], RATIO_SLACK * max(ratios)
    return run


_CHECKS = {
    "hardy_n3": _hardy_n3, "leray_nonneg": _leray_nonneg, "link": _link, "link2": _link2,
    "link_eq_n2": _link_eq, "link2_eq_n2": _link2_eq, "ft_identity": _ft_identity,
    "onedim": _onedim, "key_radial": _key_radial, "gamma_bound": _gamma_bound,
    "lq_presum": _lq_presum, "holder_mean": _holder_mean, "step1": _step1, "step2": _step2,
    "scalar_pow_super": _scalar_pow("super"), "scalar_pow_sub": _scalar_pow("sub"),
    "vec": _vec("improved"), "vec_old": _vec("classic"),
    "trudinger_growth": _growth("trudinger"), "lt_growth": _growth("leray_trudinger"),
}


class _Bare:
    """Stand-in context for checks that need no field."""

    def __init__(self, n, cfg):
        self.n = n
        self.cfg = cfg or DEFAULT_CONFIG


def _run_check(check_id, ctx, dim, descriptor, tol, q, rng, history=None) -> CheckReport:
    kind = check_kind(check_id)
    tol = DEFAULT_TOL[kind] if tol is None else float(tol)
    start = time.perf_counter()
    try:
        with np.errstate(all="ignore"):
            lhs, rhs = _CHECKS[check_id](ctx, q, rng)
        lhs = float(lhs)
        if kind == "ratio" and check_id in ("step1", "step2"):
            seen = [x for x in (history or []) if math.isfinite(x)] + [lhs]
            rhs = RATIO_SLACK * max(seen)
        rhs = float(rhs)
        margin, eff, status = _judge(kind, lhs, rhs, tol)
    except (ConvergenceError, FloatingPointError, OverflowError):
        lhs = rhs = margin = float("nan")
        eff, status = tol, "inconclusive"
    ms = int(round((time.perf_counter() - start) * 1000))
    return CheckReport(check_id, dim, descriptor, lhs, rhs, margin, status, eff, ms)


def check(check_id: str, f: TestFunction | None, dim=None, tol: float | None = None, seed: int = 0,
          q: float | None = None, history=None, cfg=None) -> CheckReport:
    """Run one check on ``f``.

    ``q`` selects the exponent for ``key_radial``, ``gamma_bound`` and
    ``lq_presum``; without it the whole grid is evaluated and the report with
    the smallest relative margin is returned. ``history`` holds earlier
    ratios of the same constant-free check (it feeds the running maximum).
    Checks that need no field accept ``f=None`` but then need ``dim``.
    """
    check_kind(check_id)
    if f is None:
        if check_id not in FIELDLESS_CHECKS:
            raise DomainError(f"check {check_id!r} needs a test function")
        if dim is None:
            raise DomainError("dim is required without a test function")
        n = as_dim(dim)
        ctx = _Bare(n, cfg)
        descriptor = {"kind": "scalars", "seed": int(seed)}
    else:
        n = f.dim
        if dim is not None and as_dim(dim) != n:
            raise UnsupportedDimensionError(f"field lives in n={n}, not n={as_dim(dim)}")
        ctx = FieldContext(f, cfg)
        descriptor = dict(f.descriptor)
    if check_id in Q_CHECKS and q is None:
        reports = [check(check_id, f, n, tol, seed, qq, history, cfg) for qq in KEY_Q_GRID]
        return min(reports, key=_relative_margin)
    if q is not None:
        descriptor = dict(descriptor, q=q)
    rng = np.random.default_rng([int(seed), n, CHECK_IDS.index(check_id)])
    return _run_check(check_id, ctx, n, descriptor, tol, q, rng, history)


def _relative_margin(rep: CheckReport) -> float:
    if not math.isfinite(rep.margin):
        return -math.inf
    return rep.margin / (1.0 + abs(rep.rhs))


# suites -------------------------------------------------------------------

SUITES = ("core", "radial", "nonradial", "scalars", "growth", "all")
MEMBERS = 10
RADIAL_FIELD_CHECKS = ("leray_nonneg", "hardy_n3", "link", "link2", "link_eq_n2", "link2_eq_n2",
                       "onedim", "key_radial", "lq_presum", "holder_mean", "step1")
NONRADIAL_FIELD_CHECKS = ("leray_nonneg", "hardy_n3", "link", "link2", "link_eq_n2",
                          "link2_eq_n2", "onedim", "key_radial", "holder_mean", "step1", "step2")
GROWTH_CHECKS = ("trudinger_growth", "lt_growth")
_MEMBER_TAGS = {"radial": 1, "radial_ft": 2, "nonradial": 3, "nonradial_ft": 4, "scalars": 5}


def _rng(seed, dim, tag):
    return np.random.default_rng([int(seed), int(dim), _MEMBER_TAGS[tag]])


def _random_modes(rng, n, count):
    modes = [(0, 0, float(rng.uniform(0.2, 1.0)))]
    while len(modes) < count:
        l = int(rng.integers(1, 4))
        idx = int(rng.integers(0, 2)) if n == 2 else int(rng.integers(-l, l + 1))
        if any(m[0] == l and m[1] == idx for m in modes):
            continue
        modes.append((l, idx, float(rng.uniform(-1.0, 1.0))))
    return tuple(modes)


def suite_members(dim, seed: int, tag: str, count: int = MEMBERS) -> list:
    """Deterministic family parameters for one member set.

    ``radial`` mixes polynomial bumps, ``hardy_eps`` and annular bumps;
    ``radial_ft`` and ``nonradial_ft`` vanish near the origin; ``nonradial``
    draws random harmonic mixtures.
    """
    n = as_dim(dim)
    rng = _rng(seed, n, tag)
    out = []
    for k in range(count):
        amp = float(rng.uniform(0.3, 3.0))
        radius = float(rng.uniform(0.5, 0.95))
        order = int(rng.integers(2, 6))
        inner = float(rng.uniform(0.05, 0.3))
        if tag == "radial":
            kind = ("bump", "hardy_eps", "ft_admissible")[k % 3]
            if kind == "hardy_eps":
                out.append(FamilyParams(kind, eps=float(rng.uniform(0.1, 0.5)), amplitude=amp))
            else:
                out.append(FamilyParams(kind, amplitude=amp, radius=radius, order=order,
                                        inner_cut=inner))
        elif tag == "radial_ft":
            out.append(FamilyParams("ft_admissible", amplitude=amp, radius=radius, order=order,
                                    inner_cut=inner))
        elif tag in ("nonradial", "nonradial_ft"):
            modes = _random_modes(rng, n, int(rng.integers(2, 5)))
            kind = "harmonic_mix" if tag == "nonradial" else "ft_admissible"
            out.append(FamilyParams(kind, amplitude=amp, radius=radius, order=order,
                                    inner_cut=inner, mode_spec=modes))
        else:
            raise DomainError(f"unknown member tag {tag!r}")
    return out


def _applies(check_id, n):
    if check_id == "hardy_n3":
        return n >= 3
    if check_id in ("link_eq_n2", "link2_eq_n2"):
        return n == 2
    return True


def _suite_plan(suite: str, dims, seed: int):
    """Ordered work units ``(dim, params or None, [(check_id, q), ...])``."""
    if suite not in SUITES:
        raise DomainError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    parts = {"core": ("radial", "nonradial"), "all": ("radial", "nonradial", "scalars", "growth")}
    parts = parts.get(suite, (suite,))
    explicit_only = suite == "core"
    units = []
    for dim in dims:
        n = as_dim(dim)
        if n > 6:
            raise UnsupportedDimensionError("suites cover n in {2, ..., 6}")
        nonradial = n in (2, 3)
        if "radial" in parts:
            checks = [c for c in RADIAL_FIELD_CHECKS if _applies(c, n)
                      and not (explicit_only and c in RATIO_CHECKS)]
            for p in suite_members(n, seed, "radial"):
                todo = []
                for c in checks:
                    qs = KEY_Q_GRID if c in Q_CHECKS else (None,)
                    todo.extend((c, q) for q in qs)
                units.append((n, p, todo))
            for p in suite_members(n, seed, "radial_ft"):
                units.append((n, p, [("ft_identity", None)]))
            units.append((n, None, [("gamma_bound", q) for q in KEY_Q_GRID]))
        if "nonradial" in parts and nonradial:
            checks = [c for c in NONRADIAL_FIELD_CHECKS if _applies(c, n)
                      and not (explicit_only and c in RATIO_CHECKS)]
            for p in suite_members(n, seed, "nonradial"):
                todo = []
                for c in checks:
                    qs = KEY_Q_GRID if c in Q_CHECKS else (None,)
                    todo.extend((c, q) for q in qs)
                units.append((n, p, todo))
            for p in suite_members(n, seed, "nonradial_ft"):
                units.append((n, p, [("ft_identity", None)]))
        if "scalars" in parts:
            for k in range(MEMBERS):
                units.append((n, ("scalars", k), [(c, None) for c in SCALAR_CHECKS]))
        if "growth" in parts:
            members = suite_members(n, seed, "radial")
            if nonradial:
                members = members + suite_members(n, seed, "nonradial")
            for p in members:
                units.append((n, p, [(c, None) for c in GROWTH_CHECKS]))
    return units


def _run_unit(unit, seed, tol, cfg):
    n, params, todo = unit
    out = []
    if params is None:
        ctx = _Bare(n, cfg)
        base = {}
    elif isinstance(params, tuple):
        ctx = _Bare(n, cfg)
        base = {"kind": "scalars", "seed": int(seed), "member": params[1]}
    else:
        ctx = FieldContext(make_family(params, n), cfg)
        base = params.as_record()
    for check_id, q in todo:
        desc = dict(base, q=q) if q is not None else dict(base)
        member = base.get("member", 0)
        rng = np.random.default_rng([int(seed), n, CHECK_IDS.index(check_id), int(member)])
        out.append(_run_check(check_id, ctx, n, desc, tol, q, rng))
    return out


def worker_count() -> int:
    env = os.environ.get("LTLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"LTLAB_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


def _finish_ratios(reports):
    """Fill running-maximum sides of step1/step2 in report order."""
    seen = {}
    for rep in reports:
        if rep.check_id not in ("step1", "step2") or rep.status == "inconclusive":
            continue
        key = (rep.check_id, rep.dim)
        hist = seen.setdefault(key, [])
        hist.append(rep.lhs)
        rep.rhs = RATIO_SLACK * max(hist)
        rep.margin, rep.tolerance, rep.status = _judge("ratio", rep.lhs, rep.rhs, rep.tolerance)


def run_suite(suite: str, dims, seed: int = 0, tol: float | None = None, cfg=None,
              threads: int | None = None) -> list:
    """Run a named suite. Reports come back in a fixed order for a given seed."""
    units = _suite_plan(suite, list(dims), seed)
    if not units:
        return []
    threads = threads or worker_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda u: _run_unit(u, seed, tol, cfg), units))
    else:
        chunks = [_run_unit(u, seed, tol, cfg) for u in units]
    reports = [r for chunk in chunks for r in chunk]
    _finish_ratios(reports)
    return reports


# sharpness probe ------------------------------------------------------------

@dataclass
class ProbeReport:
    beta: float
    alpha: float
    eps_grid: list
    values: list
    verdict: str
    dim: int = 2
    family: str = "moser_log"
    overflow: list = field(default_factory=list)
    note: str = ""


def normalized_member(kind: str, eps: float, dim, cfg=None) -> TestFunction:
    """Family member rescaled so that its Leray difference is at most 1."""
    u = make_family(FamilyParams(kind, eps=eps), dim)
    leray = fn.leray_functional_deep if u.is_radial else fn.leray_functional
    energy = leray(u, cfg=cfg).value
    if energy > 0:
        u = u.scaled(energy ** (-1.0 / u.dim))
    return u


def _probe_note(n, beta, alpha):
    notes = []
    if beta < 1.0 / n:
        notes.append("exponent on X2 below 1/n: the weighted exponential bound is expected to fail")
    elif beta > 1.0 / n:
        notes.append("exponent on X2 above 1/n: X2 <= 1 makes the integrand smaller, so a larger "
                     "exponent cannot break boundedness; the failing direction is below 1/n")
    if alpha >= structural_constants(n).moser_threshold:
        notes.append("alpha at or above the threshold: boundedness is not asserted here")
    return "; ".join(notes)


def sharpness_probe(dim, beta: float, alpha: float, eps_grid, family: str = "moser_log",
                    cfg=None) -> ProbeReport:
    """Moser functional along a normalized family as ``eps`` decreases.

    Verdict: ``diverging`` on overflow or a 10x rise from first to last value;
    ``bounded`` if the last three values agree within 5%; otherwise
    ``inconclusive``. At or above the threshold a ``bounded`` trend is
    reported as ``inconclusive``. Radial families are evaluated in log-depth,
    which reaches the depths where the weighted families concentrate.
    """
    n = as_dim(dim)
    eps = [float(e) for e in eps_grid]
    if any(not 0.0 < e < 1.0 for e in eps):
        raise DomainError("eps values must lie in (0, 1)")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError("eps_grid must be strictly decreasing")
    note = _probe_note(n, beta, alpha)
    if not eps:
        return ProbeReport(beta, alpha, [], [], "inconclusive", n, family, [], note)
    values, flags = [], []
    for e in eps:
        u = normalized_member(family, e, n, cfg)
        if u.is_radial:
            rep = fn.moser_report_deep(u, alpha, beta, cfg=cfg)
        else:
            rep = fn.moser_report(u, alpha, beta, cfg=cfg)
        values.append(rep.value)
        flags.append(rep.overflow)
    if any(flags) or values[-1] >= 10.0 * values[0]:
        verdict = "diverging"
    elif len(values) >= 3 and max(values[-3:]) <= 1.05 * min(values[-3:]):
        verdict = "bounded"
        if alpha >= structural_constants(n).moser_threshold:
            verdict = "inconclusive"
    else:
        verdict = "inconclusive"
    return ProbeReport(beta, alpha, eps, values, verdict, n, family, flags, note)


# sphere Poincare constant -------------------------------------------------

def poincare_estimate(dim=2, degree: int = 8, samples: int = 400, seed: int = 0,
                      points: int = 1024) -> float:
    """Informative lower estimate of the mean-zero Poincare constant on S^(n-1).

    Largest ratio ``int |g|^n / int |g'|^n`` over random mean-zero
    trigonometric polynomials of the given degree, plus the pure first mode.
    Only the circle (n = 2, the Wirtinger case, exact value 1) is covered.
    """
    n = as_dim(dim)
    if n != 2:
        raise UnsupportedDimensionError("poincare_estimate covers n = 2 only")
    theta = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
    k = np.arange(1, degree + 1)
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((samples, 2, degree)) / k
    coef = np.concatenate([coef, np.eye(2 * degree)[:1].reshape(1, 2, degree)])
    c, s = np.cos(np.outer(k, theta)), np.sin(np.outer(k, theta))
    g = coef[:, 0] @ c + coef[:, 1] @ s
    dg = (coef[:, 1] * k) @ c - (coef[:, 0] * k) @ s
    return float(np.max(np.mean(np.abs(g) ** n, axis=1) / np.mean(np.abs(dg) ** n, axis=1)))


# growth fits ----------------------------------------------------------------

def growth_profile(u_family, q_grid, dim, mode: str = "trudinger", cfg=None) -> list:
    """Per-q maximum over the family of the growth ratio."""
    n = as_dim(dim)
    q_grid = [float(q) for q in q_grid]
    if any(q < n + 1 or q > 120 for q in q_grid):
        raise DomainError(f"q values must lie in [{n + 1}, 120]")
    if any(b <= a for a, b in zip(q_grid, q_grid[1:])):
        raise DomainError("q_grid must be increasing")
    out = []
    for q in q_grid:
        ratios = [growth_ratio(u, q, mode, cfg) for u in u_family]
        out.append(max(ratios, default=0.0))
    return out


def growth_fit(u_family, q_grid, dim, mode: str = "trudinger", cfg=None) -> float:
    """Empirical constant: max over family and q of the growth ratio."""
    return max(growth_profile(u_family, q_grid, dim, mode, cfg), default=0.0)


# oracle cross-check ---------------------------------------------------------

@dataclass
class OracleComparison:
    name: str
    quad: float
    mc: float
    stderr: float
    agree: bool


def oracle_crosscheck(pieces, samples: int = 1_000_000, seed: int = 0, rel: float = 1e-3,
                      sigmas: float = 3.0, cfg=None) -> list:
    """Compare each :class:`~ltlab.functionals.BallIntegral` against Monte Carlo.

    Agreement means ``|quad - mc| <= max(sigmas * stderr, rel * |quad|)``.
    Consecutive pieces on the same field share one set of Monte-Carlo draws.
    """
    pieces = list(pieces)
    groups = []
    for piece in pieces:
        if groups and groups[-1][0].field is piece.field:
            groups[-1].append(piece)
        else:
            groups.append([piece])
    out = []
    for k, group in enumerate(groups):
        estimates = fn.mc_shared(group, samples, seed + k)
        for piece, m in zip(group, estimates):
            q = piece.quad(cfg)
            ok = abs(q.value - m.value) <= max(sigmas * m.error_estimate, rel * abs(q.value))
            out.append(OracleComparison(piece.name, q.value, m.value, m.error_estimate, bool(ok)))
    return out
