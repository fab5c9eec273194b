"""Test functions on the unit ball: families, gauges, spherical means.

A :class:`TestFunction` is a finite spherical-harmonic synthesis

    V(r, theta) = sum_m profile_m(r) h_m(theta),

optionally passed through ``|V|^power`` and then multiplied by the radial
gauge factor ``r^r_exp X1(r)^x1_exp``. Gauges relate as

    v = X1^(1 - 1/n) u,   w = |v|^(n/2),   zeta = r^(1 - n/2) X1^(-1/2) w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ltlab import sphere
from ltlab.errors import AdmissibilityError, DomainError, GaugeError, UnsupportedDimensionError
from ltlab.profiles import (AnnulusBump, Cutoff, DepthRamp, DepthTent, PolyBump, Product, RadialProfile,
                            Sampled, Sum, Tabulated, X1Power, Zero)
from ltlab.specialfn import as_dim

GAUGES = ("u", "v", "w", "zeta")
KINDS = ("bump", "hardy_eps", "harmonic_mix", "ft_admissible", "moser", "moser_log")


@dataclass(frozen=True)
class Mode:
    l: int
    index: int
    profile: RadialProfile


@dataclass(frozen=True)
class Sample:
    """Field value, ``r d/dr`` of it, and its squared unit-sphere gradient."""

    val: np.ndarray
    rdr: np.ndarray
    tan2: np.ndarray

    @property
    def grad2_scaled(self):
        """``r^2 |grad f|^2``."""
        return self.rdr * self.rdr + self.tan2


@dataclass(frozen=True)
class TestFunction:
    dim: int
    modes: tuple
    gauge: str = "u"
    power: float | None = None
    r_exp: float = 0.0
    x1_exp: float = 0.0
    descriptor: dict = field(default_factory=dict, compare=False)

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "dim", as_dim(self.dim))
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.gauge not in GAUGES:
            raise GaugeError(f"unknown gauge {self.gauge!r}")
        if not self.is_radial:
            if self.dim not in (2, 3):
                raise UnsupportedDimensionError("nonradial fields need n in {2, 3}")
            for m in self.modes:
                sphere.validate_mode(self.dim, m.l, m.index)

    @property
    def is_radial(self) -> bool:
        return all(m.l == 0 for m in self.modes)

    @property
    def is_linear(self) -> bool:
        return self.power is None

    @property
    def inner_cut(self) -> float:
        return min((m.profile.inner_cut for m in self.modes), default=1.0)

    @property
    def outer_cut(self) -> float:
        return max((m.profile.outer_cut for m in self.modes), default=0.0)

    @property
    def breaks_tau(self):
        out = set()
        for m in self.modes:
            out.update(m.profile.breaks_tau)
        return tuple(sorted(out))

    @property
    def rough(self) -> bool:
        """True when samples carry sphere-quadrature noise or angular kinks."""
        if any(isinstance(m.profile, Tabulated) for m in self.modes):
            return True
        return not self.is_radial and self.power is not None and not _even_int(self.power)

    def scaled(self, c: float) -> "TestFunction":
        """``c * f`` (the factor enters before any power, as an amplitude)."""
        if self.is_linear:
            modes = tuple(Mode(m.l, m.index, m.profile * c) for m in self.modes)
            return replace(self, modes=modes)
        k = abs(c) ** (1.0 / self.power)
        return replace(self, modes=tuple(Mode(m.l, m.index, m.profile * k) for m in self.modes))

    def _synth(self, tau, angles):
        tau = np.asarray(tau, dtype=float)
        if self.is_radial or angles is None:
            if not self.is_radial:
                raise DomainError("angles are required for nonradial fields")
            val = np.zeros(tau.shape)
            rdr = np.zeros(tau.shape)
            for m in self.modes:
                val = val + m.profile.value(tau)
                rdr = rdr + m.profile.rdr(tau)
            return val, rdr, np.zeros(tau.shape)
        hv, hg = sphere.eval_harmonics(self.dim, [(m.l, m.index) for m in self.modes], angles)
        shape = np.broadcast_shapes(tau.shape, np.shape(angles[0]))
        val = np.zeros(shape)
        rdr = np.zeros(shape)
        comps = [np.zeros(shape) for _ in hg[0]] if hg else []
        for m, h, g in zip(self.modes, hv, hg):
            p = m.profile.value(tau)
            val += p * h
            rdr += m.profile.rdr(tau) * h
            for c, gi in zip(comps, g):
                c += p * gi
        tan2 = np.zeros(shape)
        for c in comps:
            tan2 += c * c
        return val, rdr, tan2

    def sample(self, r, tau, angles=None) -> Sample:
        """Field data at log-depth ``tau`` (``r`` is accepted for symmetry, unused)."""
        val, rdr, tan2 = self._synth(tau, angles)
        if self.power is not None:
            k = self.power
            a = np.abs(val)
            with np.errstate(divide="ignore", invalid="ignore"):
                dk = np.where(a > 0, k * a ** (k - 1.0) * np.sign(val), 0.0)
            val = a ** k
            rdr = dk * rdr
            tan2 = dk * dk * tan2
        if self.r_exp or self.x1_exp:
            tau = np.asarray(tau, dtype=float)
            with np.errstate(over="ignore"):
                fac = np.exp(-self.r_exp * tau) * (1.0 + tau) ** (-self.x1_exp)
            fac_rdr = fac * (self.r_exp + self.x1_exp / (1.0 + tau))
            val, rdr, tan2 = (_safe_mul(val, fac), _safe_mul(rdr, fac) + _safe_mul(val, fac_rdr),
                              _safe_mul(tan2, fac * fac))
        return Sample(val, rdr, tan2)

    def eval(self, r, angles=None):
        """Field value at radius ``r`` (and angles, for nonradial fields)."""
        r_arr = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            tau = -np.log(r_arr)
        out = self.sample(r_arr, tau, angles).val
        return float(out) if np.ndim(out) == 0 else out


def _even_int(p) -> bool:
    return float(p).is_integer() and int(p) % 2 == 0


def _safe_mul(a, b):
    with np.errstate(over="ignore", invalid="ignore"):
        out = a * b
    return np.where(a == 0, 0.0, out)


def radial_field(profile: RadialProfile, dim, gauge="u", descriptor=None) -> TestFunction:
    return TestFunction(as_dim(dim), (Mode(0, 0, profile),), gauge, descriptor=descriptor or {})


@dataclass(frozen=True)
class FamilyParams:
    """Declarative description of a test-function family member.

    ``moser`` is a ramp of length ``0.5 / eps`` in the depth ``-log r``
    (constant near the origin). ``moser_log`` is ``X1^(-1+1/n)`` times a
    tent in ``log(1 - log r)`` rising over ``1 / eps`` and falling over
    ``4 / eps``.
    As ``eps -> 0`` they concentrate like the extremals of the plain and the
    weighted exponential inequalities.
    """

    kind: str
    eps: float = 0.1
    amplitude: float = 1.0
    mode_spec: tuple | None = None
    radius: float = 0.9
    order: int = 3
    inner_cut: float = 0.1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown family kind {self.kind!r}")
        if not 0.0 < self.eps < 1.0:
            raise DomainError("eps must lie in (0, 1)")
        if self.kind == "ft_admissible" and not 0.0 < self.inner_cut < self.radius:
            raise DomainError("ft_admissible needs 0 < inner_cut < radius")
        if self.mode_spec is not None:
            object.__setattr__(self, "mode_spec", tuple(tuple(m) for m in self.mode_spec))

    def as_record(self) -> dict:
        rec = {"kind": self.kind, "eps": self.eps, "amplitude": self.amplitude,
               "radius": self.radius, "order": self.order, "inner_cut": self.inner_cut}
        if self.mode_spec:
            rec["modes"] = [list(m) for m in self.mode_spec]
        return rec

    def describe(self) -> str:
        """Compact ``key=value;...`` form, accepted back by :meth:`parse`."""
        parts = [f"kind={self.kind}"]
        for key in ("eps", "amplitude", "radius", "order", "inner_cut"):
            parts.append(f"{key}={getattr(self, key):.10g}")
        if self.mode_spec:
            parts.append("modes=" + "|".join(":".join(f"{x:g}" for x in m) for m in self.mode_spec))
        return ";".join(parts)

    @classmethod
    def parse(cls, text: str) -> "FamilyParams":
        fields = {}
        for item in filter(None, (p.strip() for p in text.split(";"))):
            if "=" not in item:
                if "kind" in fields:
                    raise DomainError(f"malformed family item {item!r}")
                fields["kind"] = item
                continue
            key, value = (s.strip() for s in item.split("=", 1))
            if key == "kind":
                fields[key] = value
            elif key == "modes":
                modes = []
                for m in value.split("|"):
                    l, idx, amp = m.split(":")
                    idx = {"cos": 0, "sin": 1}.get(idx, idx)
                    modes.append((int(l), int(idx), float(amp)))
                fields["mode_spec"] = tuple(modes)
            elif key == "order":
                fields[key] = int(value)
            elif key in ("eps", "amplitude", "radius", "inner_cut"):
                fields[key] = float(value)
            else:
                raise DomainError(f"unknown family key {key!r}")
        if "kind" not in fields:
            raise DomainError("family description needs a kind")
        return cls(**fields)


DEFAULT_MODES = {2: ((0, 0, 1.0), (1, 0, 0.6), (2, 1, 0.4)),
                 3: ((0, 0, 1.0), (1, 1, 0.6), (2, -1, 0.4))}


def make_family(params: FamilyParams, dim) -> TestFunction:
    n = as_dim(dim)
    p = params
    desc = p.as_record()
    if p.kind == "bump":
        return radial_field(PolyBump(p.radius, p.order, p.amplitude), n, descriptor=desc)
    if p.kind == "hardy_eps":
        prof = Product(X1Power(1.0 / n - 1.0 + p.eps), Cutoff(0.5, 0.9)) * p.amplitude
        return radial_field(prof, n, descriptor=desc)
    if p.kind == "moser":
        return radial_field(DepthRamp(0.5 / p.eps, "log", 0.9, p.amplitude), n, descriptor=desc)
    if p.kind == "moser_log":
        tent = DepthTent(1.0 / p.eps, "loglog", 0.9, p.amplitude, fall=4.0 / p.eps)
        return radial_field(Product(X1Power(-1.0 + 1.0 / n), tent), n, descriptor=desc)
    if p.kind == "harmonic_mix":
        if n not in (2, 3):
            raise UnsupportedDimensionError("harmonic_mix needs n in {2, 3}")
        spec = p.mode_spec or DEFAULT_MODES[n]
        modes = tuple(Mode(int(l), int(i), PolyBump(p.radius, p.order, p.amplitude * a, l=int(l)))
                      for l, i, a in spec)
        return TestFunction(n, modes, "u", descriptor=desc)
    if p.kind == "ft_admissible":
        if p.mode_spec is None:
            return radial_field(AnnulusBump(p.inner_cut, p.radius, p.order, p.amplitude), n,
                                descriptor=desc)
        if n not in (2, 3):
            raise UnsupportedDimensionError("nonradial ft_admissible needs n in {2, 3}")
        modes = tuple(Mode(int(l), int(i),
                           AnnulusBump(p.inner_cut, p.radius, p.order, p.amplitude * a, l=int(l)))
                      for l, i, a in p.mode_spec)
        return TestFunction(n, modes, "u", descriptor=desc)
    raise DomainError(f"unsupported family kind {p.kind!r}")


def _shift(f: TestFunction, gauge: str, r_exp=0.0, x1_exp=0.0) -> TestFunction:
    return replace(f, gauge=gauge, r_exp=f.r_exp + r_exp, x1_exp=f.x1_exp + x1_exp)


def change_gauge(f: TestFunction, target: str) -> TestFunction:
    """Convert between the u, v, w and zeta gauges.

    Supported paths: u <-> v, v -> w, w <-> zeta, and compositions
    u -> w, u -> zeta, v -> zeta.
    """
    if target not in GAUGES:
        raise GaugeError(f"unknown gauge {target!r}")
    n = f.dim
    src = f.gauge
    if src == target:
        return f
    a = 1.0 - 1.0 / n
    if (src, target) == ("u", "v"):
        return _shift(f, "v", x1_exp=a)
    if (src, target) == ("v", "u"):
        return _shift(f, "u", x1_exp=-a)
    if (src, target) == ("v", "w"):
        if not f.is_linear:
            raise GaugeError("v -> w needs a field that is linear in its modes")
        # |X v|^k = X^k |v|^k for the positive radial gauge factor X
        k = n / 2.0
        return replace(f, gauge="w", power=k, r_exp=f.r_exp * k, x1_exp=f.x1_exp * k)
    if (src, target) == ("w", "zeta"):
        if n >= 3 and f.inner_cut <= 0.0:
            raise GaugeError("zeta gauge is singular at the origin for n >= 3; "
                             "the field must vanish near 0")
        return _shift(f, "zeta", r_exp=1.0 - n / 2.0, x1_exp=-0.5)
    if (src, target) == ("zeta", "w"):
        return _shift(f, "w", r_exp=n / 2.0 - 1.0, x1_exp=0.5)
    if src == "u" and target in ("w", "zeta"):
        return change_gauge(change_gauge(f, "v"), target)
    if src == "v" and target == "zeta":
        return change_gauge(change_gauge(f, "w"), "zeta")
    raise GaugeError(f"no gauge conversion {src} -> {target}")


def relabel(f: TestFunction, gauge: str) -> TestFunction:
    """Reinterpret a field as living in another gauge (no transform)."""
    if gauge not in GAUGES:
        raise GaugeError(f"unknown gauge {gauge!r}")
    return replace(f, gauge=gauge)


MEAN_RESOLUTION = {2: (256,), 3: (32, 64)}


def spherical_mean(f: TestFunction, resolution=None, tabulate=True) -> RadialProfile:
    """Profile of the l = 0 component (the mean over each sphere ``|x| = r``).

    Linear fields read the mean off their l = 0 modes. Other fields are
    averaged numerically, by default on the lighter ``MEAN_RESOLUTION`` grid,
    and (with ``tabulate``) stored as a cubic Hermite table.
    """
    if f.is_radial:
        return Sampled(lambda tau: f.sample(None, tau).val, lambda tau: f.sample(None, tau).rdr,
                       f.inner_cut, f.outer_cut, f.breaks_tau)
    if f.is_linear:
        radial = [m.profile for m in f.modes if m.l == 0]
        if not radial:
            return Zero()
        base = replace(f, modes=tuple(Mode(0, 0, p) for p in radial))
        return spherical_mean(base)
    grid = sphere.sphere_grid(f.dim, tuple(resolution or MEAN_RESOLUTION[f.dim]))
    angles = tuple(a[None, :] for a in grid.angles)

    def _mean(tau, attr):
        tau = np.asarray(tau, dtype=float)
        s = f.sample(None, tau.reshape(-1, 1), angles)
        return grid.mean(getattr(s, attr)).reshape(tau.shape)

    exact = Sampled(lambda tau: _mean(tau, "val"), lambda tau: _mean(tau, "rdr"),
                    f.inner_cut, f.outer_cut, f.breaks_tau)
    return Tabulated(exact) if tabulate else exact


def mean_field(f: TestFunction, resolution=None) -> TestFunction:
    """The spherical mean of ``f`` as a radial field in the same gauge."""
    return replace(radial_field(spherical_mean(f, resolution), f.dim, f.gauge),
                   descriptor=dict(f.descriptor, mean=True))


def without_mean(f: TestFunction) -> TestFunction:
    """``f - f_0`` for a linear field (drops the l = 0 modes)."""
    if not f.is_linear:
        raise GaugeError("mean removal is defined for linear fields only")
    return replace(f, modes=tuple(m for m in f.modes if m.l != 0))


def harmonic_eigenvalue(l: int, dim) -> float:
    n = as_dim(dim)
    if l < 0:
        raise DomainError("harmonic degree must be >= 0")
    return float(l * (l + n - 2))


def project_mode(f: TestFunction, l: int, index: int, r, resolution=None):
    """Sphere-mean of ``f(r, .) h_{l,index}``: the mode coefficient at radius r."""
    grid = sphere.sphere_grid(f.dim, tuple(resolution) if resolution else None)
    (h,), _ = sphere.eval_harmonics(f.dim, [(l, index)], grid.angles)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    tau = -np.log(r_arr)
    vals = f.sample(None, tau[:, None], tuple(a[None, :] for a in grid.angles)).val
    out = grid.mean(vals * h[None, :])
    return float(out[0]) if np.ndim(r) == 0 else out
