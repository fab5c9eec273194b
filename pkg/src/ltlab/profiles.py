"""Radial profiles parameterized by the log-depth ``tau = -log r``.

A profile exposes its value and its *scaled* radial derivative
``r d/dr = -d/dtau``; both stay finite and cheap to evaluate at depths where
``r`` underflows. ``eval``/``deriv`` give the ordinary r-parameterized view.

Profiles also offer a log-depth view in ``y = log(1 + tau)`` (so
``X1 = exp(-y)``): ``value_y(y, shift)`` is ``value * X1^shift`` and ``dy``
its y-derivative. Profiles built from powers of X1 and ramps in ``y``
evaluate this natively, which stays finite at depths where ``tau`` itself
overflows.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import interpolate

from ltlab.errors import DomainError


def _depth(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > 1):
        raise DomainError("radius must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        return -np.log(r)


def smoothstep(x):
    """Quintic smoothstep on [0, 1], clamped; C^2 at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def smoothstep_slope(x):
    inside = (x > 0.0) & (x < 1.0)
    x = np.clip(x, 0.0, 1.0)
    return np.where(inside, 30.0 * x * x * (1.0 - x) * (1.0 - x), 0.0)


class RadialProfile:
    """Base class. Subclasses implement ``value`` and ``rdr`` in tau."""

    inner_cut = 0.0
    outer_cut = 1.0

    @property
    def breaks_tau(self):
        out = []
        if 0.0 < self.outer_cut < 1.0:
            out.append(-math.log(self.outer_cut))
        if 0.0 < self.inner_cut < 1.0:
            out.append(-math.log(self.inner_cut))
        return tuple(out)

    def value(self, tau):
        raise NotImplementedError

    def rdr(self, tau):
        raise NotImplementedError

    @property
    def breaks_y(self):
        return tuple(math.log1p(b) for b in self.breaks_tau)

    def value_y(self, y, shift=0.0):
        """``value * X1^shift`` at log-depth ``y`` (generic route through tau)."""
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            tau = np.expm1(y)
            return _guarded_product(self.value(tau), np.exp(-shift * y))

    def dy(self, y, shift=0.0):
        """``d/dy`` of :meth:`value_y`."""
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            tau = np.expm1(y)
            val = self.value(tau)
            dval = -_guarded_product(self.rdr(tau), 1.0 + tau)
            return _guarded_product(dval - shift * val, np.exp(-shift * y))

    def eval(self, r):
        out = self.value(_depth(r))
        return float(out) if np.ndim(r) == 0 else out

    def deriv(self, r):
        """Ordinary derivative d/dr, for r in (0, 1]."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr <= 0):
            raise DomainError("deriv needs r > 0")
        out = self.rdr(_depth(r_arr)) / r_arr
        return float(out) if np.ndim(r) == 0 else out

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Scaled(self, float(other))
        return Product(self, other)

    __rmul__ = __mul__

    def __add__(self, other):
        return Sum(self, other)


class Zero(RadialProfile):
    def value(self, tau):
        return np.zeros(np.shape(tau))

    def rdr(self, tau):
        return np.zeros(np.shape(tau))

    def __repr__(self):
        return "Zero()"


class Constant(RadialProfile):
    def __init__(self, c: float):
        self.c = float(c)

    def value(self, tau):
        return np.full(np.shape(tau), self.c)

    def rdr(self, tau):
        return np.zeros(np.shape(tau))


class X1Power(RadialProfile):
    """``X1^p``; note ``r d/dr X1 = X1^2``."""

    def __init__(self, p: float):
        self.p = float(p)

    def value(self, tau):
        return np.power(1.0 + np.asarray(tau, dtype=float), -self.p)

    def rdr(self, tau):
        return self.p * np.power(1.0 + np.asarray(tau, dtype=float), -self.p - 1.0)

    def value_y(self, y, shift=0.0):
        with np.errstate(over="ignore"):
            return np.exp(-(self.p + shift) * np.asarray(y, dtype=float))

    def dy(self, y, shift=0.0):
        return -(self.p + shift) * self.value_y(y, shift)

    def __repr__(self):
        return f"X1Power({self.p:g})"


class RPower(RadialProfile):
    def __init__(self, p: float):
        self.p = float(p)

    def value(self, tau):
        with np.errstate(over="ignore"):
            return np.exp(-self.p * np.asarray(tau, dtype=float))

    def rdr(self, tau):
        return self.p * self.value(tau)


class PolyBump(RadialProfile):
    """``amplitude * r^l * (1 - (r/R)^2)^k`` on [0, R), zero beyond."""

    def __init__(self, radius=0.9, order=3, amplitude=1.0, l=0):
        if not 0.0 < radius <= 1.0:
            raise DomainError("bump radius must lie in (0, 1]")
        self.radius = float(radius)
        self.order = int(order)
        self.amplitude = float(amplitude)
        self.l = int(l)
        self.outer_cut = self.radius

    def _parts(self, tau):
        tau = np.asarray(tau, dtype=float)
        r = np.exp(-tau)
        rho2 = (r / self.radius) ** 2
        base = np.clip(1.0 - rho2, 0.0, None)
        return r, rho2, base

    def value(self, tau):
        r, _, base = self._parts(tau)
        return self.amplitude * r ** self.l * base ** self.order

    def rdr(self, tau):
        r, rho2, base = self._parts(tau)
        k = self.order
        dbase = np.where(base > 0, k * base ** max(k - 1, 0) * (-2.0 * rho2), 0.0)
        return self.amplitude * r ** self.l * (self.l * base ** k + dbase)

    def __repr__(self):
        return f"PolyBump(R={self.radius:g}, k={self.order}, a={self.amplitude:g}, l={self.l})"


class AnnulusBump(RadialProfile):
    """``amplitude * r^l * (4 (r-a)(b-r) / (b-a)^2)^k`` on (a, b), zero elsewhere."""

    def __init__(self, inner=0.1, outer=0.9, order=3, amplitude=1.0, l=0):
        if not 0.0 < inner < outer <= 1.0:
            raise DomainError("annulus needs 0 < inner < outer <= 1")
        self.inner_cut = float(inner)
        self.outer_cut = float(outer)
        self.order = int(order)
        self.amplitude = float(amplitude)
        self.l = int(l)

    def _parts(self, tau):
        r = np.exp(-np.asarray(tau, dtype=float))
        a, b = self.inner_cut, self.outer_cut
        c = 4.0 / (b - a) ** 2
        inside = (r > a) & (r < b)
        base = np.where(inside, c * (r - a) * (b - r), 0.0)
        dbase = np.where(inside, c * (a + b - 2.0 * r) * r, 0.0)  # r d/dr of base
        return r, base, dbase

    def value(self, tau):
        r, base, _ = self._parts(tau)
        return self.amplitude * r ** self.l * base ** self.order

    def rdr(self, tau):
        r, base, dbase = self._parts(tau)
        k = self.order
        return self.amplitude * r ** self.l * (self.l * base ** k + k * base ** (k - 1) * dbase)

    def __repr__(self):
        return f"AnnulusBump({self.inner_cut:g}, {self.outer_cut:g}, k={self.order}, a={self.amplitude:g}, l={self.l})"


class Cutoff(RadialProfile):
    """C^2 cutoff: 1 on [0, start], quintic smoothstep down to 0 at ``stop``."""

    def __init__(self, start=0.5, stop=0.9):
        if not 0.0 < start < stop <= 1.0:
            raise DomainError("cutoff needs 0 < start < stop <= 1")
        self.start = float(start)
        self.stop = float(stop)
        self.outer_cut = self.stop

    @property
    def breaks_tau(self):
        return (-math.log(self.stop), -math.log(self.start))

    def value(self, tau):
        r = np.exp(-np.asarray(tau, dtype=float))
        return smoothstep((self.stop - r) / (self.stop - self.start))

    def rdr(self, tau):
        r = np.exp(-np.asarray(tau, dtype=float))
        w = self.stop - self.start
        return -r * smoothstep_slope((self.stop - r) / w) / w


class DepthRamp(RadialProfile):
    """Smoothstep ramp in a function of depth, rising from 0 at ``outer`` radius.

    ``variable="log"`` ramps in ``tau`` over length ``scale`` (the classical
    Moser functions); ``variable="loglog"`` ramps in ``log(1 + tau)`` (Moser
    functions adapted to the X1 weight). Constant ``amplitude`` at depth
    beyond the ramp.
    """

    def __init__(self, scale, variable="log", outer=0.9, amplitude=1.0):
        if scale <= 0:
            raise DomainError("ramp scale must be positive")
        if variable not in ("log", "loglog"):
            raise DomainError(f"unknown ramp variable {variable!r}")
        self.scale = float(scale)
        self.variable = variable
        self.outer_cut = float(outer)
        self.amplitude = float(amplitude)
        self.tau0 = -math.log(self.outer_cut)

    def _coord(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.variable == "log":
            return (tau - self.tau0) / self.scale, np.full(tau.shape, 1.0 / self.scale)
        y = np.log1p(tau) - math.log1p(self.tau0)
        return y / self.scale, 1.0 / (self.scale * (1.0 + tau))

    def _knots(self):
        """Ramp knots in the ramp variable, measured from the start."""
        return (0.0, self.scale)

    def _shape(self, x):
        return smoothstep(x)

    def _shape_slope(self, x):
        return smoothstep_slope(x)

    @property
    def breaks_y(self):
        if self.variable == "log":
            return tuple(math.log1p(b) for b in self.breaks_tau)
        y0 = math.log1p(self.tau0)
        return tuple(y0 + k for k in self._knots())

    @property
    def breaks_tau(self):
        if self.variable == "log":
            return tuple(self.tau0 + k for k in self._knots())
        with np.errstate(over="ignore"):
            return tuple(float(np.expm1(y)) for y in self.breaks_y)

    def value(self, tau):
        x, _ = self._coord(tau)
        return self.amplitude * self._shape(x)

    def rdr(self, tau):
        x, dx = self._coord(tau)
        return -self.amplitude * _guarded_product(self._shape_slope(x), dx)

    def value_y(self, y, shift=0.0):
        if self.variable == "log":
            return super().value_y(y, shift)
        y = np.asarray(y, dtype=float)
        x = (y - math.log1p(self.tau0)) / self.scale
        with np.errstate(over="ignore"):
            return _guarded_product(self.amplitude * self._shape(x), np.exp(-shift * y))

    def dy(self, y, shift=0.0):
        if self.variable == "log":
            return super().dy(y, shift)
        y = np.asarray(y, dtype=float)
        x = (y - math.log1p(self.tau0)) / self.scale
        d = self.amplitude * (self._shape_slope(x) / self.scale - shift * self._shape(x))
        with np.errstate(over="ignore"):
            return _guarded_product(d, np.exp(-shift * y))

    def __repr__(self):
        return f"DepthRamp({self.scale:g}, {self.variable}, a={self.amplitude:g})"


class DepthTent(DepthRamp):
    """Rise over ``scale``, then fall back to 0 over ``fall`` (default ``scale``).

    Lengths are in the ramp variable. The fall keeps weighted families
    compactly supported; a plateau would leave ``X1^(-1+1/n) * ramp``
    unbounded at the origin.
    """

    def __init__(self, scale, variable="log", outer=0.9, amplitude=1.0, fall=None):
        super().__init__(scale, variable, outer, amplitude)
        self.fall = float(scale if fall is None else fall)
        if self.fall <= 0:
            raise DomainError("tent fall length must be positive")

    def _knots(self):
        return (0.0, self.scale, self.scale + self.fall)

    def _shape(self, x):
        return smoothstep(x) - smoothstep((x - 1.0) * self.scale / self.fall)

    def _shape_slope(self, x):
        k = self.scale / self.fall
        return smoothstep_slope(x) - k * smoothstep_slope((x - 1.0) * k)

    def __repr__(self):
        return f"DepthTent({self.scale:g}, {self.variable}, fall={self.fall:g}, a={self.amplitude:g})"


def _guarded_product(a, b):
    with np.errstate(over="ignore", invalid="ignore"):
        out = a * b
    return np.where((a == 0) | (b == 0), 0.0, out)


class Product(RadialProfile):
    def __init__(self, left: RadialProfile, right: RadialProfile):
        self.left = left
        self.right = right
        self.inner_cut = max(left.inner_cut, right.inner_cut)
        self.outer_cut = min(left.outer_cut, right.outer_cut)

    @property
    def breaks_tau(self):
        return tuple(sorted(set(self.left.breaks_tau) | set(self.right.breaks_tau)))

    def value(self, tau):
        return _guarded_product(self.left.value(tau), self.right.value(tau))

    def rdr(self, tau):
        lv, rv = self.left.value(tau), self.right.value(tau)
        return _guarded_product(self.left.rdr(tau), rv) + _guarded_product(lv, self.right.rdr(tau))

    @property
    def breaks_y(self):
        return tuple(sorted(set(self.left.breaks_y) | set(self.right.breaks_y)))

    def _shifts(self, shift):
        # the X1 shift is absorbed by a power-of-X1 factor when there is one
        if isinstance(self.right, X1Power) and not isinstance(self.left, X1Power):
            return 0.0, shift
        return shift, 0.0

    def value_y(self, y, shift=0.0):
        sl, sr = self._shifts(shift)
        return _guarded_product(self.left.value_y(y, sl), self.right.value_y(y, sr))

    def dy(self, y, shift=0.0):
        sl, sr = self._shifts(shift)
        return (_guarded_product(self.left.dy(y, sl), self.right.value_y(y, sr))
                + _guarded_product(self.left.value_y(y, sl), self.right.dy(y, sr)))

    def __repr__(self):
        return f"{self.left!r}*{self.right!r}"


class Scaled(RadialProfile):
    def __init__(self, base: RadialProfile, c: float):
        self.base = base
        self.c = float(c)
        self.inner_cut = base.inner_cut
        self.outer_cut = base.outer_cut

    @property
    def breaks_tau(self):
        return self.base.breaks_tau

    def value(self, tau):
        return self.c * self.base.value(tau)

    def rdr(self, tau):
        return self.c * self.base.rdr(tau)

    @property
    def breaks_y(self):
        return self.base.breaks_y

    def value_y(self, y, shift=0.0):
        return self.c * self.base.value_y(y, shift)

    def dy(self, y, shift=0.0):
        return self.c * self.base.dy(y, shift)


class Sum(RadialProfile):
    def __init__(self, *terms: RadialProfile):
        self.terms = terms
        self.inner_cut = min(t.inner_cut for t in terms)
        self.outer_cut = max(t.outer_cut for t in terms)

    @property
    def breaks_tau(self):
        return tuple(sorted(set().union(*(t.breaks_tau for t in self.terms))))

    def value(self, tau):
        return sum(t.value(tau) for t in self.terms)

    def rdr(self, tau):
        return sum(t.rdr(tau) for t in self.terms)

    @property
    def breaks_y(self):
        return tuple(sorted(set().union(*(t.breaks_y for t in self.terms))))

    def value_y(self, y, shift=0.0):
        return sum(t.value_y(y, shift) for t in self.terms)

    def dy(self, y, shift=0.0):
        return sum(t.dy(y, shift) for t in self.terms)


class Sampled(RadialProfile):
    """Profile backed by callables (used for numerically computed means)."""

    def __init__(self, value_fn, rdr_fn, inner_cut=0.0, outer_cut=1.0, breaks=()):
        self._value = value_fn
        self._rdr = rdr_fn
        self.inner_cut = inner_cut
        self.outer_cut = outer_cut
        self._breaks = tuple(breaks)

    @property
    def breaks_tau(self):
        return self._breaks

    def value(self, tau):
        return self._value(np.asarray(tau, dtype=float))

    def rdr(self, tau):
        return self._rdr(np.asarray(tau, dtype=float))


class Tabulated(RadialProfile):
    """Cubic Hermite table of an expensive profile on ``tau <= deep_max``.

    Nodes are uniform in ``log(1 + tau)``: ``points`` of them up to
    ``tau_max`` and a coarser ``deep_points`` from there to ``deep_max``,
    plus the profile breaks. Deeper points fall back to direct evaluation
    of ``source``.
    """

    def __init__(self, source: RadialProfile, tau_max: float = 50.0, points: int = 4000,
                 chunk: int = 256, deep_max: float = 1e12, deep_points: int = 600):
        self.source = source
        self.inner_cut = source.inner_cut
        self.outer_cut = source.outer_cut
        self.tau_max = float(max(tau_max, deep_max))
        x = np.concatenate([np.linspace(0.0, math.log1p(tau_max), points),
                            np.linspace(math.log1p(tau_max), math.log1p(self.tau_max),
                                        deep_points)])
        extra = [math.log1p(b) for b in source.breaks_tau if b < self.tau_max]
        x = np.unique(np.concatenate([x, extra]))
        tau = np.expm1(x)
        vals = np.empty_like(tau)
        rdrs = np.empty_like(tau)
        for i in range(0, tau.size, chunk):
            vals[i:i + chunk] = source.value(tau[i:i + chunk])
            rdrs[i:i + chunk] = source.rdr(tau[i:i + chunk])
        # d/dx = (1 + tau) d/dtau = -(1 + tau) rdr
        self._spline = interpolate.CubicHermiteSpline(x, vals, -(1.0 + tau) * rdrs)
        self._slope = self._spline.derivative()

    @property
    def breaks_tau(self):
        return self.source.breaks_tau

    def _split(self, tau, table_fn, source_fn):
        tau = np.asarray(tau, dtype=float)
        deep = tau > self.tau_max
        x = np.log1p(np.minimum(tau, self.tau_max))
        out = np.asarray(table_fn(x, tau), dtype=float)
        if np.any(deep):
            out = np.array(out, copy=True)
            out[deep] = source_fn(tau[deep])
        return out

    def value(self, tau):
        return self._split(tau, lambda x, t: self._spline(x), self.source.value)

    def rdr(self, tau):
        return self._split(tau, lambda x, t: -self._slope(x) / (1.0 + t), self.source.rdr)
