import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ltlab.errors import DomainError, GaugeError, UnsupportedDimensionError
from ltlab.profiles import (AnnulusBump, Cutoff, DepthRamp, DepthTent, PolyBump, Product,
                            Tabulated, X1Power)
from ltlab.testfunctions import (FamilyParams, Mode, TestFunction, change_gauge, make_family,
                                 mean_field, project_mode, radial_field, relabel, spherical_mean,
                                 without_mean)

PROFILES = [
    PolyBump(0.9, 3),
    PolyBump(0.7, 2, 1.5, l=2),
    AnnulusBump(0.1, 0.9, 3),
    Cutoff(0.5, 0.9),
    DepthRamp(2.0, "log"),
    DepthRamp(3.0, "loglog"),
    DepthTent(2.0, "loglog", fall=5.0),
    Product(X1Power(-0.5), DepthTent(1.5, "loglog", fall=3.0)),
    Product(X1Power(0.3), Cutoff(0.5, 0.9)) * 2.0,
    PolyBump(0.9, 3) + DepthRamp(1.0, "log") * 0.5,
]
depths = st.floats(min_value=0.02, max_value=40.0)


@pytest.mark.parametrize("prof", PROFILES, ids=repr)
@given(tau=depths)
def test_rdr_matches_finite_difference(prof, tau):
    # r d/dr = -d/dtau
    h = 1e-6 * (1.0 + tau)
    fd = -(prof.value(tau + h) - prof.value(tau - h)) / (2 * h)
    assert float(prof.rdr(tau)) == pytest.approx(float(fd), rel=1e-5, abs=1e-6)


@pytest.mark.parametrize("prof", PROFILES, ids=repr)
@pytest.mark.parametrize("shift", [0.0, 0.5, -0.5])
def test_log_depth_view_matches_tau_view(prof, shift):
    y = np.linspace(0.0, 3.5, 57)
    tau = np.expm1(y)
    expect = prof.value(tau) * np.exp(-shift * y)
    assert np.allclose(prof.value_y(y, shift), expect, rtol=1e-12, atol=1e-14)
    h = 1e-6
    fd = (prof.value_y(y + h, shift) - prof.value_y(y - h, shift)) / (2 * h)
    assert np.allclose(prof.dy(y, shift), fd, rtol=1e-5, atol=1e-6)


def test_log_depth_view_beyond_tau_range():
    # support near y = 3000, where tau = expm1(y) overflows
    prof = Product(X1Power(-0.5), DepthTent(1000.0, "loglog", fall=4000.0))
    y = np.array([1000.0, 3000.0, 4999.0])
    v = prof.value_y(y, 0.5)
    assert np.all(np.isfinite(v)) and np.all(v > 0)
    assert prof.value_y(6000.0, 0.5) == 0.0
    assert math.isinf(prof.breaks_tau[-1])
    assert prof.breaks_y[-1] == pytest.approx(math.log1p(-math.log(0.9)) + 5000.0)


def test_tent_shape():
    tent = DepthTent(2.0, "log", outer=0.9, amplitude=3.0, fall=6.0)
    t0 = -math.log(0.9)
    assert tent.value(t0) == 0.0
    assert tent.value(t0 + 2.0) == pytest.approx(3.0)
    assert tent.value(t0 + 8.0) == pytest.approx(0.0, abs=1e-15)
    assert tent.breaks_tau == pytest.approx((t0, t0 + 2.0, t0 + 8.0))
    with pytest.raises(DomainError):
        DepthTent(1.0, fall=-1.0)


@pytest.mark.parametrize("bad", [lambda: PolyBump(1.5), lambda: AnnulusBump(0.5, 0.4),
                                 lambda: Cutoff(0.9, 0.5), lambda: DepthRamp(-1.0),
                                 lambda: DepthRamp(1.0, "cubic")])
def test_profile_validation(bad):
    with pytest.raises(DomainError):
        bad()


def test_tabulated_matches_source():
    src = Product(X1Power(-0.5), DepthTent(1.5, "loglog", fall=3.0))
    tab = Tabulated(src)
    tau = np.geomspace(1e-3, 40.0, 300)
    assert np.allclose(tab.value(tau), src.value(tau), rtol=1e-8, atol=1e-10)
    assert np.allclose(tab.rdr(tau), src.rdr(tau), rtol=1e-5, atol=1e-7)
    deep = np.array([60.0, 200.0, 1e6])
    assert np.allclose(tab.value(deep), src.value(deep), rtol=1e-6, atol=1e-10)
    beyond = np.array([2e12, 1e14])
    assert np.array_equal(tab.value(beyond), src.value(beyond))


def test_hardy_eps_value():
    u = make_family(FamilyParams("hardy_eps", eps=0.1), 2)
    assert u.eval(math.exp(-1.0)) == pytest.approx(0.5 ** (0.1 - 0.5), rel=1e-12)
    assert u.eval(0.95) == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_bump_support(n):
    u = make_family(FamilyParams("bump"), n)
    assert u.eval(0.9) == 0.0
    assert u.eval(0.0) == pytest.approx(1.0)
    assert u.outer_cut == pytest.approx(0.9)


def test_ft_admissible_vanishes_near_origin():
    u = make_family(FamilyParams("ft_admissible", inner_cut=0.1), 3)
    assert u.eval(0.05) == 0.0 and u.eval(0.95) == 0.0
    assert u.eval(0.5) > 0
    assert u.inner_cut == pytest.approx(0.1)


def test_moser_families_concentrate():
    wide = make_family(FamilyParams("moser", eps=0.5), 2)
    narrow = make_family(FamilyParams("moser", eps=0.05), 2)
    r = 0.1
    assert narrow.eval(r) < wide.eval(r)
    assert narrow.eval(1e-300) == pytest.approx(1.0)


def test_family_parse_round_trip():
    p = FamilyParams("harmonic_mix", eps=0.2, amplitude=0.7, mode_spec=((0, 0, 1.0), (1, 1, 0.5)))
    q = FamilyParams.parse(p.describe())
    assert q == p
    assert FamilyParams.parse("moser_log") == FamilyParams("moser_log")
    assert FamilyParams.parse("kind=bump; modes=0:cos:1|1:sin:0.5").mode_spec == ((0, 0, 1.0), (1, 1, 0.5))


@pytest.mark.parametrize("text", ["bogus", "kind=bump;zz=1", "eps=0.1", "bump;eps=2"])
def test_family_parse_errors(text):
    with pytest.raises(DomainError):
        FamilyParams.parse(text)


def test_harmonic_mix_needs_low_dims():
    with pytest.raises(UnsupportedDimensionError):
        make_family(FamilyParams("harmonic_mix"), 4)


@given(st.floats(min_value=0.05, max_value=0.85))
def test_gauge_round_trip(r):
    u = make_family(FamilyParams("harmonic_mix"), 3)
    v = change_gauge(u, "v")
    back = change_gauge(v, "u")
    ang = (np.array([0.7]), np.array([1.3]))
    assert back.eval(r, ang)[0] == pytest.approx(u.eval(r, ang)[0], rel=1e-12, abs=1e-15)
    x1 = 1.0 / (1.0 - math.log(r))
    assert v.eval(r, ang)[0] == pytest.approx(x1 ** (2.0 / 3.0) * u.eval(r, ang)[0], rel=1e-12, abs=1e-15)


def test_w_gauge_is_power_of_v():
    u = make_family(FamilyParams("bump"), 4)
    v = change_gauge(u, "v")
    w = change_gauge(u, "w")
    assert w.eval(0.4) == pytest.approx(abs(v.eval(0.4)) ** 2, rel=1e-12)


def test_gauge_errors():
    u = make_family(FamilyParams("bump"), 3)
    with pytest.raises(GaugeError):
        change_gauge(u, "nope")
    with pytest.raises(GaugeError):
        change_gauge(u, "zeta")  # the field does not vanish near 0
    with pytest.raises(GaugeError):
        relabel(u, "x")
    w = change_gauge(u, "w")
    with pytest.raises(GaugeError):
        change_gauge(w, "v")
    ft = make_family(FamilyParams("ft_admissible"), 3)
    z = change_gauge(relabel(ft, "w"), "zeta")
    assert change_gauge(z, "w").eval(0.5) == pytest.approx(ft.eval(0.5), rel=1e-12)


def test_spherical_mean_and_projection():
    u = make_family(FamilyParams("harmonic_mix"), 2)
    mean = spherical_mean(u)
    r = np.array([0.2, 0.5, 0.8])
    tau = -np.log(r)
    assert np.allclose(mean.value(tau), PolyBump(0.9, 3).value(tau), rtol=1e-12)
    # (1, cos) mode carries amplitude 0.6 times r * bump
    coef = project_mode(u, 1, 0, 0.5)
    assert coef == pytest.approx(0.6 * 0.5 * PolyBump(0.9, 3).value(-math.log(0.5)), rel=1e-10)
    rest = without_mean(u)
    assert abs(project_mode(rest, 0, 0, 0.5)) < 1e-12
    m = mean_field(change_gauge(u, "w"))
    assert m.is_radial and m.gauge == "w"


def test_scaled_field():
    u = make_family(FamilyParams("bump"), 2)
    assert u.scaled(3.0).eval(0.3) == pytest.approx(3.0 * u.eval(0.3))
    w = change_gauge(u, "w")
    assert w.scaled(4.0).eval(0.3) == pytest.approx(4.0 * w.eval(0.3), rel=1e-12)


def test_nonradial_needs_angles_and_low_dims():
    u = make_family(FamilyParams("harmonic_mix"), 2)
    with pytest.raises(DomainError):
        u.eval(0.5)
    with pytest.raises(UnsupportedDimensionError):
        TestFunction(4, (Mode(1, 0, PolyBump()),))
    assert radial_field(PolyBump(), 5).is_radial
