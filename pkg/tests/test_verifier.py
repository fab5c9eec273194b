import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaincc

from ltlab import functionals as fn
from ltlab import verifier as vf
from ltlab.errors import DomainError, UnsupportedDimensionError
from ltlab.profiles import Zero
from ltlab.specialfn import structural_constants
from ltlab.testfunctions import FamilyParams, make_family, radial_field

PROBE_GRID = [0.1, 0.03, 0.01, 0.003, 0.001]


def member(kind, n, **kw):
    return make_family(FamilyParams(kind, **kw), n)


def strip_runtime(reports):
    return [dataclasses.replace(r, runtime_ms=0) for r in reports]


# single checks ----------------------------------------------------------------

def test_link_is_equality_in_two_dims():
    rep = vf.check("link", member("hardy_eps", 2, eps=0.2), 2)
    assert rep.status == "pass"
    assert abs(rep.lhs - rep.rhs) <= 1e-6 * abs(rep.rhs)


def test_ft_identity_radial_three_dims():
    rep = vf.check("ft_identity", member("ft_admissible", 3), 3)
    assert rep.status == "pass"
    assert abs(rep.lhs - rep.rhs) < 1e-6 * abs(rep.rhs)


def test_onedim_zero_profile():
    assert vf.onedim_sides(Zero()) == (0.0, 0.0)
    rep = vf.check("onedim", radial_field(Zero(), 2), 2)
    assert (rep.lhs, rep.rhs, rep.status) == (0.0, 0.0, "pass")


@pytest.mark.parametrize("n", [2, 3, 4])
def test_explicit_checks_pass_on_bump(n):
    u = member("bump", n)
    for cid in ("leray_nonneg", "link", "link2", "onedim", "key_radial", "lq_presum",
                "holder_mean", "gamma_bound"):
        rep = vf.check(cid, u, n)
        assert rep.status == "pass", rep
    if n >= 3:
        assert vf.check("hardy_n3", u, n).status == "pass"


def test_q_check_without_q_returns_worst_grid_point():
    u = member("bump", 2)
    reports = [vf.check("key_radial", u, 2, q=q) for q in vf.KEY_Q_GRID]
    worst = vf.check("key_radial", u, 2)
    assert worst.family_descriptor["q"] in vf.KEY_Q_GRID
    assert min(vf._relative_margin(r) for r in reports) == vf._relative_margin(worst)


def test_gamma_bound_matches_closed_form():
    for n in (2, 3, 4):
        for q in vf.KEY_Q_GRID:
            a = q * (1 - 1 / n)
            lhs, rhs = vf.gamma_sides(n, q)
            assert lhs == pytest.approx(rhs * gammaincc(1 + a, n), rel=1e-9)
            assert lhs <= rhs * (1 + 1e-12)


def test_judge_semantics():
    assert vf._judge("inequality", 1.0, 1.0, 0.0)[2] == "pass"
    assert vf._judge("inequality", 1.0 + 2e-8, 1.0, 0.0)[2] == "fail"
    assert vf._judge("identity", 2.0 + 1e-6, 2.0, 1e-6)[2] == "pass"
    assert vf._judge("identity", 2.0 + 1e-5, 2.0, 1e-6)[2] == "fail"
    assert vf._judge("ratio", 1.05, 1.05, 0.0)[2] == "pass"


def test_check_argument_errors():
    with pytest.raises(DomainError):
        vf.check("link", None, 2)
    with pytest.raises(DomainError):
        vf.check("vec", None)
    with pytest.raises(DomainError):
        vf.check("no_such_check", None, 2)
    with pytest.raises(UnsupportedDimensionError):
        vf.check("link", member("bump", 2), 3)


def test_dimension_specific_checks_refuse_other_dims():
    with pytest.raises(UnsupportedDimensionError):
        vf.check("link_eq_n2", member("bump", 3), 3)
    with pytest.raises(UnsupportedDimensionError):
        vf.check("hardy_n3", member("bump", 2), 2)


@pytest.mark.parametrize("cid", vf.SCALAR_CHECKS)
def test_scalar_checks_pass(cid):
    rep = vf.check(cid, None, 3, seed=11)
    assert rep.status == "pass", rep


# suites -----------------------------------------------------------------------

def test_scalars_suite_passes():
    reports = vf.run_suite("scalars", [2, 3, 4], seed=7, threads=1)
    assert reports and {r.check_id for r in reports} == set(vf.SCALAR_CHECKS)
    assert all(r.status == "pass" for r in reports)


def test_core_suite_two_dims():
    reports = vf.run_suite("core", [2], seed=7, threads=1)
    eq = [r for r in reports if r.check_id == "link_eq_n2"]
    assert eq and all(abs(r.margin) < 1e-6 * (1 + abs(r.rhs)) for r in eq)
    assert all(r.status == "pass" for r in reports)
    assert not any(r.check_id in vf.RATIO_CHECKS for r in reports)


def test_empty_dims_give_no_reports():
    assert vf.run_suite("all", [], seed=7) == []


def test_unknown_suite():
    with pytest.raises(DomainError):
        vf.run_suite("nope", [2])


def test_suite_is_deterministic():
    a = vf.run_suite("radial", [3], seed=5, threads=1)
    b = vf.run_suite("radial", [3], seed=5, threads=2)
    assert strip_runtime(a) == strip_runtime(b)


def test_members_depend_on_seed_only():
    assert vf.suite_members(2, 7, "radial") == vf.suite_members(2, 7, "radial")
    assert vf.suite_members(2, 7, "radial") != vf.suite_members(2, 8, "radial")
    assert vf.suite_members(3, 7, "nonradial", count=20)[:10] == vf.suite_members(3, 7, "nonradial")
    assert len(vf.suite_members(4, 0, "radial_ft")) >= 10


def test_worker_count_reads_environment(monkeypatch):
    monkeypatch.setenv("LTLAB_THREADS", "3")
    assert vf.worker_count() == 3
    monkeypatch.setenv("LTLAB_THREADS", "x")
    with pytest.raises(DomainError):
        vf.worker_count()


# sharpness probe --------------------------------------------------------------

def test_probe_bounded_at_critical_exponent():
    alpha = 0.5 * structural_constants(2).moser_threshold
    rep = vf.sharpness_probe(2, 0.5, alpha, PROBE_GRID)
    assert rep.verdict == "bounded"
    assert len(rep.values) == len(PROBE_GRID) and not any(rep.overflow)


def test_probe_diverges_below_critical_exponent():
    alpha = 0.5 * structural_constants(2).moser_threshold
    rep = vf.sharpness_probe(2, 0.25, alpha, PROBE_GRID)
    assert rep.verdict == "diverging"
    assert "below 1/n" in rep.note


def test_probe_empty_grid():
    rep = vf.sharpness_probe(2, 0.5, 1.0, [])
    assert rep.verdict == "inconclusive" and rep.values == []


def test_probe_at_threshold_is_not_called_bounded():
    rep = vf.sharpness_probe(2, 0.5, structural_constants(2).moser_threshold, PROBE_GRID)
    assert rep.verdict != "bounded"
    assert "threshold" in rep.note


def test_probe_hardy_family_stays_bounded():
    rep = vf.sharpness_probe(2, 0.5, 2 * math.pi, PROBE_GRID, family="hardy_eps")
    assert rep.verdict == "bounded"


@pytest.mark.parametrize("grid", [[0.1, 0.2], [0.1, 0.1], [1.5, 0.1], [0.1, 0.0]])
def test_probe_rejects_bad_grids(grid):
    with pytest.raises(DomainError):
        vf.sharpness_probe(2, 0.5, 1.0, grid)


@settings(max_examples=8)
@given(st.floats(0.05, 0.9), st.floats(0.0, 0.5))
def test_probe_values_nonincreasing_in_beta(beta, step):
    grid = [0.3, 0.1]
    lo = vf.sharpness_probe(2, beta, 3.0, grid)
    hi = vf.sharpness_probe(2, beta + step, 3.0, grid)
    for a, b in zip(lo.values, hi.values):
        assert b <= a * (1 + 1e-9)


# growth -----------------------------------------------------------------------

def test_growth_fit_zero_family():
    assert vf.growth_fit([], [4, 8], 2) == 0.0


def test_growth_single_bump_two_dims():
    u = member("bump", 2, radius=0.5, order=3)
    ratios = vf.growth_profile([u], [4, 8, 16, 32, 64], 2, "trudinger")
    c = vf.growth_fit([u], [4, 8, 16, 32, 64], 2, "trudinger")
    assert math.isfinite(c) and c == max(ratios)
    assert (max(ratios) - min(ratios)) / max(ratios) < 0.5


def test_growth_lt_mode_hardy_family_bounded():
    u = member("hardy_eps", 2, eps=0.05)
    ratios = vf.growth_profile([u], [4, 8, 16, 32, 64, 120], 2, "leray_trudinger")
    assert all(math.isfinite(x) and x > 0 for x in ratios)
    assert ratios[-1] <= vf.RATIO_SLACK * max(ratios)


def test_growth_modes_agree_on_deep_and_tau_paths():
    u = member("bump", 3)
    deep = vf.growth_ratio(u, 8, "lt")
    scale, res = fn.weighted_lq_moment(u, 8, 1 / 3)
    norm = scale * res.value ** (1 / 8)
    tau = norm / (8 ** (2 / 3) * fn.leray_functional(u).value ** (1 / 3))
    assert deep == pytest.approx(tau, rel=1e-7)


@pytest.mark.parametrize("grid", [[2, 4], [4, 200], [8, 4]])
def test_growth_rejects_bad_grids(grid):
    with pytest.raises(DomainError):
        vf.growth_profile([member("bump", 2)], grid, 2)


# oracle cross-check -----------------------------------------------------------

def test_oracle_crosscheck_agrees_on_bump():
    u = member("bump", 3)
    res = vf.oracle_crosscheck(fn.leray_pieces(u), samples=200_000, seed=3)
    assert [r.name for r in res] == ["gradient", "hardy"]
    assert all(r.agree for r in res)


def test_oracle_crosscheck_flags_a_wrong_value():
    u = member("bump", 2)
    piece = fn.energy_piece(u, "ft_weight")
    wrong = dataclasses.replace(piece, expr=lambda s, tau: 1.1 * s.grad2_scaled)
    mc = fn.mc_shared([wrong], 200_000, 0)[0]
    quad = piece.quad().value
    assert abs(mc.value - quad) > max(3 * mc.error_estimate, 1e-3 * quad)


def test_mc_shared_matches_single_runs():
    u = member("hardy_eps", 2, eps=0.3)
    pieces = fn.leray_pieces(u)
    shared = fn.mc_shared(pieces, 50_000, 4)
    for p, s in zip(pieces, shared):
        assert p.mc(50_000, 4).value == pytest.approx(s.value, rel=1e-12)


def test_poincare_estimate_circle():
    est = vf.poincare_estimate(2)
    assert 0.999 <= est <= 1.0 + 1e-12
    assert vf.poincare_estimate(2, degree=3, samples=50, seed=1) <= 1.0 + 1e-12
    with pytest.raises(UnsupportedDimensionError):
        vf.poincare_estimate(3)
