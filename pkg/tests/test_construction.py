import math

import numpy as np
import pytest

from polareuler import construction as cn
from polareuler.field import lp_norm, mode_symmetry_leakage, support_annulus
from polareuler.grid import RadialGrid


def test_bump_profile_support_and_smoothness():
    p = cn.BumpProfile(1.0, 2.0)
    r = np.linspace(0.0, 3.0, 301)
    v = p(r)
    assert np.all(v[(r <= 1.0) | (r >= 2.0)] == 0.0)
    assert v[(r > 1.2) & (r < 1.8)].min() > 0.0
    # derivative consistent with finite differences
    rr = np.linspace(1.05, 1.95, 200)
    fd = (p(rr + 1e-6) - p(rr - 1e-6)) / 2e-6
    assert np.max(np.abs(fd - p.deriv(rr))) < 1e-5


def test_build_g_meets_h1_budget():
    prof, rep = cn.build_g()
    assert rep["valid"]
    assert rep["h1"] <= cn.H1_BUDGET * (1 + 1e-12)
    assert 0.8 * cn.H1_BUDGET < rep["h1"]          # budget actually used


def test_build_f_report():
    prof, rep = cn.build_f()
    assert rep["valid"]
    assert rep["zero_mean_residual"] < 1e-10
    assert rep["h1"] <= cn.H1_BUDGET * (1 + 1e-12)
    assert rep["sign_definite"]
    assert rep["strict_support"]
    assert math.isfinite(rep["M"]) and rep["M"] > 0


def test_composite_profile_zero_mean_analytic():
    prof, _ = cn.build_f()
    # int f(r) dr = 0 exactly by the two-scale cancellation
    assert abs(cn.radial_mean(prof)) < 1e-12 * cn._panel_quad(
        prof, lambda r: np.abs(prof(r))
    )


def test_scaling_law_roundtrip():
    rep = cn.scaling_law(beta=0.5, delta=0.05, lam=4.0)
    assert rep["N"] == 18
    # N_exact = lam^{(2-2beta+delta)/beta}
    assert abs(rep["N_exact"] - 4.0 ** (1.05 / 0.5)) < 1e-10
    assert abs(rep["residual"]) <= 0.5 + 1e-12


def test_scaling_law_monotone_in_lam():
    Ns = [cn.scaling_law(0.5, 0.05, lam)["N"] for lam in (2.0, 4.0, 8.0)]
    assert Ns[0] < Ns[1] < Ns[2]


def test_scaling_law_overflow_guard():
    with pytest.raises(cn.ConstructionError):
        cn.scaling_law(beta=0.1, delta=0.05, lam=1e6)


def test_params_derive_N():
    p = cn.ConstructionParams()
    assert p.N == 18
    q = cn.ConstructionParams(N=24)
    assert q.N == 24


def test_assemble_initial_structure():
    p = cn.ConstructionParams()
    fld = cn.assemble_initial(p)
    assert fld.symmetry_N == p.N
    assert mode_symmetry_leakage(fld, p.N) == 0.0
    # amplitudes follow lam^{1-beta} and lam^{1-beta} N^{-beta} / 2
    f_peak = np.abs(p.f_profile(p.lam * fld.grid.nodes)).max()
    assert abs(np.abs(fld.coeffs[0]).max() - p.rad_amplitude * f_peak) < 1e-12
    g_peak = p.g_profile(p.lam * fld.grid.nodes).max()
    assert abs(np.abs(fld.coeffs[p.N]).max() - 0.5 * p.osc_amplitude * g_peak) < 1e-12
    # all other modes empty
    for k in range(1, fld.k_max + 1):
        if k != p.N:
            assert np.abs(fld.coeffs[k]).max() == 0.0


def test_initial_parts_sum_to_whole():
    p = cn.ConstructionParams()
    whole = cn.assemble_initial(p)
    rad, osc = cn.initial_parts(p)
    diff = whole - (rad + osc)
    assert np.abs(diff.coeffs).max() < 1e-14 * np.abs(whole.coeffs).max()
    assert np.abs(rad.coeffs[1:]).max() == 0.0


def test_osc_support_window():
    p = cn.ConstructionParams()
    _, osc = cn.initial_parts(p)
    lo, hi = support_annulus(osc, 1e-12 * np.abs(osc.coeffs).max())
    assert lo > 1.0 / (4.0 * p.lam)
    assert hi < 6.0 / p.lam


def test_resolution_guard():
    p = cn.ConstructionParams()
    coarse = RadialGrid.log_uniform(1e-3, 50.0, 40)
    with pytest.raises(cn.ResolutionError):
        cn.assemble_initial(p, grid=coarse)


def test_gluing_plan_floors():
    base = cn.ConstructionParams()
    plan = cn.assemble_gluing(base, J=3, v_max=1.0)
    for j, d in enumerate(plan.D, start=1):
        assert d >= cn.separation_floor(j, 1.0) - 1e-12
    # centers spaced by consecutive D sums
    for j in range(1, 3):
        assert abs(plan.R[j] - plan.R[j - 1] - plan.D[j - 1] - plan.D[j]) < 1e-9
    dists = cn.plan_support_distances(plan)
    assert all(d > 0 for d in dists.values())
    # amplitudes halve, dilations double
    assert [p.amplitude for p in plan.pieces] == [0.5, 0.25, 0.125]
    assert [p.time_dilation for p in plan.pieces] == [2.0, 4.0, 8.0]


def test_gluing_rejects_bad_J():
    with pytest.raises(cn.ConstructionError):
        cn.assemble_gluing(cn.ConstructionParams(), J=0, v_max=1.0)
