import numpy as np
import pytest
from hypothesis import given, strategies as st

from plbarrier.barriers_sub import build_sub_compact
from plbarrier.barriers_super import build_super
from plbarrier.errors import CFLViolation, ContractViolation, HypothesisFailure, PreconditionFailure
from plbarrier.operators import laplacian, make_operator
from plbarrier.problem import ChiProfile, InitialDatum, ProblemSpec, ZProfile
from plbarrier.transform import exp_transform, solve_phi
from plbarrier.verification import (GridField, GrowthHypothesis, cole_hopf_check,
                                    comparison_check, doubly_nonlinear_check, fd_solve,
                                    principle_check, read_binary, sample_barrier,
                                    select_principles, stable_dt)

P3 = make_operator("p_laplacian", n=2, p=3)
BUMP = InitialDatum.bump(0.0, 1.0, 1.0)


def _heat(h, chi=0.0, sigma=0.0, op=None, T=0.2):
    return ProblemSpec(op or laplacian(2), sigma=sigma, T=T, Z=ZProfile.constant(1.0),
                       chi=ChiProfile.constant(chi), h=h)


def test_constant_datum_is_stationary():
    fld = fd_solve(_heat(InitialDatum.constant(0.7)), 5.0, 41)
    assert np.max(np.abs(fld.values - 0.7)) <= 1e-12


def test_cole_hopf():
    res = cole_hopf_check()
    assert res["sup_error"] <= 1e-3


def test_radial_vs_box():
    pb = _heat(BUMP, chi=0.3, sigma=1.0, T=0.1)
    rad = fd_solve(pb, 6.0, 61)
    box = fd_solve(pb, 6.0, 121, kind="box_2d", n_save=2)
    x = box.axes[0]
    mid = x.size // 2
    on_axis = box.values[-1, mid:, mid]
    ref = np.interp(x[mid:], rad.axes[0], rad.values[-1])
    assert np.max(np.abs(on_axis - ref)) <= 1e-2


def test_grad_reg_and_cfl_contracts():
    pb = _heat(BUMP)
    with pytest.raises(ContractViolation):
        fd_solve(pb, 5.0, 41, grad_reg=1e-2)
    with pytest.raises(CFLViolation):
        fd_solve(pb, 5.0, 41, dt=10 * stable_dt(pb, 5.0, 41, grad_reg=1e-6))


def test_saved_times_uniform():
    fld = fd_solve(_heat(BUMP), 5.0, 41, n_save=11)
    assert np.allclose(np.diff(fld.t), fld.t[1] - fld.t[0], rtol=1e-12)
    assert fld.t[-1] == pytest.approx(0.2)


def test_binary_and_csv_round_trip(tmp_path):
    fld = fd_solve(_heat(BUMP), 5.0, 21, n_save=5)
    fld.to_binary(tmp_path / "f.bin")
    back = read_binary(tmp_path / "f.bin")
    assert back.same_grid(fld) and np.array_equal(back.values, fld.values)
    fld.to_csv(tmp_path / "f.csv")
    rows = (tmp_path / "f.csv").read_text().splitlines()
    assert rows[0] == "r,t,value" and len(rows) == 1 + fld.values.size


@given(nt=st.integers(2, 6), nx=st.integers(2, 6), ny=st.integers(2, 6), seed=st.integers(0, 999),
       kind=st.sampled_from(["radial_1d", "box_2d"]))
def test_binary_round_trip_property(tmp_path_factory, nt, nx, ny, seed, kind):
    rng = np.random.default_rng(seed)
    t = 0.25 * np.arange(nt)
    axes = (np.linspace(0, 1, nx),) if kind == "radial_1d" else (np.linspace(-1, 1, nx),
                                                                  np.linspace(-2, 2, ny))
    shape = (nt,) + tuple(a.size for a in axes)
    fld = GridField(kind, axes, t, rng.standard_normal(shape), np.zeros(shape, bool))
    path = tmp_path_factory.mktemp("bin") / "x.bin"
    fld.to_binary(path)
    back = read_binary(path)
    assert np.array_equal(back.values, fld.values)
    for a, b in zip(back.axes, fld.axes):
        assert np.allclose(a, b, rtol=0, atol=1e-14)


@given(shift=st.floats(0.01, 2.0), sigma=st.sampled_from([0.0, 1.0, 2.0]),
       chi=st.floats(-0.5, 0.5))
def test_scheme_is_monotone(shift, sigma, chi):
    lo = _heat(BUMP, chi=chi, sigma=sigma, op=P3, T=0.05)
    hi = lo.with_(h=InitialDatum.bump(shift, 1.0, 1.0))
    a = fd_solve(lo, 4.0, 41, n_save=3)
    b = fd_solve(hi, 4.0, 41, n_save=3)
    assert np.all(a.values <= b.values + 1e-12)
    # constant shifts commute with the flow when Z is constant
    assert np.max(np.abs(b.values - a.values - shift)) <= 1e-9


def test_max_linear_principle():
    pb = ProblemSpec(laplacian(2), sigma=0.0, T=0.5, chi=ChiProfile.constant(0.3), h=BUMP)
    fld = fd_solve(pb, 10.0, 101)
    assert select_principles(pb)[0] == "max_linear"
    rep = principle_check(fld, pb, "max_linear")
    assert rep.passed and rep.min_margin >= 0


def test_min_flat_principles():
    pb = ProblemSpec(P3, sigma=1.0, T=0.3, chi=ChiProfile.constant(0.3), h=BUMP)
    assert select_principles(pb)[1] == "min_flat"
    assert principle_check(fd_solve(pb, 8.0, 81), pb, "min_flat").passed
    pc = ProblemSpec(P3, sigma=3.0, T=0.3, chi=ChiProfile.constant(-0.5), h=BUMP)
    assert select_principles(pc)[1] == "min_flat"
    assert principle_check(fd_solve(pc, 8.0, 81), pc, "min_flat").passed


def test_growth_hypothesis_failure():
    pb = ProblemSpec(laplacian(2), sigma=0.0, T=0.1, h=BUMP)
    fld = fd_solve(pb, 5.0, 41)
    with pytest.raises(HypothesisFailure):
        principle_check(fld, pb, "max_linear", GrowthHypothesis(0.5, eta=1e-6))


def test_comparison_contract():
    pb = ProblemSpec(P3, sigma=0.5, chi=ChiProfile.linear(0.3, -0.3), h=BUMP)
    sub = build_sub_compact(pb)
    sup = build_super(pb, 1e-3, m=pb.nu)
    r = np.linspace(0, 0.99 * sub.R, 60)
    t = np.linspace(0, 1, 11)
    fs, fS = sample_barrier(sub, r, t), sample_barrier(sup, r, t)
    assert comparison_check(fs, fS)
    assert comparison_check(fs, fs)
    bad = GridField(fs.kind, fs.axes, fs.t, fs.values.copy(), fs.boundary)
    bad.values[0, 3] = fS.values[0, 3] + 1.0
    with pytest.raises(PreconditionFailure):
        comparison_check(bad, fS)


def test_doubly_nonlinear():
    g = InitialDatum.bump(1.0, 1.0, 1.0)
    rep1 = doubly_nonlinear_check(laplacian(2), g, exp_transform(), T=0.2, nr=101)
    assert rep1.passed and rep1.round_trip_error <= 1e-8
    tr = solve_phi(lambda s: s, 2.0, tau_range=(-1.0, 1.5))
    rep2 = doubly_nonlinear_check(P3, g, tr, T=0.2, nr=101)
    assert rep2.passed and rep2.round_trip_error <= 1e-8
    with pytest.raises(HypothesisFailure):
        doubly_nonlinear_check(P3, g, solve_phi(lambda s: s**2, 2.0, tau_range=(-0.5, 0.5)))
