import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from plbarrier.barriers_sub import (CompactProfile, J_p, build_sub_compact, build_sub_growth,
                                    compact_subcase, f_limit_study, f_limit_target,
                                    growth_admissible_b, sub_residual)
from plbarrier.errors import ContractViolation, WrongRegime
from plbarrier.operators import laplacian, make_operator
from plbarrier.problem import ChiProfile, InitialDatum, ProblemSpec, ZProfile

P3 = make_operator("p_laplacian", n=2, p=3)
RAMP = ChiProfile.linear(0.3, -0.3, 1.0)


def _pb(op, sigma, chi=RAMP, **kw):
    return ProblemSpec(op, sigma=sigma, chi=chi, h=InitialDatum.bump(0.0, 1.0, 1.0), **kw)


def test_J_p_values():
    w0 = 1 / math.sqrt(2)
    assert J_p(w0, 2) == pytest.approx(16 / 3)
    assert J_p(w0, 2) >= 4


@given(p=st.floats(1.0, 200.0), omega=st.floats(1 / math.sqrt(2), 0.999))
def test_J_p_lower_bound(p, omega):
    assert J_p(omega, p) >= p * p * (1 - 1e-12)


def test_E_scaling():
    pb = _pb(laplacian(2), 0.0)
    w = build_sub_compact(pb)
    assert w.E == pytest.approx(w.p * (w.p + 1) / pb.ell)
    assert w.p == int(w.p) and w.p >= 2


def test_compact_profile_derivatives():
    u = CompactProfile(6.0, 2.5, 3.0)
    r = np.array([0.3, 1.2, 2.1, 2.85])
    for ri in r:
        ref = quad(lambda s: float(u.d1(s)), 0.0, ri, epsabs=0, epsrel=1e-13)[0]
        assert float(u.value(np.array([ri]))[0]) == pytest.approx(ref, rel=1e-10)
    h = 1e-3
    fd = (-u.d1(r + 2 * h) + 8 * u.d1(r + h) - 8 * u.d1(r - h) + u.d1(r - 2 * h)) / (12 * h)
    assert np.allclose(fd, u.d2(r), rtol=1e-8)
    assert np.allclose(r * u.d2(r) / u.d1(r), u.ratio_rv2_v1(r), rtol=1e-13)
    assert np.isinf(u.value(np.array([3.0, 4.0]))).all()


def test_subcase_selection():
    assert compact_subcase(_pb(laplacian(2), 0.5)) == "a"
    assert compact_subcase(_pb(laplacian(2), 4.0, chi=ChiProfile.constant(0.3))) == "b"
    pb = _pb(P3, 3.0, chi=ChiProfile.linear(0.5, -0.5))
    assert compact_subcase(pb) == "c"
    with pytest.raises(WrongRegime):
        compact_subcase(_pb(P3, 3.0, chi=ChiProfile.linear(3.0, -3.0)))
    with pytest.raises(WrongRegime):
        compact_subcase(_pb(P3, 4.0))


def test_laplacian_sigma0_residual():
    pb = ProblemSpec(laplacian(2), sigma=0.0, chi=ChiProfile.constant(-0.3))
    w = build_sub_compact(pb, omega0=0.75)
    rep = sub_residual(w, pb)
    assert rep.extreme >= -1e-9 and rep.passed, rep.to_dict()


@pytest.mark.parametrize("R", [10.0, 100.0, 1000.0])
def test_subcase_c_fixed_p(R):
    pb = _pb(P3, 3.0, chi=ChiProfile.linear(1.0, -1.0))
    w = build_sub_compact(pb, R_override=R)
    assert w.subcase == "c"
    assert sub_residual(w, pb).passed


def test_subcase_b_F_vanishes():
    pb = _pb(P3, 0.5, chi=ChiProfile.constant(0.3))
    F = [build_sub_compact(pb, R_override=R).F for R in (10.0, 100.0, 1000.0)]
    assert F[0] > F[1] > F[2] > 0 and F[2] < 1e-6
    assert f_limit_target(pb) == 0


def test_subcase_a_radius_override():
    pb = _pb(laplacian(2), 0.0)
    w = build_sub_compact(pb)
    with pytest.raises(ContractViolation):
        build_sub_compact(pb, R_override=0.5 * w.R)
    w2 = build_sub_compact(pb, R_override=10 * w.R)
    assert w2.R == pytest.approx(10 * w.R, rel=1e-10) and w2.p > w.p


def test_F_limit_sigma0_tends_to_alpha():
    st_ = f_limit_study(_pb(laplacian(2), 0.0))
    assert st_.target == pytest.approx(0.3)
    errs = [abs(row[1] - 0.3) for row in st_.rows]
    assert errs == sorted(errs, reverse=True)


def test_F_limit_power_target():
    pb = _pb(laplacian(2), 0.5)
    H = pb.envelopes().script_H
    assert f_limit_target(pb) == pytest.approx((0.3**2 / (pb.ell * H) ** 0.5) ** (1 / 1.5))


def test_growth_tags_and_aux():
    pb = _pb(P3, 3.0, chi=ChiProfile.linear(3.0, -3.0))
    w = build_sub_growth(pb, 0.5 * growth_admissible_b(pb)["bound"])
    assert w.case_tag == "II.i2"
    r = np.logspace(-2, 2, 9)
    assert np.allclose(w.aux.value(r), r**1.5)
    pb2 = _pb(laplacian(2), 4.0)
    w2 = build_sub_growth(pb2, 0.5 * growth_admissible_b(pb2)["bound"])
    assert w2.case_tag == "II.ii" and w2.aux.params.p == pytest.approx(1 / 3)
    with pytest.raises(WrongRegime):
        build_sub_growth(_pb(P3, 1.0), 0.01)


@pytest.mark.parametrize("op,sigma,chi", [(laplacian(2), 2.0, ChiProfile.linear(5.0, -5.0)),
                                          (P3, 3.0, ChiProfile.linear(3.0, -3.0)),
                                          (P3, 4.0, RAMP), (laplacian(2), 3.0, RAMP)])
def test_growth_residual(op, sigma, chi):
    pb = _pb(op, sigma, chi=chi)
    w = build_sub_growth(pb, min(0.01, 0.5 * growth_admissible_b(pb)["bound"]))
    rep = sub_residual(w, pb)
    assert rep.passed, rep.to_dict()
    a = [build_sub_growth(pb, b).a for b in (1e-3, 1e-4, 1e-5)]
    assert a[0] > a[1] > a[2]


@given(omega0=st.floats(0.71, 0.95), sigma=st.sampled_from([0.0, 0.5, 1.0, 2.0]),
       z_slope=st.floats(-0.5, 0.0))
def test_compact_residual_nonnegative(omega0, sigma, z_slope):
    pb = _pb(P3, sigma, Z=ZProfile("linear", z0=1.0, slope=z_slope, ell_floor=0.5))
    w = build_sub_compact(pb, omega0=omega0)
    rep = sub_residual(w, pb)
    assert rep.extreme >= -1e-9 * max(1.0, w.F)


def test_barrier_below_initial_datum():
    pb = _pb(P3, 0.5)
    w = build_sub_compact(pb)
    r = np.linspace(0, 0.99 * w.R, 100)
    assert np.all(w(r, np.array([0.0]))[:, 0] <= pb.h(r))
