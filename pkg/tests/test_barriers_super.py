import numpy as np
import pytest
from hypothesis import given, strategies as st

from plbarrier.barriers_super import (a_limit_study, admissible_b, build_super, default_epsilon,
                                      super_case_tag, super_residual)
from plbarrier.errors import BParameterTooLarge
from plbarrier.operators import laplacian, make_operator
from plbarrier.problem import ChiProfile, InitialDatum, ProblemSpec, ZProfile
from plbarrier.radial_calculus import residual_field

P3 = make_operator("p_laplacian", n=2, p=3)
RAMP = ChiProfile.linear(0.3, -0.3, 1.0)


def _pb(op, sigma, chi=RAMP, **kw):
    return ProblemSpec(op, sigma=sigma, chi=chi, h=InitialDatum.bump(0.0, 1.0, 1.0), **kw)


def test_case_tags():
    assert super_case_tag(1.0, 0.0) == "I.i.a"
    assert super_case_tag(1.0, 1.5) == "I.i.b"
    assert super_case_tag(2.0, 0.0) == "I.ii.1"
    assert super_case_tag(2.0, 0.5) == "I.ii.3"
    assert super_case_tag(2.0, 2.0) == "I.ii.2"
    assert super_case_tag(2.0, 3.5) == "II"
    assert default_epsilon(0.0) == 0.05 and default_epsilon(0.2) == 0.0125


def test_laplacian_sigma0_radius():
    pb = ProblemSpec(laplacian(2), sigma=0.0, chi=ChiProfile.constant(0.3))
    w = build_super(pb, 0.01, epsilon=0.05)
    assert w.R ** 0.05 == pytest.approx(192.0, rel=1e-12)
    rep = super_residual(w, pb, r_grid=np.linspace(0, 10 * w.R, 400))
    assert rep.extreme <= 1e-9 and rep.passed


def test_k_gt_one_sigma0_uses_unit_radius():
    pb = _pb(P3, 0.0)
    env = pb.envelopes()
    E = pb.gamma_star * (1 + pb.T)
    adm = admissible_b(pb)
    assert adm["bound"] == pytest.approx(min(1.0, (E**pb.gamma * env.M_bar) ** (-1.0 / (pb.k - 1))))
    assert build_super(pb, 0.5 * adm["bound"]).R == 1.0


def test_k_one_above_gamma():
    pb = _pb(laplacian(2), 4.0)
    env = pb.envelopes()
    E, cp = 2.0 * (1 + pb.T), 1.0 / (2 * (1 - (4 - 2) / (2 * 3)))
    adm = admissible_b(pb)
    assert adm["bound"] == pytest.approx(min(1.0, (cp / (4 * 0.3 * E**4)) ** (1 / 3)))
    w = build_super(pb, 0.5 * adm["bound"])
    assert w.R == pytest.approx(max(1.0, (4 * E**2 * env.M_bar / cp) ** (3 / 2)))


def test_b_too_large():
    pb = _pb(P3, 0.0)
    with pytest.raises(BParameterTooLarge):
        build_super(pb, 0.999)


@pytest.mark.parametrize("op,sigma", [(laplacian(2), 0.0), (laplacian(2), 1.0), (P3, 0.0),
                                      (P3, 0.5), (P3, 2.0), (P3, 4.0), (laplacian(2), 3.0)])
def test_residual_nonpositive(op, sigma):
    pb = _pb(op, sigma)
    b = min(0.01, 0.5 * admissible_b(pb)["bound"])
    w = build_super(pb, b, m=pb.nu)
    rep = super_residual(w, pb)
    assert rep.passed, rep.to_dict()
    far = super_residual(w, pb, r_grid=np.array([1e3 * w.R]))
    assert far.extreme < 0


def test_barrier_above_initial_datum():
    pb = _pb(P3, 0.5)
    w = build_super(pb, 0.5 * admissible_b(pb)["bound"], m=pb.nu)
    r = np.linspace(0, 50, 200)
    assert np.all(w(r, np.array([0.0]))[:, 0] >= pb.h(r))


def test_a_limit_above_gamma_k_gt_one():
    st_ = a_limit_study(_pb(P3, 4.0), b_sequence=(1e-2, 1e-3, 1e-4, 1e-5))
    a = [row[1] for row in st_.rows]
    assert all(x > y for x, y in zip(a, a[1:]))


def test_a_limit_sigma0_k_gt_one_tends_to_alpha():
    st_ = a_limit_study(_pb(P3, 0.0))
    assert st_.target == pytest.approx(0.3)
    assert st_.passed, st_.to_dict()


@given(b=st.floats(1e-4, 0.5), sigma=st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0, 4.5]),
       r=st.floats(0.0, 500.0), t=st.floats(0.0, 1.0))
def test_residual_nonpositive_anywhere(b, sigma, r, t):
    pb = _pb(P3, sigma, Z=ZProfile("linear", z0=1.0, slope=-0.1, ell_floor=0.5))
    bound = admissible_b(pb)["bound"]
    b = min(b, 0.99 * bound)
    w = build_super(pb, b)
    res = residual_field(pb.operator, pb.Z, pb.chi, sigma, w.profile(), np.array([r * w.R]),
                         np.array([t]))
    assert res[0, 0] <= 1e-9 * max(1.0, w.a)
