import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from plbarrier.aux_functions import AuxFn, AuxFnParams, aux_bounds_check, make_aux_params, remark_forms_check
from plbarrier.errors import ContractViolation


def test_case_selection():
    a = make_aux_params(1.0, 0.0, 0.05)
    assert (a.case, a.beta, a.beta_bar) == ("A", 2.0, pytest.approx(1.95))
    assert a.p == pytest.approx(0.025)
    b = make_aux_params(2.0, 3.0)
    assert (b.case, b.beta, b.beta_bar, b.p) == ("B", 1.5, 1.5, 0.0)
    c = make_aux_params(2.0, 6.0)
    assert c.case == "C" and c.beta_bar == pytest.approx(1.2) and c.p == pytest.approx(0.2)


def test_epsilon_range():
    with pytest.raises(ContractViolation):
        make_aux_params(1.0, 0.0, 0.2)
    with pytest.raises(ContractViolation):
        make_aux_params(1.0, 0.4, 0.06)
    with pytest.raises(ContractViolation):
        AuxFnParams(1.0, 1.0)


def test_closed_form_value():
    fn = AuxFn(AuxFnParams(2.0, 1.0))
    assert float(fn.value(1.0)) == pytest.approx(2 - 2 * math.log(2), abs=1e-9)
    r = np.array([0.3, 2.0, 7.5])
    assert np.allclose(fn.value(r), 2 * r - 2 * np.log1p(r), rtol=1e-9)


def test_case_B_is_pure_power():
    fn = AuxFn(make_aux_params(2.0, 3.0))
    r = np.logspace(-3, 3, 13)
    assert np.allclose(fn.value(r), r**1.5, rtol=1e-14)
    assert np.allclose(fn.ratio_rv2_v1(r), 0.5, rtol=1e-12)


def test_origin_values():
    fn = AuxFn(AuxFnParams(2.5, 1.3))
    assert float(fn.value(0.0)) == 0.0 and float(fn.d1(0.0)) == 0.0


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 10.0])
def test_identity_x(r):
    fn = AuxFn(AuxFnParams(2.0, 1.5))
    rhs = (2 - 1) / (2 * r**2) + (1.5 - 1) / (2 * r**1.5)
    assert abs(float(fn.ratio_v2_v1sq(r)) - rhs) <= 1e-12 * max(1.0, rhs)


def test_case_C_ratio_bounds():
    fn = AuxFn(make_aux_params(2.0, 6.0))
    ratio = fn.ratio_rv2_v1(np.logspace(-3, 3, 64))
    assert np.all(ratio >= 1 / 6 - 1e-12) and np.all(ratio <= 0.5 + 1e-12)


@pytest.mark.parametrize("r", [2.0, 4.0, 8.0, 16.0])
def test_increment_bounds(r):
    fn = AuxFn(AuxFnParams(2.0, 1.95))
    cp, R = fn.params.c_p, 2.0
    lo = cp * (r**1.95 - R**1.95)
    inc = float(fn.increment(r, R))
    assert lo - 1e-12 <= inc <= 2 * lo + 1e-12


def test_increment_matches_quadrature():
    from scipy.integrate import quad

    fn = AuxFn(AuxFnParams(2.0, 1.95))
    ref = quad(lambda s: float(fn.d1(s)), 2.0, 9.0, epsabs=0, epsrel=1e-12)[0]
    assert float(fn.increment(9.0, 2.0)) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("k,sigma,eps", [(1.0, 0.0, 0.05), (2.0, 3.0, None), (2.0, 6.0, None)])
def test_canonical_cases_pass(k, sigma, eps):
    fn = AuxFn(make_aux_params(k, sigma, eps))
    rep = aux_bounds_check(fn)
    assert rep.passed, rep.to_dict()


def test_case_displays_report():
    fn = AuxFn(make_aux_params(1.0, 0.0, 0.05))
    rep = remark_forms_check(fn, 0.0)
    assert rep.items


@given(beta=st.floats(1.05, 4.0), frac=st.floats(0.0, 1.0))
def test_bounds_hold_for_random_exponents(beta, frac):
    beta_bar = 1.0 + frac * (beta - 1.0)
    rep = aux_bounds_check(AuxFn(AuxFnParams(beta, beta_bar)))
    assert rep.passed, rep.to_dict()


@given(beta=st.floats(1.05, 4.0), frac=st.floats(0.0, 1.0), r=st.floats(1e-2, 1e2))
def test_profile_is_increasing_and_convex_in_power(beta, frac, r):
    fn = AuxFn(AuxFnParams(beta, 1.0 + frac * (beta - 1.0)))
    assert float(fn.d1(r)) > 0
    assert float(fn.value(r)) > 0
    assert float(fn.value(1.01 * r)) > float(fn.value(r))
