import numpy as np
import pytest
from hypothesis import given, strategies as st

from plbarrier.aux_functions import AuxFn, AuxFnParams, make_aux_params
from plbarrier.barriers_sub import CompactProfile
from plbarrier.errors import ContractViolation
from plbarrier.operators import laplacian, make_operator
from plbarrier.problem import ChiProfile, ZProfile
from plbarrier.radial_calculus import (Kappa, RadialProfile, profile_values, radial_hessian,
                                       residual_at, residual_field)

P3 = make_operator("p_laplacian", n=2, p=3)
Z1, CHI0 = ZProfile.constant(1.0), ChiProfile.constant(0.0)
OPERATORS = [laplacian(2), P3, make_operator("p_laplacian", n=3, p=4),
             make_operator("pseudo_p_laplacian", n=2, p=4), make_operator("infinity_laplacian", n=2),
             make_operator("pucci_min", n=3), make_operator("pucci_max", n=2)]


def _caseB_profile():
    return RadialProfile(0.0, 0.0, 0.5, AuxFn(make_aux_params(2.0, 3.0)), Kappa(1.0, 1.0), 1)


@pytest.mark.parametrize("mode", ["small_r", "large_r", "factored_b"])
def test_cross_mode_caseB(mode):
    prof = _caseB_profile()
    d = residual_at(P3, Z1, CHI0, 0.0, prof, 0.7, 0.3).value
    f = residual_at(P3, Z1, CHI0, 0.0, prof, 0.7, 0.3, mode=mode).value
    assert abs(d - f) <= 1e-10 * (1 + abs(d))


def test_negative_slope_lines_agree():
    prof = RadialProfile(0.0, 0.2, 1.0, CompactProfile(6.0, 2.0, 3.0), Kappa(1.0, 0.0), -1)
    r = 0.5 * 3.0
    vals = [residual_at(P3, Z1, ChiProfile.constant(0.3), 0.5, prof, r, 0.4, mode=m).value
            for m in ("direct", "negative_slope", "negative_slope_large")]
    assert max(vals) - min(vals) <= 1e-10 * (1 + abs(vals[0]))


@pytest.mark.parametrize("desc", OPERATORS, ids=lambda d: f"{d.name}{d.dim}")
def test_r0_limit_nonnegative_H(desc):
    for kappa in (Kappa(1.0, 1.0), Kappa(1.0, 0.0)):
        aux = AuxFn(make_aux_params(desc.homogeneity.k, 0.0, 0.05 if desc.homogeneity.is_k_one else None))
        prof = RadialProfile(0.0, 0.0, 0.3, aux, kappa, 1)
        res = residual_at(desc, Z1, CHI0, 0.0, prof, 0.0, 0.5, mode="r0_limit")
        assert res.parts["H"] >= 0


def test_mode_contracts():
    prof = _caseB_profile()
    with pytest.raises(ContractViolation):
        residual_at(P3, Z1, CHI0, 0.0, prof, 0.0, 0.1)
    with pytest.raises(ContractViolation):
        residual_at(P3, Z1, CHI0, 0.0, prof, 0.5, 0.1, mode="r0_limit")
    with pytest.raises(ContractViolation):
        residual_at(P3, Z1, CHI0, 0.0, prof, 0.5, 0.1, mode="negative_slope")
    with pytest.raises(ContractViolation):
        residual_field(P3, Z1, CHI0, 0.0, prof, [0.5], [0.1], mode="r0_limit")


def test_radial_hessian_matches_fd():
    # Hessian of w = |x|^3 in R^3 at a point off the axes
    x = np.array([0.3, -0.4, 0.5])
    r = np.linalg.norm(x)
    H = radial_hessian(3, r, 3 * r**2, 6 * r, x / r)
    exact = 3 * (r * np.eye(3) + np.outer(x, x) / r)
    assert np.allclose(H, exact, rtol=1e-13)


@pytest.mark.parametrize("desc", OPERATORS, ids=lambda d: f"{d.name}{d.dim}")
def test_field_matches_pointwise(desc):
    k = desc.homogeneity.k
    aux = AuxFn(make_aux_params(k, 0.5, 0.05 if desc.homogeneity.is_k_one else None))
    prof = RadialProfile(0.1, 0.3, 0.2, aux, Kappa(1.0, 1.0), 1)
    r, t = np.array([0.0, 0.05, 1.0, 30.0]), np.array([0.0, 0.7])
    Z, chi = ZProfile("linear", z0=1.0, slope=-0.2, ell_floor=0.4), ChiProfile.linear(0.3, -0.3)
    for mode in ("direct", "large_r"):
        F = residual_field(desc, Z, chi, 0.5, prof, r, t, mode=mode)
        for i, ri in enumerate(r):
            for j, tj in enumerate(t):
                m = "r0_limit" if ri == 0 else mode
                ref = residual_at(desc, Z, chi, 0.5, prof, ri, tj, mode=m).value
                assert F[i, j] == pytest.approx(ref, rel=1e-12, abs=1e-12)


@given(r=st.floats(1e-3, 1e3), t=st.floats(0.0, 1.0), beta=st.floats(1.1, 3.0), frac=st.floats(0, 1),
       b=st.floats(0.01, 1.0), idx=st.integers(0, len(OPERATORS) - 1))
def test_factored_modes_agree_with_direct(r, t, beta, frac, b, idx):
    desc = OPERATORS[idx]
    aux = AuxFn(AuxFnParams(beta, 1.0 + frac * (beta - 1.0)))
    prof = RadialProfile(0.0, 0.1, b, aux, Kappa(1.0, 1.0), 1)
    Z = ZProfile("linear", z0=1.0, slope=-0.1, ell_floor=0.5)
    d = residual_at(desc, Z, ChiProfile.constant(0.2), 1.0, prof, r, t).value
    for mode in ("small_r", "large_r", "factored_b"):
        f = residual_at(desc, Z, ChiProfile.constant(0.2), 1.0, prof, r, t, mode=mode).value
        assert abs(f - d) <= 1e-9 * (1 + abs(d))


def test_profile_values_shapes():
    prof = _caseB_profile()
    w, wr, wrr, wt = profile_values(prof, np.array([1.0, 4.0]), 0.5)
    assert np.allclose(w, 0.5 * 1.5 * np.array([1.0, 8.0]))
    assert np.allclose(wt, 0.5 * np.array([1.0, 8.0]))
