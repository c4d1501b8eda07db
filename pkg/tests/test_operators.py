import numpy as np
import pytest
from hypothesis import given, strategies as st

from plbarrier.errors import ConditionCFailure, ContractViolation
from plbarrier.operators import (OPERATOR_NAMES, check_structure_conditions, eval_operator,
                                 laplacian, make_operator, spectral_envelopes)

BUILTINS = [("p_laplacian", {"p": 2}), ("p_laplacian", {"p": 3}), ("pseudo_p_laplacian", {"p": 4}),
            ("infinity_laplacian", {}), ("pucci_min", {}), ("pucci_max", {}),
            ("quasilinear_remark320", {}), ("det", {})]


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


def test_laplacian_of_identity_is_trace():
    assert eval_operator(laplacian(2), np.array([1.0, 0.0]), np.eye(2)) == pytest.approx(2.0)


def test_infinity_laplacian_quadratic_form():
    H = make_operator("infinity_laplacian", n=2)
    assert eval_operator(H, np.array([1.0, 0.0]), np.diag([3.0, 5.0])) == pytest.approx(3.0)


@pytest.mark.parametrize("name,params", BUILTINS)
def test_zero_hessian_gives_zero(name, params, rng):
    H = make_operator(name, n=3, **params)
    q = rng.standard_normal((20, 3))
    assert np.all(eval_operator(H, q, np.zeros((20, 3, 3))) == 0)


def test_unknown_operator_and_bad_params():
    with pytest.raises(ContractViolation):
        make_operator("biharmonic")
    with pytest.raises(ContractViolation):
        make_operator("p_laplacian", p=1.5)
    with pytest.raises(ContractViolation):
        make_operator("infinity_laplacian", p=3)
    assert "det" in OPERATOR_NAMES


def test_laplacian_alias():
    assert make_operator("laplacian", n=3).to_dict() == laplacian(3).to_dict()


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
def test_p_laplacian_script_H(p):
    env = spectral_envelopes(make_operator("p_laplacian", n=2, p=p))
    assert env.script_H == pytest.approx(p - 1.0, rel=1e-12)
    assert env.K0 > 0 and env.lambda0 > 1


def test_laplacian_M_bar():
    env = spectral_envelopes(laplacian(2), L=1.0, T=1.0)
    assert env.M_bar == pytest.approx(6.0)


def test_quasilinear_fails_condition_C():
    H = make_operator("quasilinear_remark320", n=3)
    with pytest.raises(ConditionCFailure):
        spectral_envelopes(H)
    rep = check_structure_conditions(H, 500, seed=0)
    assert not rep.passes_C and rep.passes_A
    assert abs(rep.script_H) <= 1e-8
    for v in rep.Lambda_max_samples.values():
        assert v == pytest.approx(2.0, abs=1e-8)


def test_det_envelope():
    from plbarrier.operators import envelope_extremum

    H = make_operator("det", n=2)
    for lam in (1.0, 10.0):
        assert envelope_extremum(H, 1.0, lam, "max", budget=512) == pytest.approx(1 + lam)


def test_structure_conditions_p3():
    rep = check_structure_conditions(make_operator("p_laplacian", n=2, p=3), 2000, seed=1)
    assert rep.passes
    assert rep.k1_estimate == pytest.approx(1.0, abs=1e-8)


def test_pucci_min_k1_zero():
    rep = check_structure_conditions(make_operator("pucci_min", n=2), 1000, seed=2)
    assert rep.passes and rep.k1_estimate == pytest.approx(0.0, abs=1e-8)


@given(p=st.floats(2.0, 5.0), theta=st.floats(0.1, 10.0), seed=st.integers(0, 2**16))
def test_p_laplacian_homogeneity(p, theta, seed):
    rng = np.random.default_rng(seed)
    H = make_operator("p_laplacian", n=3, p=p)
    q, X = rng.standard_normal(3), _sym(rng, 3)
    base = eval_operator(H, q, X)
    assert eval_operator(H, theta * q, X) == pytest.approx(theta ** (p - 2) * base, rel=1e-9, abs=1e-12)
    assert eval_operator(H, q, theta * X) == pytest.approx(theta * base, rel=1e-9, abs=1e-12)


@given(seed=st.integers(0, 2**16), name=st.sampled_from(["p_laplacian", "pucci_min", "pucci_max",
                                                         "infinity_laplacian", "pseudo_p_laplacian"]))
def test_degenerate_ellipticity(seed, name):
    rng = np.random.default_rng(seed)
    H = make_operator(name, n=2)
    q, X = rng.standard_normal(2), _sym(rng, 2)
    B = rng.standard_normal((2, 2))
    P = B @ B.T
    assert eval_operator(H, q, X + P) >= eval_operator(H, q, X) - 1e-10 * (1 + abs(eval_operator(H, q, X)))
