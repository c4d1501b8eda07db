import numpy as np
import pytest

from plbarrier.errors import ContractViolation
from plbarrier.operators import laplacian, make_operator
from plbarrier.transform import chain_rule_check, concavity_check, exp_transform, solve_phi


def test_linear_f_gives_exponential():
    tr = solve_phi(lambda s: s, 2.0)
    tau = np.linspace(-2, 2, 41)
    assert np.max(np.abs(tr.phi(tau) / np.exp(tau) - 1)) <= 1e-8
    assert np.allclose(tr.Z(tau), 1.0, atol=1e-8)


def test_k_one_exact_exponential():
    tr = exp_transform()
    tau = np.linspace(-3, 3, 13)
    assert np.array_equal(tr.phi(tau), np.exp(tau))
    assert np.all(tr.Z(tau) == 1.0)
    with pytest.raises(ContractViolation):
        solve_phi(lambda s: 1.0 + 0 * s, 1.0)


def test_constant_f_rejected_for_k_gt_one():
    with pytest.raises(ContractViolation):
        solve_phi(lambda s: 2.0 + 0 * s, 2.0, tau_range=(-0.2, 0.2))


def test_sqrt_f_Z_decays():
    tr = solve_phi(np.sqrt, 2.0, tau_range=(-1.0, 3.0), step=1e-3)
    tau = np.linspace(-0.9, 2.9, 39)
    ph = tr.phi(tau)
    z = tr.Z(tau)
    assert np.allclose(z, 0.5 / np.sqrt(ph), rtol=1e-6)
    assert np.all(np.diff(z) < 0)


def test_round_trip():
    tr = solve_phi(lambda s: s, 2.0)
    tau = np.linspace(-1.9, 1.9, 25)
    assert np.max(np.abs(tr.phi_inv(tr.phi(tau)) - tau)) <= 1e-8


@pytest.mark.parametrize("f,ok,lo,hi", [(lambda s: s, True, 1.0, 1.0),
                                        (lambda s: s**2, False, None, None),
                                        (lambda s: 1.0 + s, True, 1.0, 1.0)])
def test_concavity(f, ok, lo, hi):
    rep = concavity_check(f, None, 2.0, np.linspace(0.1, 5.0, 50))
    assert rep["pass"] is ok
    if ok:
        assert rep["inf_slope"] == pytest.approx(lo, rel=1e-6)
        assert rep["sup_slope"] == pytest.approx(hi, rel=1e-6)


@pytest.mark.parametrize("desc,tr", [(laplacian(2), exp_transform()),
                                     (make_operator("p_laplacian", n=2, p=3),
                                      solve_phi(lambda s: s, 2.0))])
def test_chain_rule(desc, tr):
    r = np.array([0.4, 1.0, 2.5])
    v = np.array([0.1, -0.3, 0.8])
    lhs, rhs = chain_rule_check(desc, tr, r, v, 0.7 * r, -0.2 + 0 * r, 0.5 + 0 * r)
    assert np.allclose(lhs, rhs, rtol=1e-7, atol=1e-9)
