"""Change of variables ``u = phi(v)`` for doubly nonlinear equations.

If ``phi' = f(phi)^{1/(k-1)}`` then ``u = phi(v)`` turns

    H(Du, D^2 u) - f(u) u_t = 0

into ``H(Dv, D^2 v + Z(v) Dv Dv^T) - v_t = 0`` with ``Z = phi''/phi'``.
For ``k = 1`` only ``f == 1`` fits, and then ``phi = exp``, ``Z == 1``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import ContractViolation, SolverBreakdown, TransformDomainError
from .operators import OperatorDescriptor, eval_operator

__all__ = ["PhiTransform", "solve_phi", "exp_transform", "concavity_check", "chain_rule_check"]


def _power_rhs(f, k):
    e = 1.0 / (k - 1.0)

    def g(s):
        return np.maximum(f(s), 0.0) ** e

    return g


@dataclass(frozen=True)
class PhiTransform:
    """Tabulated increasing ``phi`` with ``phi`` and ``phi^{-1}`` as splines.

    Attributes
    ----------
    k : float
        Gradient degree; ``k = 1`` marks the exponential transform.
    tau : ndarray
        Uniform tabulation grid.
    phi_tab, dphi_tab, Z_tab : ndarray
        ``phi``, ``phi'`` and ``Z = phi''/phi'`` on the grid.
    """

    k: float
    tau: np.ndarray = field(repr=False)
    phi_tab: np.ndarray = field(repr=False)
    dphi_tab: np.ndarray = field(repr=False)
    Z_tab: np.ndarray = field(repr=False)
    f: Optional[Callable] = field(default=None, repr=False)
    fprime: Optional[Callable] = field(default=None, repr=False)
    exact_exp: bool = False

    def __post_init__(self):
        object.__setattr__(self, "_phi", CubicHermiteSpline(self.tau, self.phi_tab, self.dphi_tab))
        object.__setattr__(self, "_inv", CubicHermiteSpline(self.phi_tab, self.tau,
                                                            1.0 / self.dphi_tab))

    @property
    def tau_range(self):
        return float(self.tau[0]), float(self.tau[-1])

    def _check(self, x, lo, hi, what):
        x = np.asarray(x, dtype=float)
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        if np.any(x < lo - slack) or np.any(x > hi + slack):
            raise ContractViolation(f"{what} outside tabulated range [{lo:.6g}, {hi:.6g}]")
        return x

    def phi(self, tau):
        if self.exact_exp:
            return np.exp(np.asarray(tau, dtype=float))
        return self._phi(self._check(tau, *self.tau_range, "tau"))

    def dphi(self, tau):
        if self.exact_exp:
            return np.exp(np.asarray(tau, dtype=float))
        tau = self._check(tau, *self.tau_range, "tau")
        return _power_rhs(self.f, self.k)(self._phi(tau))

    def phi_inv(self, u):
        if self.exact_exp:
            return np.log(np.asarray(u, dtype=float))
        return self._inv(self._check(u, self.phi_tab[0], self.phi_tab[-1], "u"))

    def Z(self, tau):
        """``phi''/phi'`` at ``tau``."""
        if self.exact_exp:
            return np.ones_like(np.asarray(tau, dtype=float))
        tau = self._check(tau, *self.tau_range, "tau")
        return _Z_of_phi(self.f, self.fprime, self.k, self._phi(tau))

    def Z_bounds(self):
        """``(inf Z, sup Z)`` over the tabulated range."""
        return float(np.min(self.Z_tab)), float(np.max(self.Z_tab))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "phi", "dphi", "Z"])
            for row in zip(self.tau, self.phi_tab, self.dphi_tab, self.Z_tab):
                w.writerow([repr(float(x)) for x in row])


def _Z_from_f(f, fprime, k, s):
    e = 1.0 / (k - 1.0)
    return e * f(s) ** (e - 1.0) * fprime(s)


def _Z_of_phi(f, fprime, k, s):
    """``d/ds f(s)^{1/(k-1)}``, which equals ``phi''/phi'`` at ``s = phi``.

    Without ``fprime`` a fourth-order central difference with relative
    step ``1e-3`` is used.
    """
    s = np.asarray(s, dtype=float)
    if fprime is not None:
        return _Z_from_f(f, fprime, k, s)
    g = _power_rhs(f, k)
    h = 1e-3 * s
    return (-g(s + 2 * h) + 8 * g(s + h) - 8 * g(s - h) + g(s - 2 * h)) / (12 * h)


def exp_transform(tau_range=(-5.0, 5.0), step: float = 1e-2) -> PhiTransform:
    """``phi = exp`` (the ``k = 1``, ``f == 1`` case), evaluated exactly."""
    tau = np.arange(tau_range[0], tau_range[1] + 0.5 * step, step)
    ph = np.exp(tau)
    return PhiTransform(1.0, tau, ph, ph.copy(), np.ones_like(tau), exact_exp=True)


def solve_phi(f: Callable, k: float, tau0: float = 0.0, phi0: float = 1.0,
              tau_range=(-2.0, 2.0), step: float = 1e-3,
              fprime: Optional[Callable] = None) -> PhiTransform:
    """Integrate ``phi' = f(phi)^{1/(k-1)}`` through ``(tau0, phi0)``.

    Parameters
    ----------
    f : callable
        Positive, nondecreasing, vectorised.
    k : float
        ``k > 1``; use :func:`exp_transform` for ``k = 1``.
    tau0, phi0 : float
        Initial point, ``tau0`` inside ``tau_range``.
    tau_range : (float, float)
    step : float
        Spacing of the tabulation grid.
    fprime : callable, optional
        ``f'``; when given, ``Z`` is evaluated analytically, otherwise by
        differentiating the tabulated ``phi'``.

    Returns
    -------
    PhiTransform

    Raises
    ------
    TransformDomainError
        If ``f`` is not positive along the trajectory.
    SolverBreakdown
        If the integration fails or overflows.
    ContractViolation
        If ``k <= 1`` or ``f`` is constant along the trajectory.

    Examples
    --------
    >>> tr = solve_phi(lambda s: s, 2.0)
    >>> round(float(tr.phi(1.0)), 8)
    2.71828183
    """
    if k <= 1:
        raise ContractViolation("solve_phi needs k > 1; use exp_transform for k = 1")
    lo, hi = map(float, tau_range)
    if not lo <= tau0 <= hi:
        raise ContractViolation("tau0 must lie in tau_range")
    if not phi0 > 0 or not f(np.array(phi0)) > 0:
        raise TransformDomainError(f"need phi0 > 0 and f(phi0) > 0, got phi0={phi0}")
    g = _power_rhs(f, k)
    nlo = int(round((tau0 - lo) / step))
    nhi = int(round((hi - tau0) / step))
    tau = tau0 + step * np.arange(-nlo, nhi + 1)

    def rhs(_, y):
        return g(y)

    f0 = float(f(np.array(phi0)))

    def hits_zero(_, y):
        return float(f(np.array(max(y[0], 0.0)))) - 1e-10 * f0

    hits_zero.terminal = True

    parts = []
    for stop, grid in ((tau[0], tau[: nlo + 1][::-1]), (tau[-1], tau[nlo:])):
        if grid.size == 1:
            parts.append(np.array([phi0]))
            continue
        with np.errstate(invalid="ignore"):
            sol = solve_ivp(rhs, (tau0, stop), [phi0], method="DOP853", t_eval=grid,
                            rtol=1e-13, atol=1e-14 * phi0, events=hits_zero)
        if sol.status == 1:
            raise TransformDomainError(f"f(phi) reaches 0 at tau={sol.t_events[0][0]:.6g}; "
                                       f"shrink tau_range")
        if not sol.success or not np.all(np.isfinite(sol.y)):
            raise SolverBreakdown(f"phi integration failed: {sol.message}")
        parts.append(sol.y[0])
    ph = np.concatenate([parts[0][::-1], parts[1][1:]])
    fv = f(ph)
    if np.any(fv <= 0) or np.any(ph <= 0):
        raise TransformDomainError("f(phi) is not positive on the trajectory")
    if np.ptp(fv) <= 1e-14 * np.max(fv):
        # constant f makes phi affine and Z identically 0
        raise ContractViolation("f must be non-constant for k > 1")
    if np.any(np.diff(ph) <= 0):
        raise SolverBreakdown("tabulated phi is not strictly increasing")
    dph = g(ph)
    Z = _Z_of_phi(f, fprime, k, ph)
    return PhiTransform(float(k), tau, ph, dph, Z, f=f, fprime=fprime)


def concavity_check(f: Callable, fprime: Optional[Callable], k: float, s_grid,
                    rtol: float = 1e-10) -> dict:
    """Check that ``f^{1/(k-1)}`` is concave with slope in ``(0, inf)``.

    Returns
    -------
    dict
        ``{"pass", "concave", "inf_slope", "sup_slope"}``; ``pass`` requires
        a nonincreasing slope with ``0 < inf <= sup < inf``.
    """
    if k <= 1:
        raise ContractViolation("concavity_check needs k > 1")
    s = np.asarray(s_grid, dtype=float)
    if np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise ContractViolation("s_grid must be positive and increasing")
    slope = _Z_of_phi(f, fprime, k, s)
    scale = max(1.0, float(np.max(np.abs(slope))))
    concave = bool(np.all(np.diff(slope) <= rtol * scale))
    lo, hi = float(np.min(slope)), float(np.max(slope))
    ok = concave and lo > 0 and math.isfinite(hi)
    return {"pass": bool(ok), "concave": concave, "inf_slope": lo, "sup_slope": hi}


def chain_rule_check(desc: OperatorDescriptor, tr: PhiTransform, r, v, v_r, v_rr, v_t):
    """Compare both sides of the change of variables on radial data.

    For ``u = phi(v)`` returns ``(H(Du, D^2 u) - f(u) u_t,
    phi'(v)^k * [H(Dv, D^2 v + Z(v) Dv Dv^T) - v_t])``; the two agree when
    ``phi' = f(phi)^{1/(k-1)}`` (``f == 1`` for ``k = 1``).
    """
    from .radial_calculus import radial_hessian

    n = desc.dim
    e = np.zeros(n)
    e[0] = 1.0
    r, v, v_r, v_rr, v_t = np.broadcast_arrays(*(np.asarray(x, dtype=float)
                                                 for x in (r, v, v_r, v_rr, v_t)))
    p1 = tr.dphi(v)
    zv = tr.Z(v)
    p2 = zv * p1
    u_r, u_rr, u_t = p1 * v_r, p1 * v_rr + p2 * v_r**2, p1 * v_t
    fu = np.ones_like(v) if tr.exact_exp else tr.f(tr.phi(v))
    lhs = eval_operator(desc, u_r[..., None] * e, radial_hessian(n, r, u_r, u_rr, e)) - fu * u_t
    X = radial_hessian(n, r, v_r, v_rr, e) + (zv * v_r**2)[..., None, None] * np.outer(e, e)
    rhs = p1**desc.homogeneity.k * (eval_operator(desc, v_r[..., None] * e, X) - v_t)
    return lhs, rhs
