"""Sub-solutions: a family blowing down inside a ball and a growth family.

Compact family (``sigma <= gamma``, or ``chi >= 0``)::

    w(x, t) = mu - F t - u(|x|),   u(r) = E int_0^{(r/R)^2} (1 - tau^p)^{-1} dtau,

defined in ``|x| < R`` with ``u -> +inf`` at ``|x| = R``, ``E = p (p + 1) / ell``.

Growth family (``sigma = gamma`` with large ``alpha``, or ``sigma > gamma``)::

    w(x, t) = m - a t - b (1 + t) v(|x|),

the mirror image of the super-solutions with ``|N|`` in place of ``M(1,1)``
and ``|S|`` in place of ``M_bar``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .aux_functions import AuxFn, integrate_scaled, make_aux_params
from .barriers_super import _bisect_b, default_epsilon, super_grid
from .errors import BParameterTooLarge, ContractViolation, WrongRegime
from .problem import ProblemSpec
from .radial_calculus import Kappa, RadialProfile, profile_grid, residual_field
from .reports import LimitStudy, ResidualReport, relative_slack

__all__ = [
    "CompactProfile",
    "SubBarrierCompact",
    "SubBarrierGrowth",
    "compact_subcase",
    "build_sub_compact",
    "build_sub_growth",
    "sub_residual",
    "compact_grid",
    "compact_bounds",
    "growth_bounds",
    "f_limit_study",
    "f_limit_target",
    "growth_admissible_b",
    "J_p",
]

DEFAULT_OMEGA0 = 0.75
DEFAULT_RADIUS = 10.0
_MAX_P = 100000


def J_p(omega, p):
    """``2 p^2 w^2 / (1 - w^{2p})``."""
    omega = np.asarray(omega, dtype=float)
    return 2.0 * p * p * omega**2 / (1.0 - omega ** (2.0 * p))


@dataclass(frozen=True)
class CompactProfile:
    """``u(r) = E int_0^{(r/R)^2} (1 - tau^p)^{-1} dtau`` on ``0 <= r < R``."""

    E: float
    p: float
    R: float

    def L(self, omega):
        """``2 E / (1 - w^{2p})``."""
        omega = np.asarray(omega, dtype=float)
        return 2.0 * self.E / (1.0 - omega ** (2.0 * self.p))

    def _integrand(self, s):
        return np.exp(-s) / (1.0 - (-np.expm1(-s)) ** self.p)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        om = r / self.R
        out = np.full_like(om, np.inf)
        inside = om < 1
        out[om == 0] = 0.0
        pos = inside & (om > 0)
        if np.any(pos):
            w2 = om[pos] ** 2
            hi = -np.log1p(-w2)
            out[pos] = self.E * integrate_scaled(self._integrand, np.zeros_like(hi), hi, w2)
        return out

    def d1(self, r):
        om = np.asarray(r, dtype=float) / self.R
        return self.L(om) * om / self.R

    def d2(self, r):
        om = np.asarray(r, dtype=float) / self.R
        t = om ** (2.0 * self.p)
        return self.L(om) / self.R**2 * (1.0 + (2.0 * self.p - 1.0) * t) / (1.0 - t)

    def ratio_rv2_v1(self, r):
        om = np.asarray(r, dtype=float) / self.R
        t = om ** (2.0 * self.p)
        return (1.0 + (2.0 * self.p - 1.0) * t) / (1.0 - t)

    def limits_at_zero(self, k):
        lk = 2.0 * self.E / self.R**2 if math.isclose(k, 1.0) else 0.0
        return lk, 1.0


def compact_subcase(problem: ProblemSpec) -> str:
    """``"b"`` if ``chi >= 0``; ``"a"`` if ``sigma < gamma``; ``"c"`` if
    ``sigma = gamma`` and ``alpha < ell * script_H``.

    Raises
    ------
    WrongRegime
        Otherwise; the growth family applies instead.
    """
    if problem.chi_nonnegative:
        return "b"
    g = problem.gamma
    if problem.sigma < g:
        return "a"
    if math.isclose(problem.sigma, g):
        env = problem.envelopes()
        if problem.alpha < problem.ell * env.script_H:
            return "c"
        raise WrongRegime(f"sigma = gamma with alpha={problem.alpha:g} >= ell*H="
                          f"{problem.ell * env.script_H:g}; use build_sub_growth")
    raise WrongRegime(f"sigma={problem.sigma:g} > gamma={g:g} needs chi >= 0; "
                      f"use build_sub_growth")


@dataclass(frozen=True)
class SubBarrierCompact:
    """``w = mu - F t - u(|x - y|)`` in ``|x - y| < R``."""

    mu: float
    E: float
    p: float
    R: float
    omega0: float
    F: float
    subcase: str
    ell: float
    center: tuple = ()
    constants: dict = field(default_factory=dict)

    @property
    def case_tag(self) -> str:
        return "I." + self.subcase

    @property
    def full_tag(self) -> str:
        """Case tag with the ``6.`` prefix that marks sub-solutions in reports."""
        return "6." + self.case_tag

    @property
    def aux(self) -> CompactProfile:
        return CompactProfile(self.E, self.p, self.R)

    def profile(self) -> RadialProfile:
        return RadialProfile(self.mu, self.F, 1.0, self.aux, Kappa(1.0, 0.0), -1)

    def __call__(self, r, t):
        """Values on ``r x t``; ``-inf`` for ``r >= R``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u = self.aux.value(r)
        return self.mu - self.F * t[None, :] - u[:, None]

    def to_dict(self) -> dict:
        return {"mu": self.mu, "E": self.E, "p": self.p, "R": self.R, "omega0": self.omega0,
                "F": self.F, "subcase": self.subcase, "case_tag": self.case_tag,
                "full_tag": self.full_tag, "ell": self.ell, "center": list(self.center),
                "constants": dict(self.constants)}


def _F_parts(L0, omega0, R, k, k1, gamma, sigma, N_abs, alpha_eff):
    X = L0**k * N_abs * omega0**k1 / R**gamma
    Y = alpha_eff * (L0 * omega0 / R) ** sigma
    return X, Y


def build_sub_compact(problem: ProblemSpec, omega0: float = DEFAULT_OMEGA0,
                      R_override: Optional[float] = None, subcase: Optional[str] = None,
                      mu: Optional[float] = None, center=None) -> SubBarrierCompact:
    """Select ``p``, ``E``, ``R`` and ``F`` for the compact sub-solution.

    Parameters
    ----------
    problem : ProblemSpec
    omega0 : float
        Split point in ``[1/sqrt(2), 1)``.
    R_override : float, optional
        Radius. In sub-case ``a`` the exponent ``p`` (then real) is solved so
        that the radius condition holds at this ``R``; in ``b`` and ``c``
        any ``R > 1`` is accepted (default 10).
    subcase : {"a", "b", "c"}, optional
        Defaults to :func:`compact_subcase`.
    mu : float, optional
        Defaults to ``inf h``.

    Returns
    -------
    SubBarrierCompact

    Raises
    ------
    WrongRegime
        See :func:`compact_subcase`.
    """
    if not 1.0 / math.sqrt(2.0) - 1e-15 <= omega0 < 1.0:
        raise ContractViolation("omega0 must lie in [1/sqrt(2), 1)")
    sub = compact_subcase(problem) if subcase is None else subcase
    if sub == "b" and not problem.chi_nonnegative:
        raise WrongRegime("sub-case b needs chi >= 0")
    if sub == "a" and not problem.sigma < problem.gamma:
        raise WrongRegime("sub-case a needs sigma < gamma")
    if sub == "c" and not math.isclose(problem.sigma, problem.gamma):
        raise WrongRegime("sub-case c needs sigma = gamma")
    env = problem.envelopes()
    k, k1, gamma = problem.k, problem.operator.k1, problem.gamma
    sigma, alpha, ell = problem.sigma, problem.alpha, problem.ell
    if sub == "c" and not alpha < ell * env.script_H:
        raise WrongRegime("sub-case c needs alpha < ell * script_H")
    N_abs = abs(env.N)
    mu = problem.mu if mu is None else float(mu)
    alpha_eff = 0.0 if sub == "b" else alpha

    def Hp(p):
        return env.script_H_at(p * p)

    def L0(p):
        return 2.0 * p * (p + 1.0) / (ell * (1.0 - omega0 ** (2.0 * p)))

    p = 2
    while Hp(p) < env.K0 or (sub == "c" and ell * Hp(p) * p / (p + 1.0) <= alpha):
        p += 1
        if p > _MAX_P:
            raise WrongRegime("no admissible p found")

    if sub == "a":
        def radius(p):
            return L0(p) * omega0 / ((alpha / (ell * Hp(p))) * ((1.0 + p) / p)) ** (
                1.0 / (gamma - sigma))

        if R_override is None:
            while radius(p) <= 1.0:
                p += 1
            R = radius(p)
            p = float(p)
        else:
            R = float(R_override)
            if R < radius(p):
                raise ContractViolation(f"R_override={R:g} is below the smallest admissible "
                                        f"radius {radius(p):.6g}")
            hi = 2.0 * p
            while radius(hi) < R:
                hi *= 2.0
            p = brentq(lambda q: radius(q) - R, float(p), hi, xtol=1e-13, rtol=1e-14)
            R = radius(p)
    else:
        R = DEFAULT_RADIUS if R_override is None else float(R_override)
        if R <= 1:
            raise ContractViolation("R must exceed 1")
        p = float(p)
    E = p * (p + 1.0) / ell
    X, Y = _F_parts(L0(p), omega0, R, k, k1, gamma, sigma, N_abs, alpha_eff)
    F = X if sub == "b" else X + Y
    consts = {"N": env.N, "K0": env.K0, "script_H": env.script_H, "script_H_p2": Hp(p),
              "alpha": alpha, "X": X, "Y": Y, "L_omega0": L0(p)}
    c = tuple(float(x) for x in center) if center is not None else ()
    return SubBarrierCompact(mu, E, p, R, float(omega0), F, sub, ell, c, consts)


def compact_grid(barrier: SubBarrierCompact, T: float, n_omega: int = 100, n_t: int = 32,
                 omega_cap: float = 0.99):
    if omega_cap > 0.999:
        raise ContractViolation("omega_cap must be <= 0.999")
    om = np.unique(np.concatenate([np.linspace(0.0, omega_cap, n_omega), [barrier.omega0]]))
    return om * barrier.R, np.linspace(0.0, T, n_t)


def compact_bounds(barrier: SubBarrierCompact, problem: ProblemSpec, r, t):
    """Lower bounds on ``r x t``: a list of ``(label, array)`` with ``nan`` off-range."""
    r = np.asarray(r, dtype=float)[:, None]
    shape = (r.shape[0], np.size(t))
    om = r / barrier.R
    k, k1, gamma = problem.k, problem.operator.k1, problem.gamma
    sigma = problem.sigma
    alpha_eff = 0.0 if barrier.subcase == "b" else problem.alpha
    prof = barrier.aux
    L = prof.L(om)
    Lw = L * om / barrier.R
    N_abs = abs(barrier.constants["N"])
    Hp = barrier.constants["script_H_p2"]
    p, ell, F = barrier.p, barrier.ell, barrier.F
    inner = F - (L**k * N_abs * om**k1 / barrier.R**gamma + alpha_eff * Lw**sigma)
    outer = ell * Hp * (p / (p + 1.0)) * Lw**gamma - alpha_eff * Lw**sigma + F
    out = [("inner", np.where(om <= barrier.omega0, inner, np.nan) * np.ones(shape)),
           ("outer_full", np.where(om >= barrier.omega0, outer, np.nan) * np.ones(shape))]
    if sigma <= gamma:
        L0w0 = prof.L(barrier.omega0) * barrier.omega0 / barrier.R
        fact = Lw**sigma * (ell * Hp * (p / (p + 1.0)) * L0w0 ** (gamma - sigma) - alpha_eff) + F
        out.append(("outer_factored", np.where(om >= barrier.omega0, fact, np.nan) * np.ones(shape)))
    return out


def _min_slack(res, bounds):
    """Worst relative slack of ``res >= bound`` over the nodes where a bound applies."""
    worst = np.inf
    for _, bd in bounds:
        m = ~np.isnan(bd)
        if np.any(m):
            worst = min(worst, float(np.min(relative_slack(bd[m], res[m]))))
    return worst


@dataclass(frozen=True)
class SubBarrierGrowth:
    """``w(r, t) = m - a t - b (1 + t) v(r)``."""

    m: float
    a: float
    b: float
    R: float
    aux: AuxFn = field(repr=False)
    case_tag: str
    constants: dict = field(default_factory=dict)

    @property
    def full_tag(self) -> str:
        """Case tag with the ``6.`` prefix that marks sub-solutions in reports."""
        return "6." + self.case_tag

    def profile(self) -> RadialProfile:
        return RadialProfile(self.m, self.a, self.b, self.aux, Kappa(1.0, 1.0), -1)

    def __call__(self, r, t):
        return profile_grid(self.profile(), np.atleast_1d(r), np.atleast_1d(t))[0]

    def to_dict(self) -> dict:
        return {"m": self.m, "a": self.a, "b": self.b, "R": self.R, "case_tag": self.case_tag,
                "full_tag": self.full_tag, "aux": self.aux.to_dict(),
                "constants": dict(self.constants)}


def _growth_tag(problem: ProblemSpec) -> str:
    k, g, s = problem.k, problem.gamma, problem.sigma
    if s > g and not math.isclose(s, g):
        return "II.ii"
    if math.isclose(s, g):
        env = problem.envelopes()
        if problem.alpha >= problem.ell * env.script_H:
            return "II.i1" if math.isclose(k, 1.0) else "II.i2"
        raise WrongRegime("sigma = gamma with alpha < ell * script_H: use build_sub_compact")
    raise WrongRegime(f"sigma={s:g} < gamma={g:g}: use build_sub_compact")


def growth_admissible_b(problem: ProblemSpec) -> dict:
    """Admissibility bound on ``b`` for the growth family."""
    tag = _growth_tag(problem)
    env = problem.envelopes()
    k, gamma, sigma, alpha = problem.k, problem.gamma, problem.sigma, problem.alpha
    E = problem.gamma_star * (1.0 + problem.T)
    S_abs = abs(env.S)
    if tag == "II.i1":
        return {"case_tag": tag, "bound": 1.0, "strict": True}
    if tag == "II.i2":
        b0 = _bisect_b(E**gamma * S_abs, k - 1.0, alpha * E**sigma, sigma - 1.0, 0.5)
        return {"case_tag": tag, "bound": b0, "strict": False}
    cp = make_aux_params(k, sigma).c_p
    if math.isclose(k, 1.0):
        if alpha == 0:
            return {"case_tag": tag, "bound": 1.0, "strict": True}
        return {"case_tag": tag,
                "bound": min(1.0, (cp / (4.0 * alpha * E**sigma)) ** (1.0 / (sigma - 1.0))),
                "strict": False}
    b0 = _bisect_b(E**gamma * S_abs, k - 1.0, alpha * E**sigma, sigma - 1.0, cp / 2.0)
    return {"case_tag": tag, "bound": b0, "strict": False}


def build_sub_growth(problem: ProblemSpec, b: float, m: Optional[float] = None,
                     epsilon: Optional[float] = None) -> SubBarrierGrowth:
    """Select ``R`` and ``a`` for the growth sub-solution with scale ``b``.

    Raises
    ------
    WrongRegime
        Unless ``sigma = gamma`` with ``alpha >= ell * script_H`` or ``sigma > gamma``.
    BParameterTooLarge
        If ``b`` exceeds the admissibility bound.
    """
    adm = growth_admissible_b(problem)
    tag = adm["case_tag"]
    if not 0 < b < 1 or (b >= adm["bound"] and adm["strict"]) or b > adm["bound"]:
        raise BParameterTooLarge(b, adm["bound"], tag)
    env = problem.envelopes()
    k, gamma, gs = problem.k, problem.gamma, problem.gamma_star
    sigma, alpha, T = problem.sigma, problem.alpha, problem.T
    E = gs * (1.0 + T)
    N_abs, S_abs = abs(env.N), abs(env.S)
    m = problem.mu if m is None else float(m)
    consts = {"E": E, "N": env.N, "S": env.S, "alpha": alpha, "b_bound": adm["bound"]}
    if tag == "II.i1":
        eps = default_epsilon(sigma) if epsilon is None else float(epsilon)
        aux = AuxFn(make_aux_params(k, sigma, eps))
        P = 4.0 * (1.0 + T) ** 2 * S_abs
        Q = alpha * (2.0 * (1.0 + T)) ** sigma
        R = max(1.0, (2.0 * P + 2.0 * Q) ** (1.0 / eps))
        a = (2 * b * (1 + T) * N_abs + alpha * (2 * b * (1 + T) * R) ** sigma
             + b * R ** (2 - eps) / 2)
        consts.update(epsilon=eps, P=P, Q=Q)
    elif tag == "II.i2":
        aux = AuxFn(make_aux_params(k, sigma))
        R = 1.0
        a = (b * E) ** k * N_abs + alpha * (b * E) ** sigma * R ** (sigma / k)
    else:
        aux = AuxFn(make_aux_params(k, sigma))
        cp = aux.params.c_p
        consts["c_p"] = cp
        if math.isclose(k, 1.0):
            R = max(1.0, (4.0 * E**gamma * S_abs / cp) ** ((sigma - 1.0) / (sigma - gamma)))
        else:
            R = 1.0
        s1 = sigma / (sigma - 1.0)
        a = (b * E) ** k * N_abs + alpha * (b * E) ** sigma * R**s1 + cp * b * R**s1
    return SubBarrierGrowth(m, float(a), float(b), float(R), aux, tag, consts)


def growth_bounds(barrier: SubBarrierGrowth, problem: ProblemSpec, r, t):
    """Lower bounds for the growth family on ``r x t``."""
    r = np.asarray(r, dtype=float)[:, None]
    shape = (r.shape[0], np.size(t))
    k, gamma, sigma, alpha, T = problem.k, problem.gamma, problem.sigma, problem.alpha, problem.T
    a, b, R = barrier.a, barrier.b, barrier.R
    aux = barrier.aux
    v = aux.value(r[:, 0])[:, None]
    v1 = aux.d1(r[:, 0])[:, None]
    N_abs, S_abs = abs(barrier.constants["N"]), abs(barrier.constants["S"])
    src = alpha * (b * (1.0 + T) * v1) ** sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        lk = np.where(r > 0, (b * (1.0 + T) * v1) ** k / np.where(r > 0, r, 1.0),
                      b**k * (1.0 + T) ** k * aux.limits_at_zero(k)[0])
    inner = -(lk * N_abs + src - a - b * v)
    outer = -(b**k * ((1.0 + T) * v1) ** gamma * S_abs + src - a - b * v)
    return [("inner", np.where(r <= R, inner, np.nan) * np.ones(shape)),
            ("outer", np.where(r >= R, outer, np.nan) * np.ones(shape))]


def sub_residual(barrier, problem: ProblemSpec, r_grid=None, t_grid=None,
                 tol: float = 1e-9) -> ResidualReport:
    """Evaluate the sub-solution residual and its lower-bound chain.

    PASS iff the residual is at least ``-tol`` everywhere and never falls
    below an applicable analytic bound (relative slack ``>= -1e-9``).
    """
    if isinstance(barrier, SubBarrierCompact):
        rg, tg = compact_grid(barrier, problem.T)
        if r_grid is not None and np.max(r_grid) >= 0.9995 * barrier.R:
            raise ContractViolation("compact grids must stay within omega <= 0.999")
    else:
        rg, tg = super_grid(barrier.R, problem.T)
    r = np.asarray(rg if r_grid is None else r_grid, dtype=float)
    t = np.asarray(tg if t_grid is None else t_grid, dtype=float)
    res = residual_field(problem.operator, problem.Z, problem.chi, problem.sigma,
                         barrier.profile(), r, t, mode="negative_slope")
    if isinstance(barrier, SubBarrierCompact):
        bounds = compact_bounds(barrier, problem, r, t)
    else:
        bounds = growth_bounds(barrier, problem, r, t)
    slack = _min_slack(res, bounds)
    idx = np.unravel_index(np.argmin(res), res.shape)
    first = np.full(res.shape, np.nan)
    for _, bd in bounds:
        first = np.where(np.isnan(first), bd, first)
    return ResidualReport("sub", barrier.case_tag, tol, float(res[idx]),
                          (float(r[idx[0]]), float(t[idx[1]])), slack, n_nodes=res.size,
                          r=r, t=t, residual=res, bound=first)


def f_limit_target(problem: ProblemSpec, subcase: Optional[str] = None) -> float:
    sub = compact_subcase(problem) if subcase is None else subcase
    if sub in ("b", "c"):
        return 0.0
    if problem.sigma == 0:
        return problem.alpha
    env = problem.envelopes()
    g, s = problem.gamma, problem.sigma
    return (problem.alpha**g / (problem.ell * env.script_H) ** s) ** (1.0 / (g - s))


def f_limit_study(problem: ProblemSpec, R_sequence: Sequence[float] = (1e2, 1e3, 1e4),
                  omega0: float = DEFAULT_OMEGA0, subcase: Optional[str] = None,
                  tol: float = 0.02) -> LimitStudy:
    """``F(R)`` along an increasing radius sequence.

    The tail is compared with the expected limit: relatively (``tol``)
    when the limit is nonzero and absolutely otherwise.
    """
    sub = compact_subcase(problem) if subcase is None else subcase
    rows, notes = [], []
    for R in R_sequence:
        try:
            w = build_sub_compact(problem, omega0, R_override=R, subcase=sub)
        except ContractViolation as exc:
            notes.append(f"skipped R={R:g}: {exc}")
            continue
        rows.append((float(R), w.F, w.p))
    target = f_limit_target(problem, sub)
    return LimitStudy("I." + sub, "R", rows, target, tol, relative=target != 0, notes=notes)
