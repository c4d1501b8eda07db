"""Super-solutions ``w = m + a t + b (1 + t) v(r)`` and their verification.

The scalars ``a``, ``b`` and the split radius ``R`` are chosen case by
case from the envelope constants ``M(1,1)`` (``M11``) and ``M_bar``:

=========  ===================  ==========================================
tag        regime               profile
=========  ===================  ==========================================
I.i.a      k = 1, sigma = 0     integral profile, ``beta_bar = 2 - eps``
I.i.b      k = 1, 0 < s <= 2    integral profile, ``beta_bar = 2 - eps``
I.ii.1     k > 1, sigma = 0     ``r^gamma*``
I.ii.2     k > 1, 1 < s <= g    ``r^gamma*``
I.ii.3     k > 1, 0 < s <= 1    ``r^gamma*``
II         sigma > gamma        integral profile, ``beta_bar = s/(s-1)``
=========  ===================  ==========================================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .aux_functions import AuxFn, make_aux_params
from .errors import BParameterTooLarge, ContractViolation
from .problem import ProblemSpec
from .radial_calculus import Kappa, RadialProfile, profile_grid, residual_field
from .reports import LimitStudy, ResidualReport, relative_slack

__all__ = [
    "SuperBarrier",
    "super_case_tag",
    "default_epsilon",
    "admissible_b",
    "build_super",
    "super_grid",
    "super_bound",
    "super_residual",
    "a_limit_study",
    "a_limit_target",
]


def super_case_tag(k: float, sigma: float, gamma: Optional[float] = None) -> str:
    gamma = k + 1.0 if gamma is None else gamma
    if sigma > gamma:
        return "II"
    if math.isclose(k, 1.0):
        return "I.i.a" if sigma == 0 else "I.i.b"
    if sigma == 0:
        return "I.ii.1"
    if sigma <= 1:
        return "I.ii.3"
    return "I.ii.2"


def default_epsilon(sigma: float) -> float:
    """``0.05`` when admissible, else half the admissible cap ``sigma / 8``."""
    cap = 1.0 / 8.0 if sigma == 0 else sigma / 8.0
    return 0.05 if 0.05 < cap else cap / 2.0


def _bisect_b(lin, exp1, quad, exp2, target):
    """Largest ``b`` in ``(0, 1]`` with ``lin b^exp1 + quad b^exp2 <= target``."""

    def g(b):
        return lin * b**exp1 + quad * b**exp2 - target

    if g(1.0) <= 0:
        return 1.0
    return brentq(g, 0.0, 1.0, xtol=1e-15, rtol=1e-14)


def admissible_b(problem: ProblemSpec, epsilon: Optional[float] = None) -> dict:
    """Upper bound on ``b`` for the case selected by ``problem``.

    Returns
    -------
    dict
        ``{"case_tag", "bound", "strict"}``; ``b`` must satisfy
        ``b < bound`` if ``strict`` else ``b <= bound`` (always ``b < 1``).
    """
    env = problem.envelopes()
    k, gamma, gs = problem.k, problem.gamma, problem.gamma_star
    sigma, alpha = problem.sigma, problem.alpha
    E = gs * (1.0 + problem.T)
    tag = super_case_tag(k, sigma, gamma)
    Mb = env.M_bar
    if tag in ("I.i.a", "I.i.b"):
        return {"case_tag": tag, "bound": 1.0, "strict": True}
    if tag == "I.ii.1":
        return {"case_tag": tag, "bound": min(1.0, (E**gamma * Mb) ** (-1.0 / (k - 1.0))),
                "strict": False}
    if tag == "I.ii.2":
        # gamma-power of E; see the decisions ledger
        b0 = _bisect_b(E**gamma * Mb, k - 1.0, alpha * E**sigma, sigma - 1.0, 0.5)
        return {"case_tag": tag, "bound": b0, "strict": False}
    if tag == "I.ii.3":
        return {"case_tag": tag, "bound": min(1.0, (4.0 * E**gamma * Mb) ** (-1.0 / (k - 1.0))),
                "strict": True}
    cp = AuxFn(make_aux_params(k, sigma)).params.c_p
    if math.isclose(k, 1.0):
        if alpha == 0:
            return {"case_tag": tag, "bound": 1.0, "strict": True}
        return {"case_tag": tag,
                "bound": min(1.0, (cp / (4.0 * alpha * E**sigma)) ** (1.0 / (sigma - 1.0))),
                "strict": False}
    b0 = _bisect_b(E**gamma * Mb, k - 1.0, alpha * E**sigma, sigma - 1.0, cp / 2.0)
    return {"case_tag": tag, "bound": b0, "strict": False}


@dataclass(frozen=True)
class SuperBarrier:
    """``w(r, t) = m + a t + b (1 + t) v(r)`` with its selection constants."""

    m: float
    a: float
    b: float
    R: float
    aux: AuxFn = field(repr=False)
    case_tag: str
    constants: dict = field(default_factory=dict)

    @property
    def full_tag(self) -> str:
        """Case tag with the ``5.`` prefix that marks super-solutions in reports."""
        return "5." + self.case_tag

    def profile(self) -> RadialProfile:
        return RadialProfile(self.m, self.a, self.b, self.aux, Kappa(1.0, 1.0), 1)

    def __call__(self, r, t):
        """Values on the tensor grid ``r x t``."""
        return profile_grid(self.profile(), np.atleast_1d(r), np.atleast_1d(t))[0]

    def to_dict(self) -> dict:
        return {"m": self.m, "a": self.a, "b": self.b, "R": self.R, "case_tag": self.case_tag,
                "full_tag": self.full_tag, "aux": self.aux.to_dict(),
                "constants": dict(self.constants)}


def build_super(problem: ProblemSpec, b: float, m: float = 0.0,
                epsilon: Optional[float] = None) -> SuperBarrier:
    """Select ``R`` and ``a`` for the super-solution with scale ``b``.

    Parameters
    ----------
    problem : ProblemSpec
    b : float
        Scale in ``(0, 1)``, below the case's admissibility bound.
    m : float
        Additive constant, typically ``sup h``.
    epsilon : float, optional
        Gap ``2 - beta_bar`` for ``k = 1`` with ``sigma <= 2``; defaults to
        :func:`default_epsilon`.

    Returns
    -------
    SuperBarrier

    Raises
    ------
    BParameterTooLarge
        If ``b`` exceeds the admissibility bound.

    Examples
    --------
    >>> from plbarrier.operators import laplacian
    >>> from plbarrier.problem import ProblemSpec, ChiProfile
    >>> pb = ProblemSpec(laplacian(2), sigma=0.0, chi=ChiProfile.constant(0.3))
    >>> w = build_super(pb, b=0.01, epsilon=0.05)
    >>> round(w.R ** 0.05, 6)
    192.0
    """
    if not 0 < b < 1:
        raise BParameterTooLarge(b, 1.0, super_case_tag(problem.k, problem.sigma))
    env = problem.envelopes()
    k, gamma, gs = problem.k, problem.gamma, problem.gamma_star
    sigma, alpha, T = problem.sigma, problem.alpha, problem.T
    E = gs * (1.0 + T)
    M11, Mb = env.M11, env.M_bar
    adm = admissible_b(problem, epsilon)
    tag = adm["case_tag"]
    if (b >= adm["bound"] and adm["strict"]) or b > adm["bound"]:
        raise BParameterTooLarge(b, adm["bound"], tag)
    consts = {"E": E, "M11": M11, "M_bar": Mb, "alpha": alpha, "b_bound": adm["bound"]}

    if tag in ("I.i.a", "I.i.b"):
        eps = default_epsilon(sigma) if epsilon is None else float(epsilon)
        aux = AuxFn(make_aux_params(k, sigma, eps))
        P = 4.0 * (1.0 + T) ** 2 * Mb
        Q = alpha * (2.0 * (1.0 + T)) ** sigma
        consts.update(epsilon=eps, P=P, Q=Q)
        if tag == "I.i.a":
            R = max(1.0, 8.0 * (1.0 + T) ** 2 * Mb) ** (1.0 / eps)
            a = alpha + 2 * b * (1 + T) * M11 * R**2 + b * R ** (2 - eps) / 2
        else:
            if sigma < 1:
                R = max((2.0 * (1.0 + P)) ** (1.0 / eps),
                        (2.0 * Q * b ** (sigma - 1.0)) ** (1.0 / ((2.0 - sigma) * (1.0 - eps))))
            else:
                R = max(1.0, (2.0 * P + 2.0 * Q) ** (1.0 / eps))
            a = (alpha * (2 * b * (1 + T)) ** sigma * R**sigma + 2 * b * (1 + T) * M11 * R**2
                 + b * R ** (2 - eps) / 2)
    elif tag.startswith("I.ii"):
        aux = AuxFn(make_aux_params(k, sigma))
        if tag == "I.ii.3":
            R = max(1.0, (4.0 * alpha * E**sigma * b ** (sigma - 1.0)) ** (k / (gamma - sigma)))
        else:
            R = 1.0
        a = b**k * E**k * M11 * R**gs + alpha * b**sigma * E**sigma * R ** (sigma / k)
    else:
        aux = AuxFn(make_aux_params(k, sigma))
        cp = aux.params.c_p
        consts["c_p"] = cp
        if math.isclose(k, 1.0):
            R = max(1.0, (4.0 * E**gamma * Mb / cp) ** ((sigma - 1.0) / (sigma - gamma)))
        else:
            R = 1.0
        s1 = sigma / (sigma - 1.0)
        a = (b * E) ** k * M11 * R**gs + alpha * (b * E) ** sigma * R**s1 + cp * b * R**s1
    return SuperBarrier(float(m), float(a), float(b), float(R), aux, tag, consts)


def super_grid(R: float, T: float, n_log: int = 64, n_t: int = 32, span: float = 1e3):
    """Canonical grid: ``r = 0``, log points up to ``span * R`` plus a band around ``R``."""
    r = np.unique(np.concatenate([[0.0], np.geomspace(1e-3, span * R, n_log),
                                  np.linspace(R / 8.0, 2.0 * R, 16), [R]]))
    t = np.linspace(0.0, T, n_t)
    return r, t


def super_bound(barrier: SuperBarrier, problem: ProblemSpec, r, t):
    """The analytic upper bounds on ``r x t``.

    Returns ``(inner, outer)``: the bound valid on ``r <= R`` and the one
    valid on ``r >= R`` (``nan`` outside their ranges).
    """
    r = np.asarray(r, dtype=float)[:, None]
    k, gamma, gs = problem.k, problem.gamma, problem.gamma_star
    sigma, alpha, T = problem.sigma, problem.alpha, problem.T
    a, b, R = barrier.a, barrier.b, barrier.R
    aux = barrier.aux
    v = aux.value(r[:, 0])[:, None]
    v1 = aux.d1(r[:, 0])[:, None]
    M11, Mb = barrier.constants["M11"], barrier.constants["M_bar"]
    src = alpha * (b * (1.0 + T) * v1) ** sigma
    inner = (b * gs * (1.0 + T)) ** k * M11 * R**gs + src - a - b * v
    outer = b**k * ((1.0 + T) * v1) ** gamma * Mb + src - a - b * v
    shape = (r.shape[0], np.size(t))
    inner = np.where(r <= R, inner, np.nan) * np.ones(shape)
    outer = np.where(r >= R, outer, np.nan) * np.ones(shape)
    return inner, outer


def super_residual(barrier: SuperBarrier, problem: ProblemSpec, r_grid=None, t_grid=None,
                   tol: float = 1e-9) -> ResidualReport:
    """Evaluate the super-solution residual and the bound chain on a grid.

    PASS iff the residual is at most ``tol`` everywhere and never exceeds the
    applicable analytic bound (relative slack ``>= -1e-9``).
    """
    if r_grid is None or t_grid is None:
        rg, tg = super_grid(barrier.R, problem.T)
        r_grid = rg if r_grid is None else r_grid
        t_grid = tg if t_grid is None else t_grid
    r = np.asarray(r_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if r.max() < 10 * barrier.R:
        raise ContractViolation("r_grid must reach 10 R")
    res = residual_field(problem.operator, problem.Z, problem.chi, problem.sigma,
                         barrier.profile(), r, t)
    inner, outer = super_bound(barrier, problem, r, t)
    s_in = np.where(np.isnan(inner), np.inf, relative_slack(res, np.nan_to_num(inner)))
    s_out = np.where(np.isnan(outer), np.inf, relative_slack(res, np.nan_to_num(outer)))
    slack = np.minimum(s_in, s_out)
    idx = np.unravel_index(np.argmax(res), res.shape)
    bound = np.where(np.isnan(inner), outer, inner)
    return ResidualReport("super", barrier.case_tag, tol, float(res[idx]),
                          (float(r[idx[0]]), float(t[idx[1]])), float(slack.min()),
                          n_nodes=res.size, r=r, t=t, residual=res, bound=bound)


def a_limit_target(problem: ProblemSpec) -> float:
    return problem.alpha if problem.sigma == 0 else 0.0


def a_limit_study(problem: ProblemSpec, m: float = 0.0,
                  b_sequence: Sequence[float] = (1e-2, 1e-3, 1e-4),
                  epsilon: Optional[float] = None, tol: float = 1e-3) -> LimitStudy:
    """``a(b)`` along a decreasing ``b`` sequence.

    The tail is compared with ``alpha`` for ``sigma = 0`` and with ``0``
    otherwise. Inadmissible ``b`` are skipped and noted.
    """
    rows, notes = [], []
    tag = super_case_tag(problem.k, problem.sigma, problem.gamma)
    for b in b_sequence:
        try:
            w = build_super(problem, b, m, epsilon)
        except BParameterTooLarge as exc:
            notes.append(f"skipped b={b:g}: bound {exc.bound:.6g}")
            continue
        rows.append((float(b), w.a, w.R))
        tag = w.case_tag
    return LimitStudy(tag, "b", rows, a_limit_target(problem), tol, notes=notes)
