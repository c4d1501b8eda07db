"""Radial profiles ``v(r) = int_0^{r^beta} (1 + tau^p)^{-1} dtau`` and their bounds.

The profile interpolates between ``r^beta`` growth near the origin and
``r^beta_bar`` growth at infinity, with ``p = (beta - beta_bar) / beta``.
Derivatives and the ratios used by the barrier estimates are closed form;
only ``v`` itself needs quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import ContractViolation, QuadratureError

__all__ = [
    "AuxFnParams",
    "AuxFn",
    "AuxValues",
    "BoundsReport",
    "make_aux_params",
    "aux_eval",
    "aux_bounds_check",
    "log_grid",
    "integrate_scaled",
]

# integrals in y = log(tau) start at min(Y, 0) - 45; below y = 0 the integrand is ~e^y
_LOG_DEPTH = 45.0


def log_grid(lo: float = 1e-3, hi: float = 1e3, num: int = 64) -> np.ndarray:
    return np.geomspace(lo, hi, num)


def integrate_scaled(integrand, lo, hi, scale, epsrel=1e-13):
    """Integrate many scalar integrals at once with :func:`scipy.integrate.quad_vec`.

    Parameters
    ----------
    integrand : callable
        ``integrand(y)`` for an array ``y`` of abscissae (one per integral).
    lo, hi : ndarray
        Integration limits, one pair per integral.
    scale : ndarray
        Rough magnitude of each integral; the integrals are normalised by it
        so a single max-norm tolerance is relative for every component.

    Returns
    -------
    ndarray
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    scale = np.asarray(scale, dtype=float)
    if lo.size == 0:
        return np.zeros(0)
    width = hi - lo

    def f(s):
        return integrand(lo + s * width) * width / scale

    val, err = integrate.quad_vec(f, 0.0, 1.0, epsabs=0.0, epsrel=epsrel, norm="max", limit=2000)
    if not np.all(np.isfinite(val)) or err > 1e3 * epsrel * max(1.0, np.max(np.abs(val))):
        raise QuadratureError(f"quad_vec error estimate {err:.3g} for {lo.size} integrals "
                              f"on [{lo.min():.3g}, {hi.max():.3g}]")
    return val * scale


@dataclass(frozen=True)
class AuxFnParams:
    """Exponents of the auxiliary profile.

    Parameters
    ----------
    beta : float
        Growth exponent near the origin, ``> 1``.
    beta_bar : float
        Growth exponent at infinity, ``1 <= beta_bar <= beta``.
    case : {"A", "B", "C", "free"}
    epsilon : float, optional
        Gap ``beta - beta_bar`` in case A.
    """

    beta: float
    beta_bar: float
    case: str = "free"
    epsilon: Optional[float] = None

    def __post_init__(self):
        if not self.beta > 1:
            raise ContractViolation(f"beta must exceed 1, got {self.beta}")
        if not 1 <= self.beta_bar <= self.beta:
            raise ContractViolation(f"need 1 <= beta_bar <= beta, got beta_bar={self.beta_bar}")
        if self.case not in ("A", "B", "C", "free"):
            raise ContractViolation(f"unknown case {self.case!r}")

    @property
    def p(self) -> float:
        return (self.beta - self.beta_bar) / self.beta

    @property
    def c_p(self) -> float:
        return 1.0 / (2.0 * (1.0 - self.p))

    @property
    def is_power(self) -> bool:
        """True when ``p = 0``; the profile is then exactly ``r^beta``."""
        return self.p == 0.0

    def to_dict(self) -> dict:
        return {"beta": self.beta, "beta_bar": self.beta_bar, "p": self.p, "c_p": self.c_p,
                "case": self.case, "epsilon": self.epsilon}


def make_aux_params(k: float, sigma: float, epsilon: Optional[float] = None) -> AuxFnParams:
    """Select the profile for gradient degree ``k`` and source exponent ``sigma``.

    ``k = 1`` with ``sigma <= 2`` gives case A, ``beta = 2``,
    ``beta_bar = 2 - epsilon``; ``k > 1`` with ``sigma <= k + 1`` gives the
    pure power ``r^{gamma*}`` (case B); ``sigma > k + 1`` gives case C with
    ``beta_bar = sigma / (sigma - 1)``.

    Raises
    ------
    ContractViolation
        If case A is selected and ``epsilon`` is missing or outside
        ``(0, 1/8)`` for ``sigma = 0``, ``(0, sigma/8)`` otherwise.

    Examples
    --------
    >>> round(make_aux_params(2, 6).p, 12)
    0.2
    """
    if k < 1:
        raise ContractViolation("k must be >= 1")
    if sigma < 0:
        raise ContractViolation("sigma must be >= 0")
    gamma = k + 1.0
    gstar = gamma / k
    if sigma > gamma:
        return AuxFnParams(gstar, sigma / (sigma - 1.0), "C")
    if math.isclose(k, 1.0):
        cap = 1.0 / 8.0 if sigma == 0 else sigma / 8.0
        if epsilon is None or not 0 < epsilon < min(cap, 1.0):
            raise ContractViolation(f"epsilon must lie in (0, {min(cap, 1.0):g}) for sigma={sigma}, "
                                    f"got {epsilon}")
        return AuxFnParams(2.0, 2.0 - epsilon, "A", epsilon)
    return AuxFnParams(gstar, gstar, "B")


@dataclass(frozen=True)
class AuxValues:
    v: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    ratio_rv2_v1: np.ndarray
    ratio_v2_v1sq: np.ndarray
    power_v1k_r: np.ndarray

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class AuxFn:
    """The profile ``v`` for given exponents.

    Parameters
    ----------
    params : AuxFnParams
    epsrel : float
        Relative tolerance of the quadrature for ``v``.

    Notes
    -----
    When ``p = 0`` the profile is taken to be ``r^beta`` itself rather than
    the degenerate integral ``r^beta / 2``.
    """

    params: AuxFnParams
    epsrel: float = field(default=1e-13)

    @property
    def beta(self):
        return self.params.beta

    @property
    def beta_bar(self):
        return self.params.beta_bar

    @property
    def p(self):
        return self.params.p

    def default_k(self) -> float:
        """Gradient degree for which ``beta`` equals ``gamma* = (k + 1) / k``."""
        return 1.0 / (self.beta - 1.0)

    # -- value --------------------------------------------------------------
    def _g(self, y):
        # integrand in y = log(tau)
        return np.exp(y) / (1.0 + np.exp(self.p * y))

    def value(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ContractViolation("r must be >= 0")
        if self.params.is_power:
            return r**self.beta
        out = np.zeros_like(r)
        pos = r > 0
        if np.any(pos):
            Y = self.beta * np.log(r[pos])
            X = np.exp(Y)
            scale = X / (1.0 + X**self.p)
            out[pos] = integrate_scaled(self._g, np.minimum(Y, 0.0) - _LOG_DEPTH, Y, scale, self.epsrel)
        return out

    def increment(self, r, R):
        """``v(r) - v(R)`` computed directly as one integral."""
        r = np.asarray(r, dtype=float)
        if self.params.is_power:
            return r**self.beta - R**self.beta
        if np.any(r <= 0):
            raise ContractViolation("increment needs r > 0")
        a = self.beta * np.log(np.minimum(r, R))
        c = self.beta * np.log(np.maximum(r, R))
        sgn = np.where(r >= R, 1.0, -1.0)
        scale = (np.exp(c) - np.exp(a)) / (1.0 + np.exp(self.p * c))
        scale = np.where(scale > 0, scale, 1.0)
        val = integrate_scaled(self._g, a, c, scale, self.epsrel)
        return np.where(c == a, 0.0, sgn * val)

    # -- derivatives --------------------------------------------------------
    def d1(self, r):
        r = np.asarray(r, dtype=float)
        b = self.beta
        if self.params.is_power:
            return b * r ** (b - 1.0)
        return b * r ** (b - 1.0) / (1.0 + r ** (self.p * b))

    def d2(self, r):
        r = np.asarray(r, dtype=float)
        b, bb = self.beta, self.beta_bar
        with np.errstate(divide="ignore"):
            if self.params.is_power:
                return b * (b - 1.0) * r ** (b - 2.0)
            t = r ** (self.p * b)
            return b * r ** (b - 2.0) * (b - 1.0 + (bb - 1.0) * t) / (1.0 + t) ** 2

    def ratio_rv2_v1(self, r):
        """``r v'' / v'``; its limit ``beta - 1`` is used at ``r = 0``."""
        r = np.asarray(r, dtype=float)
        b, bb = self.beta, self.beta_bar
        if self.params.is_power:
            return np.full_like(r, b - 1.0)
        t = r ** (self.p * b)
        return (b - 1.0 + (bb - 1.0) * t) / (1.0 + t)

    def ratio_v2_v1sq(self, r):
        """``v'' / v'^2`` for ``r > 0``."""
        r = np.asarray(r, dtype=float)
        b, bb = self.beta, self.beta_bar
        with np.errstate(divide="ignore"):
            if self.params.is_power:
                return (b - 1.0) / (b * r**b)
            return (b - 1.0) / (b * r**b) + (bb - 1.0) / (b * r**bb)

    def power_v1k_r(self, r, k: Optional[float] = None):
        """``v'^k / r``; at ``r = 0`` its limit (finite when ``k beta = k + 1``)."""
        k = self.default_k() if k is None else k
        r = np.asarray(r, dtype=float)
        b = self.beta
        expo = k * b - (k + 1.0)
        if abs(expo) < 1e-12:
            expo = 0.0
        with np.errstate(divide="ignore"):
            if self.params.is_power:
                return b**k * r**expo
            return (b / (1.0 + r ** (self.p * b))) ** k * r**expo

    def limits_at_zero(self, k: Optional[float] = None):
        """``(lim v'^k / r, lim r v''/v')`` as ``r -> 0``."""
        return float(self.power_v1k_r(0.0, k)), self.beta - 1.0

    def to_dict(self) -> dict:
        return self.params.to_dict()


def aux_eval(fn: AuxFn, r, k: Optional[float] = None) -> AuxValues:
    """Value, derivatives and the three ratios of ``fn`` at ``r``.

    Ratios at ``r = 0`` are replaced by their limits.

    Examples
    --------
    >>> f = AuxFn(AuxFnParams(2.0, 1.0))
    >>> round(float(aux_eval(f, 1.0).v), 7)
    0.6137056
    """
    r = np.asarray(r, dtype=float)
    return AuxValues(
        v=fn.value(r), v1=fn.d1(r), v2=fn.d2(r), ratio_rv2_v1=fn.ratio_rv2_v1(r),
        ratio_v2_v1sq=fn.ratio_v2_v1sq(r), power_v1k_r=fn.power_v1k_r(r, k),
    )


# ---------------------------------------------------------------------------
# bound checks


def _slack(lhs, rhs):
    """Relative slack of ``lhs <= rhs``; negative means violated."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    den = np.maximum(np.abs(lhs), np.abs(rhs))
    return np.where(den > 0, (rhs - lhs) / np.where(den > 0, den, 1.0), 0.0)


@dataclass
class BoundsReport:
    """Worst slack per predicate.

    ``items`` maps a predicate label to ``{"worst_slack", "passed", "n"}``;
    ``identities`` maps identity labels to their worst relative error.
    """

    params: dict
    R: float
    items: dict = field(default_factory=dict)
    identities: dict = field(default_factory=dict)
    slack_tol: float = 1e-9
    identity_tol: float = 1e-12

    def add(self, label, slack):
        slack = np.atleast_1d(slack)
        worst = float(slack.min()) if slack.size else 0.0
        self.items[label] = {"worst_slack": worst, "passed": worst >= -self.slack_tol,
                             "n": int(slack.size)}

    def add_identity(self, label, err, tol=None):
        tol = self.identity_tol if tol is None else tol
        err = float(np.max(np.atleast_1d(err))) if np.size(err) else 0.0
        self.identities[label] = {"max_rel_error": err, "passed": err <= tol, "tol": tol}

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.items.values()) and all(
            v["passed"] for v in self.identities.values())

    @property
    def worst_slack(self) -> float:
        return min((v["worst_slack"] for v in self.items.values()), default=0.0)

    def to_dict(self) -> dict:
        return {"params": self.params, "R": self.R, "items": self.items,
                "identities": self.identities, "passed": self.passed}


def _ftc_errors(fn: AuxFn, r, which):
    """Relative mismatch of ``f(r_{i+1}) - f(r_i)`` against ``int f'``."""
    r = np.sort(np.asarray(r, dtype=float))
    lo, hi = r[:-1], r[1:]
    if which == "v":
        f, fp = fn.value, fn.d1
        diff = fn.value(hi) - fn.value(lo)
    else:
        f, fp = fn.d1, fn.d2
        diff = fn.d1(hi) - fn.d1(lo)
    scale = np.maximum(np.abs(diff), 1e-300)
    integral = integrate_scaled(fp, lo, hi, scale, 1e-13)
    return np.abs(integral - diff) / np.maximum(np.abs(f(hi)), np.abs(f(lo)))


def aux_bounds_check(fn: AuxFn, r_grid=None, R: float = 2.0, ks=(1.0, 2.0)) -> BoundsReport:
    """Evaluate every inequality and identity of the profile on a grid.

    Parameters
    ----------
    fn : AuxFn
    r_grid : array_like, optional
        Points in ``(0, inf)``; defaults to 64 log-spaced points on ``[1e-3, 1e3]``.
    R : float
        Split point ``> 1`` for the ``[0, R]`` / ``[R, inf)`` bounds.
    ks : sequence of float
        Gradient degrees for the ``v'^k / r`` bound.

    Returns
    -------
    BoundsReport
        For ``p > 0`` the general items (i)-(xi); for the pure power
        (``p = 0``) the specialised forms with exact ratios.
    """
    if R <= 1:
        raise ContractViolation("R must exceed 1")
    r = log_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    if np.any(r <= 0):
        raise ContractViolation("r_grid must lie in (0, inf)")
    b, bb, p, cp = fn.beta, fn.beta_bar, fn.p, fn.params.c_p
    rep = BoundsReport(params=fn.to_dict(), R=R)
    v = fn.value(r)
    v1, v2 = fn.d1(r), fn.d2(r)
    rr = fn.ratio_rv2_v1(r)
    q2 = fn.ratio_v2_v1sq(r)
    inner = r <= R
    outer = r >= R

    if not fn.params.is_power:
        rep.add("(i) 0 < p", np.array([p]))
        rep.add("(i) p < 1", np.array([1.0 - p]))
        rep.add_identity("(ii) (1-p) beta = beta_bar", abs((1 - p) * b - bb) / bb)
        rep.add("(iii) lower", _slack(r[inner] ** b / (1 + R ** (b * p)), v[inner]))
        rep.add("(iii) upper", _slack(v[inner], r[inner] ** b))
        inc = fn.increment(r[outer], R)
        gap = r[outer] ** bb - R**bb
        rep.add("(iv) lower", _slack(cp * gap, inc))
        rep.add("(iv) upper", _slack(inc, 2 * cp * gap))
        rep.add_identity("(v) v' closed form (FTC)", _ftc_errors(fn, r, "v"), 1e-9)
        rep.add("(v) upper", _slack(v1, b * np.minimum(r ** (bb - 1), r ** (b - 1))))
        rep.add("(vi) upper", _slack(r * v1, b * np.minimum(r**bb, r**b)))
        rep.add_identity("(vii) v'' closed form (FTC)", _ftc_errors(fn, r, "v1"), 1e-9)
        rep.add("(vii) v'' > 0", v2)
        for k in ks:
            g = k + 1.0
            lhs = v1**k / r
            rep.add_identity(f"(viii) identity k={k:g}",
                             np.abs(fn.power_v1k_r(r, k) - lhs) / np.maximum(lhs, 1e-300), 1e-12)
            rep.add(f"(viii) upper k={k:g}",
                    _slack(lhs, b**k * np.minimum(r ** (k * b - g), r ** (k * bb - g))))
        rep.add("(ix) lower", _slack(bb - 1.0, rr))
        rep.add("(ix) upper", _slack(rr, b - 1.0))
        direct = v2 / v1**2
        formula = (b - 1) / (b * r**b) + (bb - 1) / (b * r**bb)
        rep.add_identity("(x) identity", np.abs(direct - formula) / np.maximum(1.0, np.abs(formula)))
        big = r >= 1
        rep.add("(xi) lower", _slack((bb - 1) / (b * r[big] ** bb), q2[big]))
        rep.add("(xi) upper", _slack(q2[big], 2 * (b - 1) / (b * r[big] ** bb)))
    else:
        k = fn.default_k()
        g = k + 1.0
        rep.add_identity("(vii) r v' = gamma* r^gamma*", np.abs(r * v1 - b * r**b) / (b * r**b))
        rep.add_identity("(viii) v'^k / r = gamma*^k",
                         np.abs(v1**k / r - b**k) / b**k, 1e-12)
        rep.add_identity("(ix) r v''/v' = 1/k", np.abs(r * v2 / v1 - 1.0 / k) * k)
        direct = v2 / v1**2
        formula = 1.0 / (g * r**b)
        rep.add_identity("(x)/(xi) v''/v'^2 = 1/(gamma r^gamma*)",
                         np.abs(direct - formula) / np.maximum(1.0, formula))
        rep.add("(iii) lower", _slack(r[inner] ** b / 2.0, v[inner]))
        rep.add("(iii) upper", _slack(v[inner], r[inner] ** b))
        inc = fn.increment(r[outer], R)
        gap = r[outer] ** bb - R**bb
        rep.add("(iv) lower", _slack(cp * gap, inc))
        rep.add("(iv) upper", _slack(inc, 2 * cp * gap))
        rep.add("(vii) v'' > 0", v2)
    rep.add("monotone v >= 0", v)
    rep.add("monotone v' >= 0", v1)
    return rep


def remark_forms_check(fn: AuxFn, sigma: Optional[float] = None, r_grid=None, R: float = 2.0) -> BoundsReport:
    """The case-specialised displays for cases A and C, evaluated literally.

    These are reported for information: some displayed upper bounds are
    weaker statements than the general items and do not hold for large
    ``r`` (see the decisions ledger).
    """
    r = log_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    b, bb, cp = fn.beta, fn.beta_bar, fn.params.c_p
    rep = BoundsReport(params=fn.to_dict(), R=R)
    v, v1 = fn.value(r), fn.d1(r)
    rr, q2 = fn.ratio_rv2_v1(r), fn.ratio_v2_v1sq(r)
    big = r > 1
    outer = r >= R
    inc = fn.increment(r[outer], R)
    gap = r[outer] ** bb - R**bb
    mn = np.minimum(r**bb, r**b)
    if fn.params.case == "A":
        eps = fn.params.epsilon
        rep.add("A(iii) lower", _slack(mn / 2, v))
        rep.add("A(iii) upper", _slack(v, mn))
        rep.add("A(iv) lower", _slack(gap / 2, inc))
        rep.add("A(iv) upper", _slack(inc, 2 * gap))
        rep.add("A(vi) lower", _slack(mn, r * v1))
        rep.add("A(vi) upper", _slack(r * v1, 2 * mn))
        rep.add("A(viii) upper", _slack(v1 / r, 2 * np.minimum(1.0, r**-eps)))
        rep.add("A(ix) lower", _slack(1 - eps, rr))
        rep.add("A(ix) upper", _slack(rr, 1.0))
        rep.add("A(xi) lower", _slack((1 - eps) / (2 * r[big] ** (2 - eps)), q2[big]))
        rep.add("A(xi) upper", _slack(q2[big], 1 / r[big] ** (2 - eps)))
    elif fn.params.case == "C":
        if sigma is None:
            sigma = bb / (bb - 1.0)
        k = fn.default_k()
        rep.add("C(iii) lower", _slack(mn / 2, v))
        rep.add("C(iii) upper", _slack(v, mn))
        rep.add("C(iv) lower", _slack(cp * gap, inc))
        rep.add("C(iv) upper", _slack(inc, 2 * cp * gap))
        rep.add("C(vii) lower", _slack(b * mn / 2, r * v1))
        rep.add("C(vii) upper", _slack(r * v1, b * mn))
        g = k + 1
        low = (b / 2) ** k * np.minimum(1.0, r ** (-(sigma - g) / (sigma - 1)))
        up = b**k * np.minimum(1.0, r ** (-(sigma - g) / (sigma - 1)))
        rep.add("C(viii) lower", _slack(low, v1**k / r))
        rep.add("C(viii) upper", _slack(v1**k / r, up))
        rep.add("C(ix) lower", _slack(1 / sigma, rr))
        rep.add("C(ix) upper", _slack(rr, b - 1))
        rep.add("C(xi) lower", _slack(1 / (b * sigma * r[big] ** bb), q2[big]))
        rep.add("C(xi) upper", _slack(q2[big], 2 / r[big] ** bb))
    return rep
