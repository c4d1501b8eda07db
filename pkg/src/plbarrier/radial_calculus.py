"""Residual of the transformed equation on radial profiles.

For ``w(x, t) = m + s (a t + b kappa(t) u(|x|))`` with ``s = +1`` (growth
form) or ``s = -1`` (sign-flipped form) the residual

    H(Dw, D^2 w + Z(w) Dw Dw^T) + chi(t) |Dw|^sigma - w_t

is evaluated either by assembling ``Dw = w_r e`` and
``D^2 w = w_rr e e^T + (w_r / r)(I - e e^T)`` directly, or through one of
the factored forms that pull out the gradient degree:

``small_r``
    ``(k u')^k / r * H(e, I + (r u''/u' - 1 + k r u' Z) e e^T)`` with ``k = b kappa``.
``large_r``
    ``(k u')^gamma * H(e, (I - e e^T)/(k r u') + (u''/(k u'^2) + Z) e e^T)``.
``factored_b``
    the same with ``b`` pulled out: ``b^k (kappa u')^gamma H(e, ... + b Z e e^T)``.
``negative_slope`` / ``negative_slope_large``
    the two forms for ``w_r <= 0``.
``r0_limit``
    the limit at ``r = 0``, which needs ``lim u'^k / r`` and ``lim r u''/u'``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .operators import OperatorDescriptor, eval_operator

__all__ = [
    "Kappa",
    "RadialProfile",
    "PointResidual",
    "MODES",
    "residual_at",
    "residual_field",
    "profile_values",
    "profile_grid",
    "radial_hessian",
    "zero_limit_factor",
]

MODES = ("direct", "small_r", "large_r", "factored_b", "negative_slope",
         "negative_slope_large", "r0_limit")
_POSITIVE = ("small_r", "large_r", "factored_b")
_NEGATIVE = ("negative_slope", "negative_slope_large")


@dataclass(frozen=True)
class Kappa:
    """Affine time factor ``kappa(t) = c0 + c1 t``."""

    c0: float = 1.0
    c1: float = 1.0

    def __call__(self, t):
        return self.c0 + self.c1 * np.asarray(t, dtype=float)

    def dot(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.c1)


@dataclass(frozen=True)
class RadialProfile:
    """``w(r, t) = m + sign * (a t + b kappa(t) u(r))``.

    ``aux`` must provide ``value``, ``d1``, ``d2`` (vectorised in ``r``)
    and ``limits_at_zero(k)``; ``u`` is nonnegative and nondecreasing with
    ``u(0) = 0``.
    """

    m: float
    a: float
    b: float
    aux: object = field(repr=False)
    kappa: Kappa = field(default_factory=Kappa)
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ContractViolation("sign must be +1 or -1")
        if self.b <= 0:
            raise ContractViolation("b must be positive")

    def scale(self, t):
        """``b kappa(t)``."""
        return self.b * self.kappa(t)

    def __call__(self, r, t):
        return profile_values(self, r, t)[0]


def profile_values(profile: RadialProfile, r, t):
    """``(w, w_r, w_rr, w_t)`` broadcast over ``r`` and ``t``."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    s = profile.sign
    u, u1, u2 = profile.aux.value(r), profile.aux.d1(r), profile.aux.d2(r)
    kt = profile.scale(t)
    w = profile.m + s * (profile.a * t + kt * u)
    w_t = s * (profile.a + profile.b * profile.kappa.dot(t) * u)
    return w, s * kt * u1, s * kt * u2, w_t


def profile_grid(profile: RadialProfile, r, t):
    """:func:`profile_values` on the tensor grid ``r x t``, evaluating ``u`` once per ``r``."""
    r = np.asarray(r, dtype=float)[:, None]
    t = np.asarray(t, dtype=float)[None, :]
    s = profile.sign
    u, u1, u2 = profile.aux.value(r[:, 0]), profile.aux.d1(r[:, 0]), profile.aux.d2(r[:, 0])
    u, u1, u2 = u[:, None], u1[:, None], u2[:, None]
    kt = profile.scale(t)
    w = profile.m + s * (profile.a * t + kt * u)
    w_t = s * (profile.a + profile.b * profile.kappa.dot(t) * u)
    return w, s * kt * u1, s * kt * u2, w_t


def radial_hessian(n: int, r, w_r, w_rr, e=None):
    """``D^2 w`` for a radial function, shape ``(..., n, n)``."""
    r, w_r, w_rr = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, w_r, w_rr)))
    if e is None:
        e = np.zeros(n)
        e[0] = 1.0
    e = np.asarray(e, dtype=float)
    ee = np.einsum("...i,...j->...ij", e, e)
    eye = np.eye(n)
    return w_rr[..., None, None] * ee + (w_r / r)[..., None, None] * (eye - ee)


def _axis(n):
    e = np.zeros(n)
    e[0] = 1.0
    return e


def _rank_one(n, c_I, c_ee, e=None):
    e = _axis(n) if e is None else np.asarray(e, dtype=float)
    c_I = np.asarray(c_I, dtype=float)
    c_ee = np.asarray(c_ee, dtype=float)
    return c_I[..., None, None] * np.eye(n) + c_ee[..., None, None] * np.outer(e, e)


@dataclass
class PointResidual:
    r: float
    t: float
    value: float
    mode: str
    parts: dict = field(default_factory=dict)


def zero_limit_factor(profile: RadialProfile, k: float):
    """``(lim u'^k / r, lim r u''/u')`` of the profile at ``r = 0``."""
    lk, lr = profile.aux.limits_at_zero(k)
    return float(lk), float(lr)


def residual_at(desc: OperatorDescriptor, Z, chi, sigma: float, profile: RadialProfile,
                r: float, t: float, mode: str = "direct", e=None,
                grad_reg: float = 0.0) -> PointResidual:
    """Residual of the profile at one point.

    Parameters
    ----------
    desc : OperatorDescriptor
    Z, chi : callable
        ``Z(w)`` and ``chi(t)``.
    sigma : float
    profile : RadialProfile
    r, t : float
    mode : str
        One of :data:`MODES`.
    e : array_like, optional
        Unit direction ``x / |x|`` for ``direct`` mode; the factored modes
        always use the first axis.

    Returns
    -------
    PointResidual

    Raises
    ------
    ContractViolation
        On an unknown mode, ``r = 0`` outside ``r0_limit``, ``r > 0`` with
        ``r0_limit``, or a slope sign that does not match the mode.
    """
    if mode not in MODES:
        raise ContractViolation(f"unknown mode {mode!r}")
    if r < 0:
        raise ContractViolation("r must be >= 0")
    if (mode == "r0_limit") != (r == 0):
        raise ContractViolation(f"mode {mode!r} is not defined at r = {r}")
    if mode in _POSITIVE and profile.sign != 1:
        raise ContractViolation(f"mode {mode!r} needs a nondecreasing profile")
    if mode in _NEGATIVE and profile.sign != -1:
        raise ContractViolation(f"mode {mode!r} needs a nonincreasing profile")
    n = desc.dim
    k = desc.homogeneity.k
    chi_t = float(chi(t))
    kt = float(profile.scale(t))
    s = profile.sign

    if mode == "r0_limit":
        lk, lr = zero_limit_factor(profile, k)
        if s == 1:
            inner = eval_operator(desc, _axis(n), _rank_one(n, 1.0, lr - 1.0), grad_reg)
        else:
            inner = eval_operator(desc, _axis(n), _rank_one(n, -1.0, 1.0 - lr), grad_reg)
        Hval = 0.0 if lk == 0.0 or kt == 0.0 else kt**k * lk * inner
        src = chi_t * (1.0 if sigma == 0 else 0.0)
        w_t = s * profile.a
        return PointResidual(0.0, t, Hval + src - w_t, mode,
                             {"H": Hval, "source": src, "w_t": w_t, "lim_v1k_r": lk,
                              "lim_rv2_v1": lr})

    w, w_r, w_rr, w_t = (float(x) for x in profile_values(profile, r, t))
    zw = float(Z(w))
    if mode == "direct":
        e_ = _axis(n) if e is None else np.asarray(e, dtype=float)
        X = radial_hessian(n, r, w_r, w_rr, e_) + zw * w_r**2 * np.outer(e_, e_)
        Hval = eval_operator(desc, w_r * e_, X, grad_reg)
    else:
        u1 = float(profile.aux.d1(r))
        u2 = float(profile.aux.d2(r))
        Hval = float(_factored_H(desc, mode, profile.b, kt, u1, u2, r, zw, w_r, w_rr, grad_reg))
    src = chi_t * abs(w_r) ** sigma
    return PointResidual(r, t, Hval + src - w_t, mode, {"H": Hval, "source": src, "w_t": w_t})


def _factored_H(desc, mode, b, kt, u1, u2, r, zw, w_r, w_rr, grad_reg):
    """``H`` through one of the factored forms, broadcast over the inputs."""
    n = desc.dim
    k, gamma = desc.homogeneity.k, desc.homogeneity.gamma
    e = _axis(n)
    kt, u1, u2, r, zw, w_r, w_rr = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (kt, u1, u2, r, zw, w_r, w_rr)))
    ones = np.ones_like(r)
    qe = np.broadcast_to(e, r.shape + (n,))
    with np.errstate(divide="ignore", invalid="ignore"):
        if mode == "small_r":
            c = r * u2 / u1 - 1.0 + kt * r * u1 * zw
            out = (kt * u1) ** k / r * eval_operator(desc, qe, _rank_one(n, ones, c), grad_reg)
        elif mode == "large_r":
            g = kt * u1
            X = _rank_one(n, 1.0 / (g * r), -1.0 / (g * r) + u2 / (kt * u1**2) + zw)
            out = g**gamma * eval_operator(desc, qe, X, grad_reg)
        elif mode == "factored_b":
            kap = kt / b
            g = kap * u1
            X = _rank_one(n, 1.0 / (g * r), -1.0 / (g * r) + u2 / (kap * u1**2) + b * zw)
            out = b**k * g**gamma * eval_operator(desc, qe, X, grad_reg)
        elif mode == "negative_slope":
            aw = np.abs(w_r)
            c = r * aw * zw + 1.0 + r * w_rr / aw
            out = aw**k / r * eval_operator(desc, -qe, _rank_one(n, -ones, c), grad_reg)
        elif mode == "negative_slope_large":
            aw = np.abs(w_r)
            X = _rank_one(n, 1.0 / (r * w_r), -1.0 / (r * w_r) + w_rr / w_r**2 + zw)
            out = aw**gamma * eval_operator(desc, -qe, X, grad_reg)
        else:
            raise ContractViolation(f"mode {mode!r} has no factored form")
    return np.where(kt * u1 == 0.0, 0.0, out)


def residual_field(desc: OperatorDescriptor, Z, chi, sigma: float, profile: RadialProfile,
                   r, t, grad_reg: float = 0.0, mode: str = "direct") -> np.ndarray:
    """Residual on the tensor grid ``r x t`` (shape ``(len(r), len(t))``).

    Nodes with ``r > 0`` use ``mode`` (any of :data:`MODES` except
    ``r0_limit``, with the same sign contracts as :func:`residual_at`);
    ``r = 0`` uses the limit.
    """
    if mode not in MODES or mode == "r0_limit":
        raise ContractViolation(f"residual_field does not support mode {mode!r}")
    if mode in _POSITIVE and profile.sign != 1 or mode in _NEGATIVE and profile.sign != -1:
        raise ContractViolation(f"mode {mode!r} does not match the profile sign")
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(r < 0):
        raise ContractViolation("r must be >= 0")
    n = desc.dim
    out = np.empty((r.size, t.size))
    pos = r > 0
    if np.any(pos):
        w, w_r, w_rr, w_t = profile_grid(profile, r[pos], t)
        R_, T_ = np.meshgrid(r[pos], t, indexing="ij")
        zw = Z(w)
        if mode == "direct":
            e = _axis(n)
            X = radial_hessian(n, R_, w_r, w_rr, e) + (zw * w_r**2)[..., None, None] * np.outer(e, e)
            Hval = eval_operator(desc, w_r[..., None] * e, X, grad_reg)
        else:
            kt = profile.scale(T_)
            u1 = profile.aux.d1(r[pos])[:, None]
            u2 = profile.aux.d2(r[pos])[:, None]
            Hval = _factored_H(desc, mode, profile.b, kt, u1, u2, R_, zw, w_r, w_rr, grad_reg)
        out[pos] = Hval + chi(T_) * np.abs(w_r) ** sigma - w_t
    for i in np.flatnonzero(~pos):
        for j, tj in enumerate(t):
            out[i, j] = residual_at(desc, Z, chi, sigma, profile, 0.0, float(tj), "r0_limit",
                                    grad_reg=grad_reg).value
    return out
