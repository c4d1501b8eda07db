"""Degenerate elliptic operators ``H(q, X)`` and their sphere envelopes.

Every built-in operator is evaluated in closed algebraic form and
accepts batched input: ``q`` of shape ``(..., n)`` and ``X`` of shape
``(..., n, n)``.  The envelope constants consumed by the barrier
formulas are extrema over unit vectors ``e`` of ``H(e, c_I I + c_ee e e^T)``;
they are computed in closed form where one is known and by low-discrepancy
sphere sampling plus local refinement otherwise.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, stats
from scipy.stats import qmc

from .errors import ConditionCFailure, ContractViolation, UndefinedAtZeroGradient

__all__ = [
    "OperatorDescriptor",
    "HomogeneityProfile",
    "EnvelopeReport",
    "ConditionReport",
    "OPERATOR_NAMES",
    "make_operator",
    "laplacian",
    "eval_operator",
    "sphere_points",
    "envelope_extremum",
    "spectral_envelopes",
    "check_structure_conditions",
    "lambda_search_grid",
]


@dataclass(frozen=True)
class HomogeneityProfile:
    """Degree bookkeeping derived from the gradient degree ``k1``."""

    k1: float

    @property
    def k(self) -> float:
        return self.k1 + 1.0

    @property
    def gamma(self) -> float:
        return self.k1 + 2.0

    @property
    def gamma_star(self) -> float:
        return self.gamma / self.k

    @property
    def is_k_one(self) -> bool:
        return math.isclose(self.k1, 0.0, abs_tol=1e-12)


@dataclass(frozen=True, eq=False)
class OperatorDescriptor:
    """An operator ``H(q, X)`` together with its structural data.

    Parameters
    ----------
    name : str
        Registry name.
    dim : int
        Space dimension ``n >= 2``.
    k1 : float
        Degree of homogeneity in ``q``.
    evaluate : callable
        ``evaluate(q, X, grad_reg)`` on batched arrays.
    closed_extremum : callable, optional
        ``closed_extremum(c_I, c_ee, kind)`` returning the exact min or max
        over unit ``e`` of ``H(e, c_I I + c_ee e e^T)``.
    params : tuple of (str, float)
        Parameters the operator was built with.
    rotation_invariant : bool
        Whether ``H(Qq, Q X Q^T) = H(q, X)`` for orthogonal ``Q``; the
        radial solver requires it.
    zero_gradient_defined : bool
        False if ``H`` has no limit at ``q = 0``.

    Notes
    -----
    Instances compare and hash by identity so they can key caches.
    """

    name: str
    dim: int
    k1: float
    evaluate: Callable = field(repr=False)
    closed_extremum: Optional[Callable] = field(default=None, repr=False)
    params: tuple = ()
    rotation_invariant: bool = True
    zero_gradient_defined: bool = True

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ContractViolation(f"dim must be an integer >= 2, got {self.dim}")
        if self.k1 < 0:
            raise ContractViolation(f"k1 must be >= 0, got {self.k1}")

    @property
    def homogeneity(self) -> HomogeneityProfile:
        return HomogeneityProfile(float(self.k1))

    @property
    def closed_envelopes(self) -> Optional[Callable]:
        """Map ``lam -> (Lambda_min(lam), Lambda_max(lam))`` when known exactly."""
        if self.closed_extremum is None:
            return None
        ce = self.closed_extremum
        return lambda lam: (ce(-1.0, lam, "min"), ce(1.0, lam, "max"))

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    def __call__(self, q, X, grad_reg: float = 0.0):
        return eval_operator(self, q, X, grad_reg=grad_reg)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dim": int(self.dim),
            "k1": float(self.k1),
            "params": {k: float(v) for k, v in self.params},
        }


# ---------------------------------------------------------------------------
# closed-form evaluators


def _trace(X):
    return np.trace(X, axis1=-2, axis2=-1)


def _quad(X, q):
    return np.einsum("...i,...ij,...j->...", q, X, q)


def _p_laplacian(p):
    def evaluate(q, X, grad_reg=0.0):
        norm2 = np.sum(q * q, axis=-1)
        if p == 2.0:
            return _trace(X)
        s2 = norm2 + grad_reg**2
        safe = np.where(s2 > 0, s2, 1.0)
        val = safe ** ((p - 2.0) / 2.0) * (_trace(X) + (p - 2.0) * _quad(X, q) / safe)
        # |q|^(p-2) -> 0 at the origin for p > 2
        return np.where(s2 > 0, val, 0.0)

    return evaluate


def _pseudo_p_laplacian(p):
    def evaluate(q, X, grad_reg=0.0):
        diag = np.diagonal(X, axis1=-2, axis2=-1)
        if p == 2.0:
            return np.sum(diag, axis=-1)
        w = (q * q + grad_reg**2) ** ((p - 2.0) / 2.0)
        return (p - 1.0) * np.sum(w * diag, axis=-1)

    return evaluate


def _infinity_laplacian(q, X, grad_reg=0.0):
    return _quad(X, q)


def _pucci(lower, upper, kind):
    def evaluate(q, X, grad_reg=0.0):
        ev = np.linalg.eigvalsh(X)
        pos = np.sum(np.where(ev > 0, ev, 0.0), axis=-1)
        neg = np.sum(np.where(ev < 0, ev, 0.0), axis=-1)
        if kind == "min":
            return lower * pos + upper * neg
        return upper * pos + lower * neg

    return evaluate


def _quasilinear(power):
    def evaluate(q, X, grad_reg=0.0):
        norm2 = np.sum(q * q, axis=-1)
        pref = (norm2 + grad_reg**2) ** (power / 2.0) if power else 1.0
        return pref * (norm2 * _trace(X) - _quad(X, q))

    return evaluate


def _det(q, X, grad_reg=0.0):
    return np.linalg.det(X)


# closed-form extrema of H(e, c_I I + c_ee e e^T) over |e| = 1


def _pick(kind, lo, hi):
    return lo if kind == "min" else hi


def _closed_p_laplacian(n, p):
    def ext(c_I, c_ee, kind):
        return c_I * (n + p - 2.0) + c_ee * (p - 1.0)

    return ext


def _closed_pseudo(n, p):
    if p == 2.0:
        return lambda c_I, c_ee, kind: c_I * n + c_ee
    if p != 4.0:
        return None

    # sum |e_i|^2 = 1 and sum e_i^4 ranges over [1/n, 1]
    def ext(c_I, c_ee, kind):
        a = 3.0 * (c_I + c_ee / n)
        b = 3.0 * (c_I + c_ee)
        return _pick(kind, min(a, b), max(a, b))

    return ext


def _closed_inf(c_I, c_ee, kind):
    return c_I + c_ee


def _closed_pucci(n, lower, upper, kind_op):
    def ext(c_I, c_ee, kind):
        ev = np.array([c_I] * (n - 1) + [c_I + c_ee])
        return float(_pucci(lower, upper, kind_op)(None, np.diag(ev)))

    return ext


def _closed_quasilinear(n):
    return lambda c_I, c_ee, kind: c_I * (n - 1.0)


def _closed_det(n):
    return lambda c_I, c_ee, kind: c_I ** (n - 1) * (c_I + c_ee)


OPERATOR_NAMES = (
    "p_laplacian",
    "pseudo_p_laplacian",
    "infinity_laplacian",
    "pucci_min",
    "pucci_max",
    "quasilinear_remark320",
    "det",
)


def make_operator(name: str, n: int = 2, **params) -> OperatorDescriptor:
    """Build a named operator.

    Parameters
    ----------
    name : str
        One of :data:`OPERATOR_NAMES`, or ``"laplacian"`` for the 2-Laplacian.
    n : int
        Dimension.
    **params
        ``p`` for the p-Laplacians, ``lower``/``upper`` for Pucci (default
        ``(1, 2)``), ``prefactor_power`` for the quasilinear operator.

    Returns
    -------
    OperatorDescriptor

    Examples
    --------
    >>> H = make_operator("p_laplacian", n=2, p=3)
    >>> H.k1
    1.0
    """
    n = int(n)
    if name == "laplacian":
        name, params = "p_laplacian", {"p": 2.0, **params}
    if name == "p_laplacian":
        p = float(params.pop("p", 2.0))
        if p < 2:
            raise ContractViolation("p_laplacian needs p >= 2 (nonnegative gradient degree)")
        desc = OperatorDescriptor(name, n, p - 2.0, _p_laplacian(p), _closed_p_laplacian(n, p),
                                  (("p", p),))
    elif name == "pseudo_p_laplacian":
        p = float(params.pop("p", 4.0))
        if p < 2:
            raise ContractViolation("pseudo_p_laplacian needs p >= 2")
        desc = OperatorDescriptor(name, n, p - 2.0, _pseudo_p_laplacian(p), _closed_pseudo(n, p),
                                  (("p", p),), rotation_invariant=(p == 2.0))
    elif name == "infinity_laplacian":
        desc = OperatorDescriptor(name, n, 2.0, _infinity_laplacian, _closed_inf)
    elif name in ("pucci_min", "pucci_max"):
        lower = float(params.pop("lower", 1.0))
        upper = float(params.pop("upper", 2.0))
        if not 0 < lower <= upper:
            raise ContractViolation("Pucci bounds need 0 < lower <= upper")
        kind = name.split("_")[1]
        desc = OperatorDescriptor(name, n, 0.0, _pucci(lower, upper, kind),
                                  _closed_pucci(n, lower, upper, kind),
                                  (("lower", lower), ("upper", upper)))
    elif name == "quasilinear_remark320":
        power = float(params.pop("prefactor_power", 0.0))
        # the bracket is quadratic in q, so the gradient degree is power + 2
        desc = OperatorDescriptor(name, n, power + 2.0, _quasilinear(power), _closed_quasilinear(n),
                                  (("prefactor_power", power),))
    elif name == "det":
        desc = OperatorDescriptor(name, n, 0.0, _det, _closed_det(n))
    else:
        raise ContractViolation(f"unknown operator {name!r}; choose from {OPERATOR_NAMES}")
    if params:
        raise ContractViolation(f"unexpected parameters for {name}: {sorted(params)}")
    return desc


def laplacian(n: int = 2) -> OperatorDescriptor:
    """The Laplacian, i.e. the 2-Laplacian."""
    return make_operator("p_laplacian", n=n, p=2.0)


def eval_operator(desc: OperatorDescriptor, q, X, grad_reg: float = 0.0):
    """Evaluate ``H(q, X)``.

    Parameters
    ----------
    desc : OperatorDescriptor
    q : array_like, shape (..., n)
    X : array_like, shape (..., n, n)
        Symmetric matrices.
    grad_reg : float
        Replaces ``|q|`` by ``sqrt(|q|^2 + grad_reg^2)`` in degenerate factors.

    Returns
    -------
    float or ndarray
    """
    q = np.asarray(q, dtype=float)
    X = np.asarray(X, dtype=float)
    n = desc.dim
    if q.shape[-1:] != (n,) or X.shape[-2:] != (n, n):
        raise ContractViolation(f"{desc.name}: expected q (..., {n}) and X (..., {n}, {n}), "
                                f"got {q.shape} and {X.shape}")
    if not desc.zero_gradient_defined and grad_reg == 0.0 and np.any(np.sum(q * q, axis=-1) == 0):
        raise UndefinedAtZeroGradient(f"{desc.name} has no limit at q = 0")
    out = desc.evaluate(q, X, grad_reg)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# sphere envelopes


@functools.lru_cache(maxsize=64)
def sphere_points(n: int, budget: int, seed: int) -> np.ndarray:
    """Scrambled Sobol points pushed to the unit sphere ``S^{n-1}``.

    At least ``budget`` points are returned (rounded up to a power of two).
    """
    m = max(1, int(math.ceil(math.log2(max(budget, 2)))))
    u = qmc.Sobol(d=n, scramble=True, seed=seed).random_base2(m)
    g = stats.norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g.setflags(write=False)
    return g


def _rank_one_family(e, c_I, c_ee):
    n = e.shape[-1]
    return c_I * np.eye(n) + c_ee * np.einsum("...i,...j->...ij", e, e)


def _sampled_values(desc, pts, c_I, c_ee):
    return np.asarray(desc.evaluate(pts, _rank_one_family(pts, c_I, c_ee), 0.0), dtype=float)


def envelope_extremum(desc: OperatorDescriptor, c_I: float, c_ee: float, kind: str = "min",
                      budget: int = 4096, seed: int = 0, refine: bool = True,
                      n_refine: int = 8) -> float:
    """Sampled extremum over unit ``e`` of ``H(e, c_I I + c_ee e e^T)``.

    The best ``n_refine`` sample points are polished with BFGS on the
    normalised vector ``x / |x|``.
    """
    if kind not in ("min", "max"):
        raise ContractViolation("kind must be 'min' or 'max'")
    sgn = 1.0 if kind == "min" else -1.0
    pts = sphere_points(desc.dim, budget, seed)
    vals = sgn * _sampled_values(desc, pts, c_I, c_ee)
    best = float(vals.min())
    if refine:
        def obj(x):
            e = x / np.linalg.norm(x)
            return sgn * float(desc.evaluate(e, _rank_one_family(e, c_I, c_ee), 0.0))

        for i in np.argsort(vals)[:n_refine]:
            # at a flat extremum the line search can stall; the sample value still bounds it
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                res = optimize.minimize(obj, pts[i], method="BFGS", options={"gtol": 1e-12})
            best = min(best, float(res.fun))
    return sgn * best


def lambda_search_grid(num: int = 161) -> np.ndarray:
    """Geometric grid from ``1 + 2**-6`` to ``2**10`` used to locate ``lambda0``."""
    return np.geomspace(1.0 + 2.0**-6, 2.0**10, num)


@dataclass
class EnvelopeReport:
    """Envelope constants of one operator for given ``L = sup Z`` and horizon ``T``.

    Attributes
    ----------
    lambda0 : float
        First grid ``lam > 1`` with ``min_e H(e, lam e e^T - I) > 0``.
    K0 : float
        ``Lambda_min(lambda0) / lambda0``.
    script_H : float
        ``min_e H(e, e e^T)``.
    N : float
        ``min_e H(e, -I)``.
    M_bar : float
        ``max_e H(e, (2 + L) I)``.
    M11 : float
        ``max_e H(e, I + (1 + T) L gamma_star e e^T)``.
    S : float
        ``min_e H(e, -2 (I + e e^T))``.
    closed, sampled : dict
        Both sources when a closed form exists; the reported scalars use
        the closed form when present.
    """

    operator: str
    dim: int
    k1: float
    L: float
    T: float
    lambda0: float
    K0: float
    script_H: float
    N: float
    M_bar: float
    M11: float
    S: float
    lambda_grid: list = field(default_factory=list, repr=False)
    Lambda_min_grid: list = field(default_factory=list, repr=False)
    Lambda_max_grid: list = field(default_factory=list, repr=False)
    closed: dict = field(default_factory=dict, repr=False)
    sampled: dict = field(default_factory=dict, repr=False)
    _extremum: Optional[Callable] = field(default=None, repr=False, compare=False)

    def extremum(self, c_I, c_ee, kind):
        return self._extremum(c_I, c_ee, kind)

    def Lambda_min_at(self, lam: float) -> float:
        return self._extremum(-1.0, lam, "min")

    def Lambda_max_at(self, lam: float) -> float:
        return self._extremum(1.0, lam, "max")

    def script_H_at(self, lam: float) -> float:
        """``min_e H(e, e e^T - I / lam)``, equal to ``Lambda_min(lam) / lam``."""
        return self._extremum(-1.0 / lam, 1.0, "min")

    def M_at(self, b: float, r: float) -> float:
        """``M(b, r) = max_e H(e, I + b (1 + T) L gamma_star r^gamma_star e e^T)``."""
        gs = HomogeneityProfile(self.k1).gamma_star
        return self._extremum(1.0, b * (1.0 + self.T) * self.L * gs * r**gs, "max")

    def to_dict(self) -> dict:
        keys = ("operator", "dim", "k1", "L", "T", "lambda0", "K0", "script_H", "N",
                "M_bar", "M11", "S")
        out = {k: getattr(self, k) for k in keys}
        out["closed"] = dict(self.closed)
        out["sampled"] = dict(self.sampled)
        return out


def _make_extremum(desc, budget, seed):
    if desc.closed_extremum is not None:
        return lambda c_I, c_ee, kind: float(desc.closed_extremum(c_I, c_ee, kind))
    return lambda c_I, c_ee, kind: envelope_extremum(desc, c_I, c_ee, kind, budget, seed)


def _find_lambda0(desc, ext, budget, seed):
    grid = lambda_search_grid()
    if desc.closed_extremum is not None:
        mins = np.array([ext(-1.0, lam, "min") for lam in grid])
    else:
        pts = sphere_points(desc.dim, budget, seed)
        mins = np.array([_sampled_values(desc, pts, -1.0, lam).min() for lam in grid])
    for lam, m in zip(grid, mins):
        if m > 0 and ext(-1.0, lam, "min") > 0:
            return float(lam), grid, mins
    return None, grid, mins


def spectral_envelopes(desc: OperatorDescriptor, L: float = 1.0, T: float = 1.0,
                       sphere_budget: int = 4096, seed: int = 0) -> EnvelopeReport:
    """All envelope constants the barrier constructions consume.

    Parameters
    ----------
    desc : OperatorDescriptor
    L : float
        Upper bound of the coefficient ``Z``.
    T : float
        Time horizon.
    sphere_budget : int
        Number of sphere samples (at least 1000).
    seed : int

    Returns
    -------
    EnvelopeReport

    Raises
    ------
    ConditionCFailure
        If no grid ``lam`` yields a positive lower envelope. The partially
        filled report is attached as ``exc.partial``.
    """
    if sphere_budget < 1000:
        raise ContractViolation("sphere_budget must be >= 1000")
    return _spectral_envelopes_cached(desc, float(L), float(T), int(sphere_budget), int(seed))


@functools.lru_cache(maxsize=256)
def _spectral_envelopes_cached(desc, L, T, budget, seed):
    gs = desc.homogeneity.gamma_star
    ext = _make_extremum(desc, budget, seed)
    specs = {
        "script_H": (0.0, 1.0, "min"),
        "N": (-1.0, 0.0, "min"),
        "M_bar": (2.0 + L, 0.0, "max"),
        "M11": (1.0, (1.0 + T) * L * gs, "max"),
        "S": (-2.0, -2.0, "min"),
    }
    sampled = {k: envelope_extremum(desc, *v, budget=budget, seed=seed) for k, v in specs.items()}
    closed = {}
    if desc.closed_extremum is not None:
        closed = {k: float(desc.closed_extremum(*v)) for k, v in specs.items()}
    vals = closed if closed else sampled
    lam0, grid, mins = _find_lambda0(desc, ext, budget, seed)
    maxs = [ext(1.0, lam, "max") for lam in grid[::10]]
    report = EnvelopeReport(
        operator=desc.name, dim=desc.dim, k1=float(desc.k1), L=L, T=T,
        lambda0=float("nan") if lam0 is None else lam0,
        K0=float("nan") if lam0 is None else ext(-1.0, lam0, "min") / lam0,
        script_H=vals["script_H"], N=vals["N"], M_bar=vals["M_bar"], M11=vals["M11"], S=vals["S"],
        lambda_grid=[float(x) for x in grid], Lambda_min_grid=[float(x) for x in mins],
        Lambda_max_grid=[float(x) for x in maxs], closed=closed, sampled=sampled, _extremum=ext,
    )
    if lam0 is None:
        exc = ConditionCFailure(f"{desc.name}: min_e H(e, lam e e^T - I) <= 0 for every tested lam "
                                f"in [{grid[0]:.4g}, {grid[-1]:.4g}]")
        exc.partial = report
        raise exc
    if closed:
        report.sampled["lambda0_Lambda_min"] = envelope_extremum(desc, -1.0, lam0, "min", budget, seed)
        report.closed["lambda0_Lambda_min"] = ext(-1.0, lam0, "min")
    return report


# ---------------------------------------------------------------------------
# structure conditions


@dataclass
class ConditionReport:
    """Outcome of randomized checks of monotonicity, homogeneity and Condition C."""

    operator: str
    passes_A: bool
    passes_B: bool
    passes_C: bool
    k1_estimate: float
    worst_monotone: float
    worst_zero: float
    worst_homog_q: float
    worst_homog_X: float
    script_H: float
    Lambda_max_samples: dict
    envelope: Optional[dict] = None
    message: str = ""

    @property
    def passes(self) -> bool:
        return self.passes_A and self.passes_B and self.passes_C

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passes"] = self.passes
        return d


def _random_sym(rng, m, n):
    A = rng.standard_normal((m, n, n))
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def check_structure_conditions(desc: OperatorDescriptor, sample_budget: int = 1000,
                               seed: int = 0, L: float = 1.0, T: float = 1.0,
                               sphere_budget: int = 4096) -> ConditionReport:
    """Randomized verification of monotonicity, homogeneity and Condition C.

    Failures are reported, never raised.
    """
    rng = np.random.default_rng(seed)
    m, n = int(sample_budget), desc.dim
    q = rng.standard_normal((m, n))
    X = _random_sym(rng, m, n)
    B = rng.standard_normal((m, n, n))
    P = B @ np.swapaxes(B, -1, -2)
    hX = desc.evaluate(q, X, 0.0)
    hXP = desc.evaluate(q, X + P, 0.0)
    scale = np.maximum(1.0, np.abs(hX))
    worst_mono = float(np.max((hX - hXP) / scale))
    worst_zero = float(np.max(np.abs(desc.evaluate(q, np.zeros_like(X), 0.0))))

    worst_q, ratios = 0.0, []
    for th in (-2.0, -0.5, 0.5, 3.0):
        hq = desc.evaluate(th * q, X, 0.0)
        err = np.abs(hq - abs(th) ** desc.k1 * hX) / (1.0 + np.abs(hX))
        worst_q = max(worst_q, float(err.max()))
        ok = (np.abs(hX) > 1e-6) & (np.abs(hq) > 1e-12) & (np.sign(hq) == np.sign(hX))
        ratios.append(np.log(np.abs(hq[ok] / hX[ok])) / math.log(abs(th)))
    ratios = np.concatenate(ratios) if ratios else np.array([])
    k1_est = float(np.median(ratios)) if ratios.size else float("nan")
    worst_X = 0.0
    for th in (0.5, 3.0):
        err = np.abs(desc.evaluate(q, th * X, 0.0) - th * hX) / (1.0 + np.abs(hX))
        worst_X = max(worst_X, float(err.max()))

    passes_A = worst_mono <= 1e-10 and worst_zero <= 1e-12
    passes_B = worst_q <= 1e-9 and worst_X <= 1e-9
    ext = _make_extremum(desc, sphere_budget, seed)
    script_H = ext(0.0, 1.0, "min")
    lam_max = {str(lam): ext(1.0, lam, "max") for lam in (1.0, 10.0, 1000.0)}
    envelope, msg, passes_C = None, "", False
    try:
        env = spectral_envelopes(desc, L=L, T=T, sphere_budget=sphere_budget, seed=seed)
        envelope = env.to_dict()
        passes_C = env.K0 > 0
    except ConditionCFailure as exc:
        msg = str(exc)
    return ConditionReport(desc.name, passes_A, passes_B, passes_C, k1_est, worst_mono, worst_zero,
                           worst_q, worst_X, script_H, lam_max, envelope, msg)
