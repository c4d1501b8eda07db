"""PDE data: the coefficient ``Z``, the source coefficient ``chi``, initial data.

All profiles are named presets (constant, linear, tabulated) so that a run
is reproducible from a JSON document.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractViolation
from .operators import EnvelopeReport, OperatorDescriptor, make_operator, spectral_envelopes

__all__ = ["ZProfile", "ChiProfile", "InitialDatum", "ProblemSpec", "problem_from_dict"]


def _as_pairs(nodes, values):
    x = np.asarray(nodes, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 2 or np.any(np.diff(x) <= 0):
        raise ContractViolation("tabulated profile needs >= 2 strictly increasing nodes")
    return tuple(x.tolist()), tuple(y.tolist())


@dataclass(frozen=True)
class ZProfile:
    """Coefficient ``Z(s)`` of the rank-one gradient term.

    Must be non-increasing with ``0 < ell = inf Z <= L = sup Z < inf``.

    Parameters
    ----------
    kind : {"constant", "linear", "tabulated"}
    value : float
        Constant value (``constant``).
    z0, slope, ell_floor : float
        ``linear``: ``Z(s) = max(ell_floor, min(z0, z0 + slope * s))`` with ``slope <= 0``.
    nodes, values : tuple
        ``tabulated``: piecewise linear, constant beyond the end nodes.
    """

    kind: str = "constant"
    value: float = 1.0
    z0: float = 1.0
    slope: float = 0.0
    ell_floor: float = 0.5
    nodes: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "constant":
            if not self.value > 0:
                raise ContractViolation("Z must be positive")
        elif self.kind == "linear":
            if self.slope > 0:
                raise ContractViolation("Z must be non-increasing (slope <= 0)")
            if not 0 < self.ell_floor <= self.z0:
                raise ContractViolation("need 0 < ell_floor <= z0")
        elif self.kind == "tabulated":
            x, y = _as_pairs(self.nodes, self.values)
            if np.any(np.diff(y) > 0) or min(y) <= 0:
                raise ContractViolation("tabulated Z must be positive and non-increasing")
        else:
            raise ContractViolation(f"unknown Z kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float = 1.0) -> "ZProfile":
        return cls("constant", value=float(value))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full_like(s, self.value)
        if self.kind == "linear":
            # for s < 0 the ramp is capped at z0 so sup Z stays z0
            return np.clip(self.z0 + self.slope * s, self.ell_floor, self.z0)
        return np.interp(s, self.nodes, self.values)

    @property
    def ell(self) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "linear":
            return self.ell_floor if self.slope < 0 else self.z0
        return float(min(self.values))

    @property
    def L(self) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "linear":
            return self.z0
        return float(max(self.values))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "linear":
            d.update(z0=self.z0, slope=self.slope, ell_floor=self.ell_floor)
        else:
            d.update(nodes=list(self.nodes), values=list(self.values))
        return d


@dataclass(frozen=True)
class ChiProfile:
    """Time-dependent coefficient ``chi(t)`` of the first-order term.

    ``linear`` interpolates from ``c0`` at ``t = 0`` to ``c1`` at ``t = T``
    (and holds ``c1`` afterwards).
    """

    kind: str = "constant"
    value: float = 0.0
    c0: float = 0.0
    c1: float = 0.0
    T: float = 1.0
    nodes: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "tabulated":
            _as_pairs(self.nodes, self.values)
        elif self.kind == "linear":
            if not self.T > 0:
                raise ContractViolation("chi ramp length must be positive")
        elif self.kind != "constant":
            raise ContractViolation(f"unknown chi kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float) -> "ChiProfile":
        return cls("constant", value=float(value))

    @classmethod
    def linear(cls, c0: float, c1: float, T: float = 1.0) -> "ChiProfile":
        return cls("linear", c0=float(c0), c1=float(c1), T=float(T))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.value)
        if self.kind == "linear":
            s = np.clip(t / self.T, 0.0, 1.0)
            return self.c0 + (self.c1 - self.c0) * s
        return np.interp(t, self.nodes, self.values)

    def alpha(self, T: float) -> float:
        """``sup |chi|`` on ``[0, T]``."""
        if self.kind == "constant":
            return abs(self.value)
        if self.kind == "linear":
            return max(abs(self.c0), abs(float(self(T))))
        pts = [0.0, T] + [x for x in self.nodes if 0 <= x <= T]
        return float(np.max(np.abs(self(np.array(pts)))))

    def nonnegative(self, T: float) -> bool:
        if self.kind == "constant":
            return self.value >= 0
        if self.kind == "linear":
            return min(self.c0, float(self(T))) >= 0
        pts = [0.0, T] + [x for x in self.nodes if 0 <= x <= T]
        return bool(np.min(self(np.array(pts))) >= 0)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "linear":
            d.update(c0=self.c0, c1=self.c1, T=self.T)
        else:
            d.update(nodes=list(self.nodes), values=list(self.values))
        return d


@dataclass(frozen=True)
class InitialDatum:
    """Radial initial datum ``h(r)``.

    ``bump``: ``base + height * exp(-(r / width)^2)``; ``tabulated``:
    piecewise linear in ``r``, constant beyond the last node.
    """

    kind: str = "constant"
    value: float = 0.0
    base: float = 0.0
    height: float = 1.0
    width: float = 1.0
    nodes: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "tabulated":
            _as_pairs(self.nodes, self.values)
        elif self.kind == "bump":
            if not self.width > 0:
                raise ContractViolation("bump width must be positive")
        elif self.kind != "constant":
            raise ContractViolation(f"unknown initial datum kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float) -> "InitialDatum":
        return cls("constant", value=float(value))

    @classmethod
    def bump(cls, base: float = 0.0, height: float = 1.0, width: float = 1.0) -> "InitialDatum":
        return cls("bump", base=float(base), height=float(height), width=float(width))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.full_like(r, self.value)
        if self.kind == "bump":
            return self.base + self.height * np.exp(-((r / self.width) ** 2))
        return np.interp(r, self.nodes, self.values)

    @property
    def mu(self) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "bump":
            return self.base + min(0.0, self.height)
        return float(min(self.values))

    @property
    def nu(self) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "bump":
            return self.base + max(0.0, self.height)
        return float(max(self.values))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "bump":
            d.update(base=self.base, height=self.height, width=self.width)
        else:
            d.update(nodes=list(self.nodes), values=list(self.values))
        return d


@dataclass(frozen=True)
class ProblemSpec:
    """Data of ``H(Dv, D^2 v + Z(v) Dv Dv^T) + chi(t) |Dv|^sigma - v_t = 0``.

    Parameters
    ----------
    operator : OperatorDescriptor
    sigma : float
        Exponent of the first-order term, ``>= 0``.
    T : float
        Time horizon.
    Z : ZProfile
    chi : ChiProfile
    h : InitialDatum
    sphere_budget, seed : int
        Settings for the envelope computation.
    """

    operator: OperatorDescriptor
    sigma: float = 0.0
    T: float = 1.0
    Z: ZProfile = field(default_factory=ZProfile)
    chi: ChiProfile = field(default_factory=ChiProfile)
    h: InitialDatum = field(default_factory=InitialDatum)
    sphere_budget: int = 4096
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ContractViolation("sigma must be >= 0")
        if not self.T > 0:
            raise ContractViolation("T must be positive")

    @property
    def homogeneity(self):
        return self.operator.homogeneity

    @property
    def k(self) -> float:
        return self.homogeneity.k

    @property
    def gamma(self) -> float:
        return self.homogeneity.gamma

    @property
    def gamma_star(self) -> float:
        return self.homogeneity.gamma_star

    @property
    def alpha(self) -> float:
        return self.chi.alpha(self.T)

    @property
    def chi_nonnegative(self) -> bool:
        return self.chi.nonnegative(self.T)

    @property
    def ell(self) -> float:
        return self.Z.ell

    @property
    def L(self) -> float:
        return self.Z.L

    @property
    def mu(self) -> float:
        return self.h.mu

    @property
    def nu(self) -> float:
        return self.h.nu

    def envelopes(self) -> EnvelopeReport:
        return spectral_envelopes(self.operator, self.L, self.T, self.sphere_budget, self.seed)

    def with_(self, **changes) -> "ProblemSpec":
        from dataclasses import replace
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "operator": self.operator.to_dict(),
            "sigma": self.sigma,
            "T": self.T,
            "Z": self.Z.to_dict(),
            "chi": self.chi.to_dict(),
            "h": self.h.to_dict(),
        }


def _profile(cls, spec, default):
    if spec is None:
        return default
    if isinstance(spec, (int, float)):
        return cls.constant(spec)
    spec = dict(spec)
    for key in ("nodes", "values"):
        if key in spec:
            spec[key] = tuple(spec[key])
    return cls(**spec)


def problem_from_dict(d: dict, operator: Optional[OperatorDescriptor] = None) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from plain JSON-like data.

    ``operator`` may be given either as a descriptor or as a name plus
    parameters: ``{"operator": "p_laplacian", "p": 3, "n": 2}`` or
    ``{"operator": {"name": "p_laplacian", "p": 3}, "n": 2}``.
    """
    if operator is None:
        op = d.get("operator", "p_laplacian")
        n = int(d.get("n", 2))
        if isinstance(op, dict):
            op = dict(op)
            name = op.pop("name")
            n = int(op.pop("n", n))
            params = op
        else:
            name = op
            params = {k: d[k] for k in ("p", "lower", "upper", "prefactor_power") if k in d}
        operator = make_operator(name, n=n, **params)
    return ProblemSpec(
        operator=operator,
        sigma=float(d.get("sigma", 0.0)),
        T=float(d.get("T", 1.0)),
        Z=_profile(ZProfile, d.get("Z"), ZProfile()),
        chi=_profile(ChiProfile, d.get("chi"), ChiProfile()),
        h=_profile(InitialDatum, d.get("h"), InitialDatum()),
        sphere_budget=int(d.get("sphere_budget", 4096)),
        seed=int(d.get("seed", 0)),
    )
