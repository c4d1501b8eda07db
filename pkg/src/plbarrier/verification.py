"""Finite-difference solver, comparison contract and maximum/minimum principle checks.

The solver is an explicit Euler scheme: centred differences inside ``H``
and upwinded gradient magnitudes for the ``chi |Dv|^sigma`` term. It is
meant for desk-scale empirical checks, not for production solves.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import (CFLViolation, ContractViolation, HypothesisFailure, PreconditionFailure,
                     SolverBreakdown)
from .problem import ChiProfile, InitialDatum, ProblemSpec, ZProfile
from .reports import to_jsonable
from .transform import PhiTransform, concavity_check

__all__ = [
    "GridField",
    "Boundary",
    "GrowthHypothesis",
    "PrincipleReport",
    "PRINCIPLES",
    "fd_solve",
    "heat_solve_radial",
    "cole_hopf_check",
    "stable_dt",
    "sample_barrier",
    "select_principles",
    "principle_check",
    "comparison_check",
    "doubly_nonlinear_check",
    "rho_sweep",
    "read_binary",
]

DEFAULT_GRAD_REG = 1e-6
_KIND_CODE = {"radial_1d": 0.0, "box_2d": 1.0}


@dataclass
class GridField:
    """Values of a function on a space-time grid.

    Attributes
    ----------
    kind : {"radial_1d", "box_2d"}
    axes : tuple of ndarray
        ``(r,)`` or ``(x, y)``.
    t : ndarray
    values : ndarray
        Shape ``(len(t), len(r))`` or ``(len(t), len(x), len(y))``.
    boundary : ndarray of bool
        ``True`` on parabolic-boundary nodes (``t = 0`` and the outer edge).
    meta : dict
    """

    kind: str
    axes: tuple
    t: np.ndarray
    values: np.ndarray
    boundary: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ContractViolation(f"unknown field kind {self.kind!r}")
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.boundary = np.asarray(self.boundary, dtype=bool)
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        shape = (self.t.size,) + tuple(a.size for a in self.axes)
        if self.values.shape != shape or self.boundary.shape != shape:
            raise ContractViolation(f"values/boundary must have shape {shape}")
        for a in (self.t,) + self.axes:
            if a.size > 1 and np.any(np.diff(a) <= 0):
                raise ContractViolation("node spacings must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ContractViolation("field values must be finite")

    @property
    def radii(self) -> np.ndarray:
        """Distance of every spatial node from the origin."""
        if self.kind == "radial_1d":
            return np.abs(self.axes[0])
        X, Y = np.meshgrid(*self.axes, indexing="ij")
        return np.hypot(X, Y)

    def at(self, i: int) -> np.ndarray:
        return self.values[i]

    def same_grid(self, other: "GridField") -> bool:
        return (self.kind == other.kind and self.values.shape == other.values.shape
                and np.array_equal(self.t, other.t)
                and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes)))

    def to_csv(self, path) -> None:
        """Columns ``r, t, value`` (radial) or ``x, y, t, value`` (box)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if self.kind == "radial_1d":
                w.writerow(["r", "t", "value"])
                for i, ti in enumerate(self.t):
                    for rj, v in zip(self.axes[0], self.values[i]):
                        w.writerow([repr(float(rj)), repr(float(ti)), repr(float(v))])
            else:
                w.writerow(["x", "y", "t", "value"])
                x, y = self.axes
                for i, ti in enumerate(self.t):
                    for a, xa in enumerate(x):
                        for b, yb in enumerate(y):
                            w.writerow([repr(float(xa)), repr(float(yb)), repr(float(ti)),
                                        repr(float(self.values[i, a, b]))])

    def to_binary(self, path) -> None:
        """Little-endian float64 header ``kind, ndim, shape, origin, spacing``
        over the axes ``(t, space...)``, then the values row-major.

        Assumes uniform spacing along every axis.
        """
        axes = (self.t,) + self.axes
        for a in axes:
            if a.size > 2 and not np.allclose(np.diff(a), a[1] - a[0], rtol=1e-9, atol=0):
                raise ContractViolation("binary dump needs uniform spacing")
        header = [_KIND_CODE[self.kind], float(len(axes))]
        header += [float(a.size) for a in axes]
        header += [float(a[0]) for a in axes]
        header += [float(a[1] - a[0]) if a.size > 1 else 0.0 for a in axes]
        with open(path, "wb") as fh:
            fh.write(struct.pack(f"<{len(header)}d", *header))
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())


def read_binary(path) -> GridField:
    """Inverse of :meth:`GridField.to_binary` (boundary tags are rebuilt)."""
    with open(path, "rb") as fh:
        data = fh.read()
    kind_code, ndim = struct.unpack_from("<2d", data, 0)
    nd = int(ndim)
    rest = struct.unpack_from(f"<{3 * nd}d", data, 16)
    shape = tuple(int(s) for s in rest[:nd])
    origin, step = rest[nd:2 * nd], rest[2 * nd:]
    off = 16 + 24 * nd
    vals = np.frombuffer(data, dtype="<f8", offset=off).reshape(shape).copy()
    axes = [o + h * np.arange(s) for o, h, s in zip(origin, step, shape)]
    kind = {v: k for k, v in _KIND_CODE.items()}[kind_code]
    return GridField(kind, tuple(axes[1:]), axes[0], vals, _boundary_mask(kind, shape))


def _boundary_mask(kind, shape):
    mask = np.zeros(shape, dtype=bool)
    mask[0] = True
    if kind == "radial_1d":
        mask[:, -1] = True
    else:
        mask[:, 0, :] = mask[:, -1, :] = True
        mask[:, :, 0] = mask[:, :, -1] = True
    return mask


@dataclass(frozen=True)
class Boundary:
    """Lateral boundary condition: ``dirichlet`` holds ``h``; ``pin`` follows ``fn(r, t)``."""

    kind: str = "dirichlet"
    fn: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "pin"):
            raise ContractViolation(f"unknown boundary kind {self.kind!r}")
        if self.kind == "pin" and self.fn is None:
            raise ContractViolation("pinned boundary needs fn(r, t)")

    @classmethod
    def pin_to(cls, barrier) -> "Boundary":
        """Pin to a barrier callable ``barrier(r, t)`` returning an ``r x t`` array."""
        return cls("pin", lambda r, t: np.asarray(barrier(np.atleast_1d(r), np.atleast_1d(t)))
                   .reshape(np.size(r)))

    def values(self, problem: ProblemSpec, r, t):
        if self.kind == "dirichlet":
            return problem.h(r)
        return np.asarray(self.fn(r, t), dtype=float)


# ---------------------------------------------------------------------------
# spatial operators


def _upwind_norm(dm, dp, chi_t):
    """Godunov gradient magnitude for ``v_t = chi |Dv|^sigma``."""
    if chi_t >= 0:
        return np.sqrt(np.maximum(dp, 0.0) ** 2 + np.minimum(dm, 0.0) ** 2)
    return np.sqrt(np.maximum(dm, 0.0) ** 2 + np.minimum(dp, 0.0) ** 2)


def _radial_rhs(problem, v, r, dr, t, grad_reg):
    """``H + chi |Dv|^sigma`` at interior nodes ``0..nr-2`` and the CFL diffusivity."""
    desc = problem.operator
    n = desc.dim
    vi = v[:-1]
    vp = v[1:]
    vm = np.concatenate([[v[1]], v[:-2]])
    ri = r[:-1]
    w_r = (vp - vm) / (2 * dr)
    w_rr = (vp - 2 * vi + vm) / dr**2
    e = np.zeros(n)
    e[0] = 1.0
    ee = np.outer(e, e)
    eye = np.eye(n)
    safe_r = np.where(ri > 0, ri, 1.0)
    tang = np.where(ri > 0, w_r / safe_r, w_rr)
    zw = problem.Z(vi)
    X = (w_rr + zw * w_r**2)[:, None, None] * ee + tang[:, None, None] * (eye - ee)
    X[ri == 0] = w_rr[ri == 0, None, None] * eye
    q = w_r[:, None] * e
    Hval = desc.evaluate(q, X, grad_reg)
    D = np.max(np.abs(desc.evaluate(q, X + eye, grad_reg) - Hval))
    chi_t = float(problem.chi(t))
    src = 0.0
    speed = 2.0 * problem.L * np.max(np.abs(w_r)) * D
    if chi_t != 0.0:
        g = _upwind_norm((vi - vm) / dr, (vp - vi) / dr, chi_t)
        s = problem.sigma
        src = chi_t * (g**s if s > 0 else np.ones_like(g))
        if s >= 1:
            speed += abs(chi_t) * s * float(np.max(g)) ** (s - 1.0)
    return Hval + src, D, speed


def _box_rhs(problem, V, dx, t, grad_reg):
    desc = problem.operator
    c = V[1:-1, 1:-1]
    vx = (V[2:, 1:-1] - V[:-2, 1:-1]) / (2 * dx)
    vy = (V[1:-1, 2:] - V[1:-1, :-2]) / (2 * dx)
    vxx = (V[2:, 1:-1] - 2 * c + V[:-2, 1:-1]) / dx**2
    vyy = (V[1:-1, 2:] - 2 * c + V[1:-1, :-2]) / dx**2
    vxy = (V[2:, 2:] - V[2:, :-2] - V[:-2, 2:] + V[:-2, :-2]) / (4 * dx * dx)
    q = np.stack([vx, vy], axis=-1)
    zw = problem.Z(c)
    X = np.empty(c.shape + (2, 2))
    X[..., 0, 0] = vxx + zw * vx * vx
    X[..., 1, 1] = vyy + zw * vy * vy
    X[..., 0, 1] = X[..., 1, 0] = vxy + zw * vx * vy
    Hval = desc.evaluate(q, X, grad_reg)
    D = np.max(np.abs(desc.evaluate(q, X + np.eye(2), grad_reg) - Hval))
    gnorm = np.hypot(vx, vy)
    speed = 2.0 * problem.L * float(np.max(gnorm)) * D
    chi_t = float(problem.chi(t))
    src = 0.0
    if chi_t != 0.0:
        gx = _upwind_norm((c - V[:-2, 1:-1]) / dx, (V[2:, 1:-1] - c) / dx, chi_t)
        gy = _upwind_norm((c - V[1:-1, :-2]) / dx, (V[1:-1, 2:] - c) / dx, chi_t)
        g = np.hypot(gx, gy)
        s = problem.sigma
        src = chi_t * (g**s if s > 0 else np.ones_like(g))
        if s >= 1:
            speed += abs(chi_t) * s * float(np.max(g)) ** (s - 1.0)
    return Hval + src, D, speed


def _dt_limit(D, speed, h, n, cfl):
    lim = math.inf
    if D > 0:
        lim = cfl * h * h / (2.0 * D)
    if speed > 0:
        lim = min(lim, cfl * h / speed)
    return lim


def stable_dt(problem: ProblemSpec, rho: float, nr: int, kind: str = "radial_1d",
              grad_reg: float = DEFAULT_GRAD_REG, cfl: float = 0.9, safety: float = 0.5) -> float:
    """A time step well inside the explicit stability bound for the initial data."""
    if kind == "radial_1d":
        r = np.linspace(0.0, rho, nr)
        h = r[1] - r[0]
        _, D, speed = _radial_rhs(problem, problem.h(r), r, h, 0.0, grad_reg)
    else:
        x = np.linspace(-rho, rho, nr)
        h = x[1] - x[0]
        X, Y = np.meshgrid(x, x, indexing="ij")
        _, D, speed = _box_rhs(problem, problem.h(np.hypot(X, Y)), h, 0.0, grad_reg)
    # leave room for the diffusivity to grow as the solution evolves
    D = max(D, problem.operator.dim * 1e-3)
    return safety * _dt_limit(D, speed, h, problem.operator.dim, cfl)


def fd_solve(problem: ProblemSpec, rho: float, nr: int, dt: Optional[float] = None,
             boundary: Boundary = Boundary(), grad_reg: float = DEFAULT_GRAD_REG,
             kind: str = "radial_1d", n_save: int = 51, cfl: float = 0.9,
             T: Optional[float] = None) -> GridField:
    """Explicit time stepping on ``B_rho x [0, T]``.

    Parameters
    ----------
    problem : ProblemSpec
        ``problem.h`` gives the initial datum as a function of ``|x|``.
    rho : float
        Radius (radial) or half-width (box) of the truncated domain.
    nr : int
        Nodes per spatial axis.
    dt : float, optional
        Time step; defaults to :func:`stable_dt`.
    boundary : Boundary
    grad_reg : float
        Gradient regularization in ``[1e-8, 1e-4]``.
    kind : {"radial_1d", "box_2d"}
    n_save : int
        Number of stored time levels (uniform in ``t``).

    Raises
    ------
    CFLViolation
        If ``dt`` exceeds ``cfl * h^2 / (2 D)`` (``D`` the diffusivity
        estimate ``max |H(q, X + I) - H(q, X)|``) or the first-order
        transport bound, initially or at any step.
    SolverBreakdown
        On non-finite values, with the step index.
    """
    if not 1e-8 <= grad_reg <= 1e-4:
        raise ContractViolation("grad_reg must lie in [1e-8, 1e-4]")
    if kind == "box_2d" and problem.operator.dim != 2:
        raise ContractViolation("the box scheme is two-dimensional")
    if kind not in _KIND_CODE:
        raise ContractViolation(f"unknown kind {kind!r}")
    if nr < 5 or n_save < 2:
        raise ContractViolation("need nr >= 5 and n_save >= 2")
    T = problem.T if T is None else float(T)
    if dt is None:
        dt = stable_dt(problem, rho, nr, kind, grad_reg, cfl)
    # a multiple of the save interval keeps the saved times uniform
    per = n_save - 1
    nsteps = per * max(1, int(math.ceil(T / (dt * per) - 1e-9)))
    dt = T / nsteps
    save_at = np.unique(np.round(np.linspace(0, nsteps, n_save)).astype(int))
    t_save = save_at * dt
    n = problem.operator.dim

    if kind == "radial_1d":
        r = np.linspace(0.0, rho, nr)
        h = r[1] - r[0]
        v = problem.h(r).astype(float)
        axes = (r,)
        edge = np.array([rho])

        def step(v, t):
            rhs, D, speed = _radial_rhs(problem, v, r, h, t, grad_reg)
            return rhs, D, speed

        def set_boundary(v, t):
            v[-1] = boundary.values(problem, edge, t)[0]
    else:
        x = np.linspace(-rho, rho, nr)
        h = x[1] - x[0]
        XX, YY = np.meshgrid(x, x, indexing="ij")
        RR = np.hypot(XX, YY)
        v = problem.h(RR).astype(float)
        axes = (x, x)
        emask = _boundary_mask("box_2d", (2, nr, nr))[1]
        redge = RR[emask]

        def step(v, t):
            return _box_rhs(problem, v, h, t, grad_reg)

        def set_boundary(v, t):
            v[emask] = boundary.values(problem, redge, t)

    set_boundary(v, 0.0)
    out = np.empty((save_at.size,) + v.shape)
    out[0] = v
    k_save = 1
    for s in range(1, nsteps + 1):
        t = (s - 1) * dt
        rhs, D, speed = step(v, t)
        lim = _dt_limit(D, speed, h, n, cfl)
        if dt > lim:
            raise CFLViolation(f"dt={dt:.3g} exceeds the stability bound {lim:.3g} at step {s}")
        if kind == "radial_1d":
            v[:-1] += dt * rhs
        else:
            v[1:-1, 1:-1] += dt * rhs
        set_boundary(v, s * dt)
        if not np.all(np.isfinite(v)):
            raise SolverBreakdown("non-finite values", step=s)
        if k_save < save_at.size and s == save_at[k_save]:
            out[k_save] = v
            k_save += 1
    meta = {"dt": dt, "steps": nsteps, "grad_reg": grad_reg, "rho": rho, "h": h,
            "boundary": boundary.kind}
    return GridField(kind, axes, t_save, out, _boundary_mask(kind, out.shape), meta)


def heat_solve_radial(w0: Callable, n: int, rho: float, nr: int, T: float, nt: int) -> tuple:
    """Crank-Nicolson for ``w_t = w_rr + (n - 1) w_r / r`` on ``[0, rho]``.

    ``w`` is held at ``w0(rho)`` on the outer edge. Returns ``(r, w(r, T))``.
    """
    r = np.linspace(0.0, rho, nr)
    h = r[1] - r[0]
    dt = T / nt
    lo = np.zeros(nr)
    di = np.zeros(nr)
    up = np.zeros(nr)
    ri = r[1:-1]
    lo[1:-1] = 1.0 / h**2 - (n - 1) / (2 * h * ri)
    di[1:-1] = -2.0 / h**2
    up[1:-1] = 1.0 / h**2 + (n - 1) / (2 * h * ri)
    di[0] = -2.0 * n / h**2
    up[0] = 2.0 * n / h**2
    ab = np.zeros((3, nr))
    ab[0, 1:] = -0.5 * dt * up[:-1]
    ab[1] = 1.0 - 0.5 * dt * di
    ab[2, :-1] = -0.5 * dt * lo[1:]
    ab[1, -1] = 1.0
    ab[2, -2] = 0.0
    w = np.asarray(w0(r), dtype=float)
    edge = w[-1]
    for _ in range(nt):
        Aw = di * w
        Aw[1:] += lo[1:] * w[:-1]
        Aw[:-1] += up[:-1] * w[1:]
        rhs = w + 0.5 * dt * Aw
        rhs[-1] = edge
        w = solve_banded((1, 1), ab, rhs)
    return r, w


def cole_hopf_check(n: int = 2, rho: float = 20.0, nr: int = 400, T: float = 0.5,
                    h: InitialDatum = InitialDatum.bump(0.0, 1.0, 1.0), fine: int = 4,
                    grad_reg: float = DEFAULT_GRAD_REG) -> dict:
    """Compare the solver on ``v_t = Lap v + |Dv|^2`` with ``log`` of a heat solve of ``e^h``."""
    from .operators import laplacian

    problem = ProblemSpec(laplacian(n), sigma=0.0, T=T, Z=ZProfile.constant(1.0),
                          chi=ChiProfile.constant(0.0), h=h)
    fld = fd_solve(problem, rho, nr, grad_reg=grad_reg)
    nf = fine * (nr - 1) + 1
    hf = rho / (nf - 1)
    rf, wf = heat_solve_radial(lambda r: np.exp(h(r)), n, rho, nf, T,
                               nt=int(math.ceil(T / (0.5 * hf))))
    oracle = np.log(np.interp(fld.axes[0], rf, wf))
    err = float(np.max(np.abs(fld.values[-1] - oracle)))
    return {"sup_error": err, "field": fld, "oracle": oracle, "problem": problem}


def sample_barrier(barrier, r, t) -> GridField:
    """Sample ``barrier(r, t)`` (an ``r x t`` array) into a radial field."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    vals = np.asarray(barrier(r, t), dtype=float).T
    return GridField("radial_1d", (r,), t, vals, _boundary_mask("radial_1d", vals.shape),
                     {"barrier": getattr(barrier, "case_tag", type(barrier).__name__)})


# ---------------------------------------------------------------------------
# principles


PRINCIPLES = {
    "max_linear": "sup u <= nu + alpha t (sigma = 0)",
    "max_flat": "sup u <= nu (sigma > 0)",
    "min_linear": "inf u >= mu - alpha t (sigma = 0)",
    "min_power": "inf u >= mu - (alpha^gamma/(ell H)^sigma)^(1/(gamma - sigma)) t (0 < sigma < gamma)",
    "min_flat": "inf u >= mu (chi >= 0, or sigma >= gamma)",
}


def select_principles(problem: ProblemSpec) -> tuple:
    """The ``(max, min)`` principle keys that apply to ``problem``."""
    s, g = problem.sigma, problem.gamma
    mx = "max_linear" if s == 0 else "max_flat"
    if problem.chi_nonnegative or s >= g or math.isclose(s, g):
        mn = "min_flat"
    elif s == 0:
        mn = "min_linear"
    else:
        mn = "min_power"
    return mx, mn


@dataclass(frozen=True)
class GrowthHypothesis:
    """``sup_{|x| <= rho} side * u <= eta * rho^exponent`` for ``rho >= rho0``.

    ``side`` is ``+1`` for the maximum principle and ``-1`` for the minimum.
    """

    exponent: float
    eta: float = 1.0
    rho0: float = 1.0
    side: int = 1

    def __post_init__(self):
        if not self.eta > 0:
            raise ContractViolation("eta must be positive")
        if self.side not in (1, -1):
            raise ContractViolation("side must be +1 or -1")

    @classmethod
    def for_problem(cls, problem: ProblemSpec, side: int = 1, eta: float = 1.0,
                    rho0: float = 1.0, epsilon: float = 0.05) -> Optional["GrowthHypothesis"]:
        """The growth exponent required by the principle on ``side``; ``None`` if none is needed."""
        k, g, s = problem.k, problem.gamma, problem.sigma
        if side == -1:
            mn = select_principles(problem)[1]
            needs = s > g or (math.isclose(s, g)
                              and problem.alpha >= problem.ell * problem.envelopes().script_H)
            if mn != "min_flat" or problem.chi_nonnegative and not needs or not needs:
                return None
        if s > g and not math.isclose(s, g):
            e = s / (s - 1.0)
        elif math.isclose(k, 1.0):
            e = 2.0 - epsilon
        else:
            e = g / k
        return cls(e, eta, rho0, side)

    def check(self, fld: GridField) -> dict:
        rad = fld.radii
        ext = np.max(self.side * fld.values, axis=0)
        rhos = np.unique(rad[rad >= self.rho0])
        worst = math.inf
        for rho in rhos:
            m = float(np.max(ext[rad <= rho]))
            worst = min(worst, self.eta * rho**self.exponent - m)
        return {"holds": bool(worst >= 0 or not rhos.size), "margin": worst}


@dataclass
class PrincipleReport:
    """Empirical check of a maximum or minimum principle on a field."""

    principle: str
    t: np.ndarray
    margin: np.ndarray
    tol: float
    skipped: bool = False
    notes: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin)) if self.margin.size else math.nan

    @property
    def passed(self) -> bool:
        return (not self.skipped) and self.min_margin >= -self.tol

    def to_dict(self) -> dict:
        return to_jsonable({"principle": self.principle, "statement": PRINCIPLES.get(self.principle),
                            "t": self.t, "margin": self.margin, "tol": self.tol,
                            "min_margin": self.min_margin, "passed": self.passed,
                            "skipped": self.skipped, "empirical": True, "notes": self.notes,
                            "meta": self.meta})


def principle_bound(problem: ProblemSpec, principle: str, t):
    t = np.asarray(t, dtype=float)
    a = problem.alpha
    if principle == "max_linear":
        return problem.nu + a * t
    if principle == "max_flat":
        return problem.nu + 0 * t
    if principle == "min_linear":
        return problem.mu - a * t
    if principle == "min_flat":
        return problem.mu + 0 * t
    if principle == "min_power":
        g, s = problem.gamma, problem.sigma
        c = (a**g / (problem.ell * problem.envelopes().script_H) ** s) ** (1.0 / (g - s))
        return problem.mu - c * t
    raise ContractViolation(f"unknown principle {principle!r}")


def principle_check(fld: GridField, problem: ProblemSpec, principle: str,
                    hyp: Optional[GrowthHypothesis] = None, tol: float = 1e-2) -> PrincipleReport:
    """Check ``sup_x u(., t)`` or ``inf_x u(., t)`` against the principle bound at every saved ``t``.

    Raises
    ------
    HypothesisFailure
        If ``hyp`` is given and does not hold on ``fld``.
    """
    if principle not in PRINCIPLES:
        raise ContractViolation(f"unknown principle {principle!r}")
    notes = []
    if hyp is not None:
        res = hyp.check(fld)
        if not res["holds"]:
            raise HypothesisFailure(f"growth hypothesis with exponent {hyp.exponent:g} fails "
                                    f"(margin {res['margin']:.3g})")
        notes.append(f"growth hypothesis exponent {hyp.exponent:g} holds, margin {res['margin']:.3g}")
    axes = tuple(range(1, fld.values.ndim))
    bound = principle_bound(problem, principle, fld.t)
    if principle.startswith("max"):
        margin = bound - np.max(fld.values, axis=axes)
    else:
        margin = np.min(fld.values, axis=axes) - bound
    return PrincipleReport(principle, fld.t, margin, tol, notes=notes,
                           meta={"grad_reg": fld.meta.get("grad_reg")})


def comparison_check(sub: GridField, sup: GridField, tol: float = 1e-9) -> bool:
    """``sub <= sup + tol`` at every interior node, given the same order on the parabolic boundary.

    Raises
    ------
    PreconditionFailure
        If the grids differ or the boundary order fails.
    """
    if not sub.same_grid(sup):
        raise PreconditionFailure("fields live on different grids")
    bmask = sub.boundary | sup.boundary
    gap = sub.values - sup.values
    if np.any(gap[bmask] > tol):
        i = np.argmax(np.where(bmask, gap, -np.inf))
        raise PreconditionFailure(f"boundary order violated by {gap.flat[i]:.3g} at node "
                                  f"{np.unravel_index(i, gap.shape)}")
    return bool(np.all(gap[~bmask] <= tol))


def rho_sweep(problem: ProblemSpec, rho0: float, nr0: int, factors: Sequence[int] = (1, 2, 4),
              boundary: Boundary = Boundary(), tol: float = 1e-2, **kw) -> list:
    """Run both principles on ``B_rho`` for ``rho in {rho0, 2 rho0, 4 rho0}`` at fixed spacing."""
    mx, mn = select_principles(problem)
    out = []
    for f in factors:
        fld = fd_solve(problem, f * rho0, (nr0 - 1) * f + 1, boundary=boundary, **kw)
        out.append({"rho": f * rho0, "max": principle_check(fld, problem, mx, tol=tol),
                    "min": principle_check(fld, problem, mn, tol=tol)})
    return out


@dataclass
class DoublyNonlinearReport:
    k: float
    round_trip_error: float
    sup_u: float
    inf_u: float
    sup_g: float
    inf_g: float
    tol: float
    concavity: Optional[dict] = None
    field_v: Optional[GridField] = field(default=None, repr=False)

    @property
    def max_ok(self) -> bool:
        return self.sup_u <= self.sup_g + self.tol

    @property
    def min_ok(self) -> bool:
        return self.inf_u >= self.inf_g - self.tol

    @property
    def passed(self) -> bool:
        return self.max_ok and self.min_ok

    def to_dict(self) -> dict:
        return to_jsonable({"k": self.k, "round_trip_error": self.round_trip_error,
                            "sup_u": self.sup_u, "inf_u": self.inf_u, "sup_g": self.sup_g,
                            "inf_g": self.inf_g, "tol": self.tol, "max_ok": self.max_ok,
                            "min_ok": self.min_ok, "passed": self.passed,
                            "concavity": self.concavity})


def doubly_nonlinear_check(operator, g: InitialDatum, transform: PhiTransform,
                           T: float = 0.5, rho: float = 10.0, nr: int = 201,
                           tol: float = 1e-2, grad_reg: float = DEFAULT_GRAD_REG,
                           s_grid=None) -> DoublyNonlinearReport:
    """Principles for ``H(Du, D^2 u) - f(u) u_t = 0`` through ``u = phi(v)``.

    The ``v`` problem has ``Z = phi''/phi'``, ``chi = 0`` and ``sigma = 0``;
    its bounds ``phi^{-1}(inf g) <= v <= phi^{-1}(sup g)`` map back to
    ``inf g <= u <= sup g``.

    Raises
    ------
    HypothesisFailure
        If ``f^{1/(k-1)}`` fails the concavity and slope conditions, or
        ``g`` is not bounded away from 0.
    """
    k = transform.k
    if not math.isclose(k, operator.homogeneity.k):
        raise ContractViolation("transform and operator disagree on k")
    if not g.mu > 0:
        raise HypothesisFailure("g must be bounded below by a positive constant")
    conc = None
    if not transform.exact_exp:
        s = np.linspace(max(1e-3, 0.5 * g.mu), 2.0 * g.nu, 200) if s_grid is None else s_grid
        conc = concavity_check(transform.f, transform.fprime, k, s)
        if not conc["pass"]:
            raise HypothesisFailure("f^(1/(k-1)) is not concave with bounded positive slope")
    rg = np.linspace(0.0, rho, nr)
    gv = g(rg)
    v0 = transform.phi_inv(gv)
    round_trip = float(np.max(np.abs(transform.phi(v0) - gv) / np.abs(gv)))
    lo, hi = transform.Z_bounds() if not transform.exact_exp else (1.0, 1.0)
    vnodes = tuple(float(x) for x in rg)
    if hi - lo <= 1e-9 * hi:
        Z = ZProfile.constant(0.5 * (lo + hi))
    else:
        # strip round-off wiggles so the tabulated Z is exactly non-increasing
        zt = np.minimum.accumulate(transform.Z_tab)
        Z = ZProfile("tabulated", nodes=tuple(transform.tau), values=tuple(zt))
    h = InitialDatum("tabulated", nodes=vnodes, values=tuple(float(x) for x in v0))
    problem = ProblemSpec(operator, sigma=0.0, T=T, Z=Z, chi=ChiProfile.constant(0.0), h=h)
    fld = fd_solve(problem, rho, nr, grad_reg=grad_reg)
    u = transform.phi(fld.values)
    return DoublyNonlinearReport(k, round_trip, float(np.max(u)), float(np.min(u)),
                                 float(g.nu), float(g.mu), tol, conc, fld)
