"""Result records shared by the barrier modules."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = ["ResidualReport", "LimitStudy", "relative_slack", "to_jsonable"]


def relative_slack(lo, hi):
    """Slack of ``lo <= hi`` scaled by ``max(1, |lo|, |hi|)``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return (hi - lo) / np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))


def to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass
class ResidualReport:
    """Outcome of evaluating a barrier residual on a grid.

    ``kind`` is ``"super"`` (pass iff ``max residual <= tol``) or ``"sub"``
    (pass iff ``min residual >= -tol``). ``bound_slack`` is the worst
    relative slack of the residual against the analytic bound chain.
    """

    kind: str
    case_tag: str
    tol: float
    extreme: float
    worst_node: tuple
    bound_slack: float
    bound_tol: float = 1e-9
    n_nodes: int = 0
    r: Optional[np.ndarray] = field(default=None, repr=False)
    t: Optional[np.ndarray] = field(default=None, repr=False)
    residual: Optional[np.ndarray] = field(default=None, repr=False)
    bound: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def residual_ok(self) -> bool:
        if self.kind == "super":
            return self.extreme <= self.tol
        return self.extreme >= -self.tol

    @property
    def bound_ok(self) -> bool:
        return self.bound_slack >= -self.bound_tol

    @property
    def passed(self) -> bool:
        return bool(self.residual_ok and self.bound_ok)

    def to_dict(self) -> dict:
        return to_jsonable({
            "kind": self.kind, "case_tag": self.case_tag, "tol": self.tol,
            "extreme_residual": self.extreme, "worst_node": list(self.worst_node),
            "bound_slack": self.bound_slack, "n_nodes": self.n_nodes,
            "residual_ok": self.residual_ok, "bound_ok": self.bound_ok, "passed": self.passed,
        })

    def to_csv(self, path) -> None:
        """Columns ``r, t, residual, bound`` (bound empty where not defined)."""
        R, T = np.meshgrid(self.r, self.t, indexing="ij")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "t", "residual", "bound"])
            for ri, ti, res, bd in zip(R.ravel(), T.ravel(), self.residual.ravel(),
                                       self.bound.ravel()):
                w.writerow([repr(float(ri)), repr(float(ti)), repr(float(res)),
                            "" if not np.isfinite(bd) else repr(float(bd))])


@dataclass
class LimitStudy:
    """A parameter sweep ``x -> value`` with its expected limit."""

    case_tag: str
    variable: str
    rows: list
    target: float
    tol: float
    relative: bool = False
    notes: list = field(default_factory=list)

    @property
    def tail_error(self) -> float:
        if not self.rows:
            return float("inf")
        val = self.rows[-1][1]
        err = abs(val - self.target)
        if self.relative and self.target != 0:
            err /= abs(self.target)
        return float(err)

    @property
    def passed(self) -> bool:
        return self.tail_error <= self.tol

    def to_dict(self) -> dict:
        return to_jsonable({
            "case_tag": self.case_tag, "variable": self.variable,
            "rows": [list(r) for r in self.rows], "target": self.target, "tol": self.tol,
            "relative": self.relative, "tail_error": self.tail_error, "passed": self.passed,
            "notes": self.notes,
        })
