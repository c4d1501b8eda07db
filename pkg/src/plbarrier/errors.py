"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument breaks a documented precondition."""


class ConditionCFailure(RuntimeError):
    """No tested ``lam > 1`` gives a positive lower rank-one envelope.

    Operators raising this sit outside the class the barrier
    constructions are built for (for example the quasilinear operator
    ``|q|^2 tr X - <Xq, q>``).
    """


class BParameterTooLarge(ValueError):
    """The scale ``b`` exceeds the admissibility bound of its case."""

    def __init__(self, b, bound, case_tag):
        self.b = b
        self.bound = bound
        self.case_tag = case_tag
        super().__init__(f"b={b!r} exceeds admissible bound {bound!r} for case {case_tag}")


class WrongRegime(ValueError):
    """The requested barrier family does not cover this ``(sigma, alpha)``."""


class PreconditionFailure(RuntimeError):
    """Boundary ordering required by the comparison contract is violated."""


class HypothesisFailure(RuntimeError):
    """A growth hypothesis does not hold for the supplied field."""


class QuadratureError(ArithmeticError):
    """Quadrature did not reach the requested accuracy."""


class CFLViolation(RuntimeError):
    """Explicit time step exceeds the stability bound."""


class UndefinedAtZeroGradient(ValueError):
    """Operator has no limit at ``q = 0`` and was evaluated there."""


class TransformDomainError(ValueError):
    """``f`` is not positive along the trajectory of the transform ODE."""


class SolverBreakdown(ArithmeticError):
    """A time-stepping scheme produced non-finite values or overflowed."""

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message if step is None else f"{message} (step {step})")
