"""Exception types shared across the package.

Infeasibility of a linear system is reported by ``gf2.solve`` returning
``None``; the :class:`Infeasible` exception is reserved for operations whose
contract is to *construct* something (e.g. the counterexample builder).
"""


class GowersFormsError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(GowersFormsError):
    """Operands live in incompatible spaces (wrong dim or arity)."""


class Infeasible(GowersFormsError):
    """A construction's underlying linear system has no solution."""


class NotSymmetric(GowersFormsError):
    """A symmetry precondition does not hold."""


class NotStronglySymmetric(GowersFormsError):
    """A strong-symmetry precondition does not hold."""


class BudgetExceeded(GowersFormsError):
    """An exhaustive enumeration would exceed the configured budget."""


class SizeGuard(GowersFormsError):
    """Inputs fall outside the exact method's guarded domain."""


class SolverFailed(GowersFormsError):
    """The coefficient solver could not satisfy its constraints."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CertificateInvalid(GowersFormsError):
    """A supplied decomposition certificate does not verify."""


class WitnessNotFound(GowersFormsError):
    """No point satisfying the requested constraints was found."""

    def __init__(self, message, trials=0, hypothesis_ok=None):
        super().__init__(message)
        self.trials = trials
        self.hypothesis_ok = hypothesis_ok


class PolicyUndecided(GowersFormsError):
    """The rank-proxy policy could not decide a rank question."""


class EqualityViolated(GowersFormsError):
    """A coefficient equality asserted by a driver failed."""

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class StepFailed(GowersFormsError):
    """A driver step could not complete; carries partial progress."""

    def __init__(self, step, message, partial=None, diagnostics=None):
        super().__init__(f"{step}: {message}")
        self.step = step
        self.partial = partial
        self.diagnostics = diagnostics or {}
