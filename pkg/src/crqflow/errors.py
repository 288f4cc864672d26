"""Exception hierarchy; the experiment runner maps these onto exit codes."""


class CRFlowError(Exception):
    """Base class."""


class ValidationError(CRFlowError, ValueError):
    """Bad input or configuration (exit code 2)."""


class NumericalAbort(CRFlowError, ArithmeticError):
    """A numerical safeguard fired (exit code 3)."""


class CertificationError(NumericalAbort):
    """A quadrature or basis table failed its a posteriori check."""


class OverflowGuardError(NumericalAbort):
    """exp(2u) left the trustworthy double-precision range."""


class ConstraintDriftError(NumericalAbort):
    """The flow left the constraint set in a way constant shifts cannot repair."""


class StepUnderflowError(NumericalAbort):
    """The step-size controller shrank the step below its floor."""


class NonConvergence(CRFlowError):
    """An iteration reached its budget without meeting its tolerance (exit code 4)."""
