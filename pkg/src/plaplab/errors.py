"""Exception types shared across the package."""


class PlaplabError(Exception):
    """Base class for all package-specific errors."""


class OutOfDomainError(PlaplabError):
    """A stencil or evaluation point falls outside its admissible index range."""


class InvalidParameterError(PlaplabError, ValueError):
    """A parameter violates its admissible range (exponents, restrictions, ...)."""


class InvalidDomainError(PlaplabError):
    """A requested evaluation domain is incompatible with a solution's validity domain."""


class OracleVerificationError(PlaplabError):
    """A closed-form reference solution failed its substitution self-check."""


class SolverFailure(PlaplabError):
    """The time stepper failed to converge; carries the offending step index."""

    def __init__(self, message, step_index=None, log=None):
        super().__init__(message)
        self.step_index = step_index
        self.log = log


class InternalCoefficientError(PlaplabError):
    """A frozen diffusivity came out non-positive; indicates a coefficient bug."""


class InvalidTestFunctionError(PlaplabError):
    """A test function is not compactly supported where required."""


class InvalidSupportError(PlaplabError):
    """A cutoff support box touches or leaves the computational domain."""


class WrongRegimeError(PlaplabError):
    """An estimate was requested outside the exponent regime it is valid in."""


class PreconditionError(PlaplabError):
    """An operation's precondition on its input data is violated."""


class InvalidPlanError(PlaplabError):
    """A sweep plan is malformed (too few entries, non-decreasing values, ...)."""


class FieldFormatError(PlaplabError):
    """A field file is malformed; the message names the missing or bad section."""


class ConfigError(PlaplabError):
    """An experiment configuration is invalid; carries the offending field path."""

    def __init__(self, message, field_path=None):
        super().__init__(message)
        self.field_path = field_path
