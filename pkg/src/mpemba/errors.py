"""Exception hierarchy shared across the package."""


class MpembaError(Exception):
    """Base class for all package errors."""


class DimensionError(MpembaError, ValueError):
    pass


class SystemTooLargeError(MpembaError, ValueError):
    pass


class InvalidStateError(MpembaError, ValueError):
    pass


class IntegrationError(MpembaError, RuntimeError):
    pass


class StepSizeError(MpembaError, ValueError):
    pass


class NonDiagonalizableError(MpembaError, ArithmeticError):
    pass


class NoCoherenceError(MpembaError, ValueError):
    pass


class PartnerNotFoundError(MpembaError, RuntimeError):
    pass


class PreconditionError(MpembaError, ValueError):
    pass


class UnsupportedCaseError(MpembaError, ValueError):
    pass


class CutoffLeakageError(MpembaError, RuntimeError):
    pass


class InvariantViolation(MpembaError, RuntimeError):
    """A physics invariant failed during a run (CLI exit code 3)."""


class ConfigError(MpembaError, ValueError):
    """Bad experiment configuration (CLI exit code 2)."""
