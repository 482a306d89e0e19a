"""Exception types shared across the package."""


class TandemflowError(Exception):
    """Base class for all package errors."""


class InvalidDistributionError(TandemflowError):
    """A phase-type representation violates its structural invariants."""


class UnstableSystemError(TandemflowError):
    """A station's utilization makes the queue unstable."""


class ZeroVarianceError(TandemflowError):
    """A powered series is (near-)constant, so correlations are undefined."""


class TrainingDivergedError(TandemflowError):
    """Training hit a non-finite loss; carries diagnostics in args."""


class SchemaError(TandemflowError):
    """An input file does not match the expected format or version."""
