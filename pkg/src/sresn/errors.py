"""Exception types shared across the package."""


class SresnError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SresnError):
    """Invalid, inconsistent, or unknown configuration."""


class IntegrationDivergedError(SresnError):
    """A fixed-step integration produced a non-finite value."""

    def __init__(self, step_index: int):
        self.step_index = step_index
        super().__init__(f"integration diverged at step {step_index}")


class OutOfDomainError(SresnError):
    """A requested evaluation point lies outside the available data."""


class StateDivergedError(SresnError):
    """A network state left the finite/bounded region during evolution."""

    def __init__(self, step_index: int, neuron_index: int | None = None):
        self.step_index = step_index
        self.neuron_index = neuron_index
        where = f"step {step_index}"
        if neuron_index is not None:
            where += f", neuron {neuron_index}"
        super().__init__(f"state diverged at {where}")


class NumericalFailureError(SresnError):
    """A numerical routine (SVD, QR, ...) failed to produce a result."""


class IllConditionedError(NumericalFailureError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot_index: int):
        self.pivot_index = pivot_index
        super().__init__(
            f"matrix not positive definite: non-positive pivot at index {pivot_index}"
        )


class ZeroNormError(SresnError):
    """Relative error is undefined because the reference vector has zero norm."""
