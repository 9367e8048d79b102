class ModelError(RuntimeError):
    """A model produced output that violates its own definition."""


class NumericalError(RuntimeError):
    """A numerical procedure did not reach its stated accuracy."""
