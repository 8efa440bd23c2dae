"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes or phase-space dimensions do not agree."""


class CapacityError(RuntimeError):
    """A problem exceeds the size limits of an exact solver or enumeration."""


class NumericalBlowUpError(FloatingPointError):
    """Non-finite values appeared during time integration."""

    def __init__(self, step, sample=None):
        self.step = step
        self.sample = sample
        where = f" (sample {sample})" if sample is not None else ""
        super().__init__(f"non-finite state after integration step {step}{where}")


class UnsupportedKernelError(TypeError):
    """Operation requires a kernel variant with extra structure."""


class TransportSolverError(RuntimeError):
    """The transportation solver failed or its optimality certificate did not hold."""
