"""Exception types raised by the vrmix library."""


class VrmixError(Exception):
    """Base class for library errors."""


class InvalidInputError(VrmixError, ValueError):
    """An argument violates the documented precondition of an operation."""


class DomainError(VrmixError, ArithmeticError):
    """A mixture assigns zero probability to an atom that carries loss."""


class DegenerateKernelError(InvalidInputError):
    """A k-DPP kernel has fewer positive eigenvalues than the batch size."""
