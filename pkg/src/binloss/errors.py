"""Exception hierarchy.

Domain errors (bad densities, empty bins, sampler envelope) are kept apart
from input/config errors so callers such as the command line front end can
map them to distinct exit codes.
"""


class BinLossError(Exception):
    """Base class for every error raised by this package."""


class InputError(BinLossError, ValueError):
    """Malformed arguments: wrong shapes, bad parameter ranges, bad config."""


class ShapeError(InputError):
    pass


class OutsideSpaceError(InputError):
    def __init__(self, point=None, message="point outside attribute space"):
        self.point = point
        if point is not None:
            message = f"{message}: {point}"
        super().__init__(message)


class PartitionError(InputError):
    pass


class ZeroPerturbationError(InputError):
    def __init__(self, message="zero perturbation"):
        super().__init__(message)


class ConfigError(InputError):
    pass


class DomainError(BinLossError, ArithmeticError):
    """The numbers themselves are unusable (nonpositive densities and so on)."""


class NonpositiveDensityError(DomainError):
    def __init__(self, location=None, value=None, message="nonpositive mean density"):
        self.location = location
        self.value = value
        if location is not None:
            message = f"{message} {value!r} at {location}"
        super().__init__(message)


class EmptyBinError(DomainError):
    def __init__(self, bins=(), message="empty bin mean"):
        self.bins = tuple(int(b) for b in bins)
        if self.bins:
            message = f"{message} in bin(s) {list(self.bins)}"
        super().__init__(message)


class EnvelopeExceededError(DomainError):
    def __init__(self, value, envelope):
        self.value = value
        self.envelope = envelope
        super().__init__(
            f"envelope exceeded: density {value!r} > envelope {envelope!r}; "
            "refine the envelope grid (raise nodes_per_axis)"
        )
