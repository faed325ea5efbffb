class IllConditioned(ValueError):
    """The FRF normal matrix is numerically singular."""

    def __init__(self, message, condition_number=None, violations=()):
        super().__init__(message)
        self.condition_number = condition_number
        self.violations = tuple(violations)


class Overlap(ValueError):
    """Excited lines coincide after aliasing."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)


class LeakagePresent(ValueError):
    """Some excited frequency does not fall on a DFT bin of the record."""

    def __init__(self, message, frequencies=()):
        super().__init__(message)
        self.frequencies = tuple(frequencies)


class IdentifiabilityError(ValueError):
    """More parameters than distinct aliased input lines."""


class PoleOnExcitedLine(ValueError):
    """A parametric model is singular at one of the excited frequencies."""
