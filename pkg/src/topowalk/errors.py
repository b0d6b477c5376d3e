"""Exception types shared across modules (the CLI maps them to exit codes)."""


class CapacityError(RuntimeError):
    """Requested problem size exceeds a documented capacity cap."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or returned invalid values."""


class DegenerateTrappedPairsError(RuntimeError):
    """Top overlap pairs cannot be disambiguated within tolerance."""

    def __init__(self, message: str, ranked_overlaps=None):
        super().__init__(message)
        self.ranked_overlaps = ranked_overlaps


class SeriesTooShortError(ValueError):
    """Time series too short for the requested spectral estimate."""
