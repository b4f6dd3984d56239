"""Exception hierarchy shared by all droopreg modules."""


class DroopRegError(Exception):
    """Base class for every error raised by this package."""


class NonPhysicalVoltage(DroopRegError):
    """A squared voltage came out non-positive; inputs are far outside model validity."""


class DegenerateSegment(DroopRegError):
    """A droop ramp has zero width while the saturation level is positive."""


class IndexRangeUnavailable(DroopRegError):
    """The impedance maxima ranges used by the disturbance bound are empty (N = 1)."""


class Infeasible(DroopRegError):
    """The regulation condition cannot be met for a window.

    ``margin`` holds eps - (delta_phi + eps_y), negative when violated.
    """

    def __init__(self, message, margin=None, window=None):
        super().__init__(message)
        self.margin = margin
        self.window = window


class ZeroDenominator(DroopRegError):
    """Both the feeder norm and the saturation bound vanish in the slope bound."""


class InfeasibleScenario(DroopRegError):
    """Load profiles violate the bounds declared by the window schedule."""


class MismatchedScenario(DroopRegError):
    """Two metric reports do not come from the same loads / horizon."""


class ConfigParseError(DroopRegError):
    """The config text could not be parsed."""


class ConfigValidationError(DroopRegError):
    """The parsed config violates the schema."""
