"""Exception hierarchy shared by the solvers and the command-line front end."""


class CloudChamberError(Exception):
    """Base class for all errors raised by this package."""


class InvalidChannel(CloudChamberError, ValueError):
    pass


class InvalidDetector(CloudChamberError, ValueError):
    pass


class OverlappingSpins(InvalidDetector):
    """Spin positions are not strictly increasing."""


class ThresholdDegeneracy(CloudChamberError, ValueError):
    """The energy sits on a channel threshold, where k_c = 0 and the
    plane-wave pair of that channel collapses to a single function."""

    def __init__(self, energy, threshold):
        self.energy = energy
        self.threshold = threshold
        super().__init__(
            f"energy {energy!r} coincides with channel threshold {threshold!r}; "
            "perturb the energy"
        )


class ClosedChannel(CloudChamberError, ValueError):
    pass


class SingularSystem(CloudChamberError, ArithmeticError):
    def __init__(self, message, condition=None):
        self.condition = condition
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)


class UnitarityViolation(CloudChamberError, ArithmeticError):
    def __init__(self, defect, tolerance):
        self.defect = defect
        self.tolerance = tolerance
        super().__init__(
            f"flux unitarity defect {defect:.3e} exceeds {tolerance:.1e}; "
            "the solve is unreliable"
        )


class SpinCollision(InvalidDetector):
    """Two spins map to the same grid point."""


class SpinOutsideGrid(InvalidDetector):
    pass


class ConvergenceFailure(CloudChamberError, RuntimeError):
    pass


class ConfigError(CloudChamberError, ValueError):
    pass
