"""Exception hierarchy shared by all solver layers."""


class SolverError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(SolverError, ValueError):
    """Configuration or argument outside its documented domain."""


class VacuumError(SolverError):
    """Velocity magnitude reached the vacuum limit ``|q|^2 >= 2 B0``."""


class StagnationError(SolverError):
    """Radial velocity vanished or reversed where it must stay positive."""


class ChokedError(SolverError):
    """Prescribed mass flux exceeds the sonic maximum at this radius."""


class NotSupersonicError(SolverError):
    """State expected to be supersonic is not."""


class PressureOutOfRangeError(SolverError):
    """Exit pressure outside the band that places a shock in the nozzle."""

    def __init__(self, p_c, p_min, p_max):
        self.p_c, self.p_min, self.p_max = p_c, p_min, p_max
        super().__init__(
            f"exit pressure {p_c:.12g} outside ({p_min:.12g}, {p_max:.12g})")


class OutOfDomainError(SolverError):
    """Point outside the region on which a map is defined."""


class EllipticityLost(SolverError):
    """Coefficient matrix not positive definite (flow not subsonic)."""


class SingularSystem(SolverError):
    """Linear system has no unique solution."""


class NonConvergence(SolverError):
    """Iterative procedure failed to reach its tolerance."""


class ReversedFlowError(SolverError):
    """Streamwise flux coefficient is not positive somewhere."""


class AdmissibilityError(SolverError):
    """Shock violates the entropy (compressive) condition."""


class FrontOutOfRangeError(SolverError):
    """Front update clipped too many nodes into the allowed band."""


class MaxIterations(NonConvergence):
    """Outer iteration cap reached; ``report`` holds the best iterate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
