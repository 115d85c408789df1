"""Exception types shared across the simulator and learner."""


class FlyrlError(Exception):
    pass


class ParameterError(FlyrlError, ValueError):
    """Physical or configuration parameter outside its admissible domain."""


class GeometryError(FlyrlError):
    """A point or wing segment lies outside the computational grid."""


class TimeStepError(FlyrlError):
    """The requested time step violates the advective CFL bound."""

    def __init__(self, message, cfl):
        super().__init__(message)
        self.cfl = cfl


class SolverError(FlyrlError):
    """Pressure Poisson solve failed to reach its residual tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class StabilityError(FlyrlError):
    """Explicit structural integration blew up; sub-step the wing."""


class CouplingDivergenceError(FlyrlError):
    """Partitioned FSI iteration did not converge within its cap."""

    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = list(residuals)


class TrainingError(FlyrlError):
    """Non-finite gradients or parameters inside the learner."""


class ConfigError(FlyrlError):
    def __init__(self, message, line=None, key=None):
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.message = message
        self.line = line
        self.key = key


class CheckpointError(FlyrlError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass
