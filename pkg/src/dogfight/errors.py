"""Exception hierarchy shared by all simulation modules."""


class DogfightError(Exception):
    """Base class; the CLI turns these into a nonzero exit with a message."""


class SingularityError(DogfightError):
    """Euler kinematics evaluated at (or too near) pitch = +-90 deg."""


class ZeroVelocityError(DogfightError):
    """Air data requested for a body at rest."""


class CoincidentPositionError(DogfightError):
    """Relative geometry undefined because two positions coincide."""


class NoConvergenceError(DogfightError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class NonFiniteStateError(DogfightError):
    """Integration produced NaN or inf."""


class ZeroLoadError(DogfightError):
    """Bank angle undefined for a zero load vector."""


class EpisodeDoneError(DogfightError):
    """step() called on a finished episode."""


class TableError(DogfightError):
    """Malformed aerodynamic or engine table file."""


class CheckpointError(DogfightError):
    """Unreadable or incompatible network checkpoint."""


class NonFiniteLossError(DogfightError):
    """A training step produced a NaN or infinite loss."""
