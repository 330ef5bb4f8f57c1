"""Exception hierarchy shared by every engine in the toolkit."""


class SzegoError(Exception):
    """Base class for all toolkit failures."""


# --- jet arithmetic ---

class JetError(SzegoError):
    pass


class SingularArgumentError(JetError):
    """A log, root or division argument vanishes at the base point."""


class DivisionByZeroJetError(SingularArgumentError):
    pass


class JetDomainError(JetError):
    """A function was applied outside its real domain (e.g. fractional power of a negative number)."""


class OrderExceededError(JetError):
    """A derivative of higher order than the jet retains was requested."""


class ContextMismatchError(JetError):
    pass


# --- implicit solves ---

class SolveError(SzegoError):
    pass


class NonConvergenceError(SolveError):
    pass


class DegenerateDerivativeError(SolveError):
    pass


# --- charts and curvature ---

class GeometryError(SzegoError):
    pass


class NotPseudoconvexError(GeometryError):
    """The Levi matrix is not positive definite at the requested point."""


class SingularMetricError(GeometryError):
    pass


class OverlapError(GeometryError):
    """A point lies outside the domain shared by two charts."""


# --- models ---

class ModelError(SzegoError):
    pass


class InadmissiblePresetError(ModelError):
    pass


class QuadratureToleranceError(ModelError):
    pass


class EmptyStratumError(ModelError):
    pass


class InvalidDeltaError(ModelError):
    pass


# --- experiments ---

class ExperimentError(SzegoError):
    pass


class ConfigError(ExperimentError):
    pass


class RankDeficiencyError(ExperimentError):
    pass


class UnsupportedTruncationError(ExperimentError):
    pass


class AliasingError(ExperimentError):
    """Doubling the quadrature order changed the result beyond tolerance."""
