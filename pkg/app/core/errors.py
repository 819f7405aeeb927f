"""Exception hierarchy shared by the numerical core, the services and the CLI."""


class CavityError(Exception):
    """Base class for every failure raised by the reconstruction pipeline"""

    exit_code = 3


class ConfigurationError(CavityError):
    """Invalid run configuration or user supplied parameter"""

    exit_code = 2


class InvalidDiscretizationError(CavityError):
    """Node count is odd or too small for the spectral quadrature"""


class NonJordanCurveError(CavityError):
    """Sampled curve is degenerate, self-intersecting or clockwise"""


class InvalidMapError(CavityError):
    """Laurent map violates its invariants (e.g. a1 == 0)"""


class GeometryError(CavityError):
    """Two boundaries intersect, touch or are not nested as required"""


class SingularGeometryError(GeometryError):
    """Nodes of a curve coincide"""


class CapacityOneError(CavityError):
    """Logarithmic capacity equals one: the single layer operator is not invertible"""


class MeasurementInconsistencyError(CavityError):
    """(Q + R) is numerically singular"""


class InvalidMeasurementError(CavityError):
    """Recovered moments violate mu_1 > 0"""


class InvalidMomentsError(CavityError):
    """Moments handed to the inversion formula are not admissible"""


class OrderOutOfRangeError(CavityError):
    """Multi-index order outside the supported range"""


class OracleFailureError(CavityError):
    """Independent oracle computation did not converge"""


class ConditioningWarning(UserWarning):
    """Dense solve with a condition estimate above the configured threshold"""
