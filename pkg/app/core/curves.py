"""Closed curves sampled on uniform parameter grids, and exterior conformal maps
given as truncated Laurent series.

Every curve is sampled at N equispaced parameters t_j = -pi + 2*pi*j/N,
j = 1..N, i.e. on (-pi, pi]. Points of the plane are complex numbers.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from matplotlib.path import Path

from app.core.errors import (
    ConfigurationError,
    InvalidDiscretizationError,
    InvalidMapError,
    NonJordanCurveError,
)

logger = logging.getLogger(__name__)

MIN_NODES = 16
INJECTIVITY_RTOL = 1e-8
FINE_GRID_NODES = 512
ROW_BLOCK = 128


def check_node_count(n: int) -> None:
    if n % 2 != 0 or n < MIN_NODES:
        raise InvalidDiscretizationError(
            f"Node count must be even and >= {MIN_NODES}, got {n}"
        )


def parameter_grid(n: int) -> np.ndarray:
    """Equispaced parameters on (-pi, pi]"""
    check_node_count(n)
    return -np.pi + 2.0 * np.pi * np.arange(1, n + 1) / n


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=complex)
    array.setflags(write=False)
    return array


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u.real * v.imag - u.imag * v.real


def _row_blocks(n: int, rows: int = ROW_BLOCK):
    for start in range(0, n, rows):
        yield np.arange(start, min(start + rows, n))


def _index_gaps(rows: np.ndarray, n: int) -> np.ndarray:
    gap = np.abs(rows[:, None] - np.arange(n)[None, :])
    return np.minimum(gap, n - gap)


def _edge_crossings(nodes: np.ndarray, step: np.ndarray, rows: np.ndarray, far: np.ndarray) -> bool:
    """Proper intersection between edges ``rows`` and the non-adjacent edges of the node polygon"""
    start_i, step_i = nodes[rows][:, None], step[rows][:, None]
    start_j, step_j = nodes[None, :], step[None, :]
    d1 = _cross(step_i, start_j - start_i)
    d2 = _cross(step_i, start_j + step_j - start_i)
    d3 = _cross(step_j, start_i - start_j)
    d4 = _cross(step_j, start_i + step_i - start_j)
    return bool(np.any((d1 * d2 < 0) & (d3 * d4 < 0) & far))


def _max_distance(nodes: np.ndarray) -> float:
    return max(float(np.abs(nodes[rows][:, None] - nodes[None, :]).max()) for rows in _row_blocks(nodes.size))


def check_injective(nodes: np.ndarray) -> None:
    """Reject node sets whose polygon is not a simple closed curve.

    Two nodes more than one grid step apart must stay further apart than
    INJECTIVITY_RTOL * diameter, and no two non-adjacent polygon edges may cross.
    Pairs are visited in blocks of ROW_BLOCK rows.
    """
    n = nodes.size
    step = np.roll(nodes, -1) - nodes
    diameter, closest, crossing = 0.0, np.inf, False
    for rows in _row_blocks(n):
        dist = np.abs(nodes[rows][:, None] - nodes[None, :])
        far = _index_gaps(rows, n) > 1
        diameter = max(diameter, float(dist.max()))
        closest = min(closest, float(dist[far].min()))
        crossing = crossing or _edge_crossings(nodes, step, rows, far)

    if diameter == 0.0:
        raise NonJordanCurveError("Curve collapses to a single point")
    if closest <= INJECTIVITY_RTOL * diameter:
        raise NonJordanCurveError(
            f"Curve is not injective: distinct nodes {closest:.3e} apart "
            f"(diameter {diameter:.3e})"
        )
    if crossing:
        raise NonJordanCurveError("Curve self-intersects")


@dataclass(frozen=True)
class ParamCurve:
    """Counterclockwise regular Jordan curve sampled at N equispaced parameters.

    ``derivatives`` holds dx/dt at the nodes (per unit parameter).
    """

    nodes: np.ndarray
    derivatives: np.ndarray
    counterclockwise: bool = field(init=False, default=True)

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        derivatives = _frozen(self.derivatives)
        if nodes.ndim != 1 or nodes.shape != derivatives.shape:
            raise InvalidDiscretizationError(
                f"nodes and derivatives must be 1-d arrays of equal length, "
                f"got {nodes.shape} and {derivatives.shape}"
            )
        check_node_count(nodes.size)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "derivatives", derivatives)

        speed = np.abs(derivatives)
        if speed.min() <= 1e-12 * max(speed.max(), np.finfo(float).tiny):
            raise NonJordanCurveError(
                f"Parameterization is not regular: |x'(t)| vanishes at "
                f"t={self.params[int(np.argmin(speed))]:.6f}"
            )
        check_injective(nodes)

        if self.signed_area() <= 0.0:
            raise NonJordanCurveError("Curve must be oriented counterclockwise")
        object.__setattr__(self, "counterclockwise", True)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def params(self) -> np.ndarray:
        return parameter_grid(self.size)

    @property
    def speed(self) -> np.ndarray:
        return np.abs(self.derivatives)

    def signed_area(self) -> float:
        h = 2.0 * np.pi / self.size
        return float(0.5 * h * np.sum(np.imag(np.conj(self.nodes) * self.derivatives)))

    def arc_length(self) -> float:
        return float(2.0 * np.pi / self.size * self.speed.sum())

    def diameter(self) -> float:
        return _max_distance(self.nodes)

    def scaled(self, factor: float) -> "ParamCurve":
        """Dilation about the origin"""
        if factor <= 0:
            raise ConfigurationError(f"Scale factor must be positive, got {factor}")
        return ParamCurve(self.nodes * factor, self.derivatives * factor)

    def contains(self, points) -> np.ndarray:
        """Point-in-curve test against the node polygon"""
        xy = np.column_stack([self.nodes.real, self.nodes.imag])
        polygon = Path(np.vstack([xy, xy[:1]]), closed=True)
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        return polygon.contains_points(np.column_stack([pts.real, pts.imag]))


def ellipse(semi_major: float, semi_minor: float, n: int) -> ParamCurve:
    """t -> (a cos t, b sin t) sampled at n nodes"""
    if not semi_major >= semi_minor > 0:
        raise ConfigurationError(
            f"Ellipse needs semi_major >= semi_minor > 0, got {semi_major}, {semi_minor}"
        )
    t = parameter_grid(n)
    nodes = semi_major * np.cos(t) + 1j * semi_minor * np.sin(t)
    derivatives = -semi_major * np.sin(t) + 1j * semi_minor * np.cos(t)
    return ParamCurve(nodes, derivatives)


@dataclass(frozen=True)
class LaurentMap:
    """phi(z) = a1 z + a0 + sum_{m=1..M} a_{-m} z^{-m}

    ``negative`` holds a_{-1}, ..., a_{-M}.
    """

    a1: complex
    a0: complex = 0j
    negative: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "a1", complex(self.a1))
        object.__setattr__(self, "a0", complex(self.a0))
        object.__setattr__(self, "negative", tuple(complex(c) for c in self.negative))
        if self.a1 == 0:
            raise InvalidMapError("Leading coefficient a1 must be non-zero")

    @classmethod
    def create(
        cls,
        a1: complex,
        a0: complex = 0j,
        negative: Sequence[complex] = (),
        canonical: bool = False,
    ) -> "LaurentMap":
        laurent = cls(a1, a0, tuple(negative))
        return canonicalize(laurent) if canonical else laurent

    @classmethod
    def from_coefficients(cls, coefficients: Sequence[complex]) -> "LaurentMap":
        """Build from the descending sequence a1, a0, a_{-1}, ..."""
        coefficients = list(coefficients)
        if len(coefficients) < 2:
            raise InvalidMapError("Need at least a1 and a0")
        return cls(coefficients[0], coefficients[1], tuple(coefficients[2:]))

    @property
    def order(self) -> int:
        return len(self.negative)

    @property
    def is_canonical(self) -> bool:
        return self.a1.imag == 0.0 and self.a1.real > 0.0

    def coefficients(self) -> np.ndarray:
        """Descending coefficients [a1, a0, a_{-1}, ..., a_{-M}]"""
        return np.array([self.a1, self.a0, *self.negative], dtype=complex)

    def coefficient(self, k: int) -> complex:
        if k == 1:
            return self.a1
        if k == 0:
            return self.a0
        if -self.order <= k < 0:
            return self.negative[-k - 1]
        return 0j

    def truncated(self, order: int) -> "LaurentMap":
        return LaurentMap(self.a1, self.a0, self.negative[: max(order, 0)])

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        w = 1.0 / z
        tail = np.polynomial.polynomial.polyval(w, [0j, *self.negative])
        return self.a1 * z + self.a0 + tail

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        w = 1.0 / z
        weighted = [0j] + [m * c for m, c in enumerate(self.negative, start=1)]
        return self.a1 - w * np.polynomial.polynomial.polyval(w, weighted)


def canonicalize(laurent: LaurentMap) -> LaurentMap:
    """Rotate the parameter so that a1 becomes real and positive"""
    theta = -np.angle(laurent.a1)
    negative = [c * np.exp(-1j * m * theta) for m, c in enumerate(laurent.negative, start=1)]
    return LaurentMap(abs(laurent.a1), laurent.a0, tuple(negative))


def from_laurent(laurent: LaurentMap, n: int) -> ParamCurve:
    """Sample t -> phi(e^{it}) at n nodes"""
    z = np.exp(1j * parameter_grid(n))
    return ParamCurve(laurent(z), 1j * z * laurent.derivative(z))


def check_map_injective(laurent: LaurentMap, n: int = FINE_GRID_NODES) -> ParamCurve:
    """Injectivity of t -> phi(e^{it}) on a fine grid; returns the sampled curve"""
    curve = from_laurent(laurent, n)
    logger.debug(f"Laurent map of order {laurent.order} passed the injectivity check on {n} nodes")
    return curve


@dataclass(frozen=True)
class LaurentSeriesPower:
    """Coefficients a_k^n of phi^n, stored descending from k = n"""

    exponent: int
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))

    @property
    def lowest(self) -> int:
        return self.exponent - self.coeffs.size + 1

    def coefficient(self, k: int) -> complex:
        if k > self.exponent or k < self.lowest:
            return 0j
        return complex(self.coeffs[self.exponent - k])

    def as_dict(self) -> dict:
        return {self.exponent - j: complex(c) for j, c in enumerate(self.coeffs)}


def power_coeffs(laurent: LaurentMap, n: int) -> LaurentSeriesPower:
    """Exact n-fold convolution of the coefficient sequence"""
    if n < 1:
        raise ConfigurationError(f"Power must be >= 1, got {n}")
    base = laurent.coefficients()
    coeffs = base
    for _ in range(n - 1):
        coeffs = np.convolve(coeffs, base)
    return LaurentSeriesPower(n, coeffs)


def invert_map(laurent: LaurentMap, order: int) -> LaurentMap:
    """Laurent coefficients of phi^{-1} down to z^{-order}.

    b1 = 1/a1, b0 = -a0/a1 and b_{-m} = -(1/m) a_{-1}^m, where a_{-1}^m is the
    z^{-1} coefficient of phi^m.
    """
    base = laurent.coefficients()
    power = np.array([1.0 + 0j])
    negative = []
    for m in range(1, order + 1):
        power = np.convolve(power, base)
        # descending storage: exponent m at index 0, so z^{-1} sits at index m + 1
        residue = power[m + 1] if power.size > m + 1 else 0j
        negative.append(-residue / m)
    return LaurentMap(1.0 / laurent.a1, -laurent.a0 / laurent.a1, tuple(negative))


def _series_inverse(series: np.ndarray, degree: int) -> np.ndarray:
    inverse = np.zeros(degree + 1, dtype=complex)
    inverse[0] = 1.0 / series[0]
    for k in range(1, degree + 1):
        upto = min(k, series.size - 1)
        inverse[k] = -np.dot(series[1 : upto + 1], inverse[k - upto : k][::-1]) / series[0]
    return inverse


def _series_mul(a: np.ndarray, b: np.ndarray, degree: int) -> np.ndarray:
    product = np.convolve(a, b)[: degree + 1]
    return np.pad(product, (0, degree + 1 - product.size))


def compose(outer: LaurentMap, inner: LaurentMap, order: int) -> LaurentMap:
    """Truncated Laurent coefficients of z -> outer(inner(z)) down to z^{-order}.

    With w = 1/z and inner(z) = b1 z (1 + u(w)), the composition reads
    z * T(w); coefficient T_j belongs to z^{1-j}.
    """
    degree = order + 1
    b1 = inner.a1
    u = np.zeros(degree + 1, dtype=complex)
    u[1] = inner.a0 / b1
    for k, c in enumerate(inner.negative, start=1):
        if k + 1 <= degree:
            u[k + 1] = c / b1
    one_plus_u = u.copy()
    one_plus_u[0] = 1.0

    total = outer.a1 * b1 * one_plus_u
    total[1] += outer.a0
    reciprocal = _series_inverse(one_plus_u, degree)
    power = np.zeros(degree + 1, dtype=complex)
    power[0] = 1.0
    for m, c in enumerate(outer.negative, start=1):
        power = _series_mul(power, reciprocal, degree)
        if m + 1 > degree:
            break
        term = np.zeros(degree + 1, dtype=complex)
        term[m + 1 :] = power[: degree - m]
        total += c * b1 ** (-m) * term
    return LaurentMap(total[0], total[1], tuple(total[2:]))
