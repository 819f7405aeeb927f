"""Complex harmonic polynomial bases and generalized Polya-Szego tensors (GPST).

Basis ordering is fixed throughout the package: columns 0..M-1 hold the traces
of Q^m = (z - r)^m + c^m and columns M..2M-1 their conjugates. All pairings are
complex-bilinear extensions of the real half-order inner product.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal, Optional

import numpy as np
import scipy.linalg

from app.core.errors import (
    InvalidMeasurementError,
    MeasurementInconsistencyError,
    OrderOutOfRangeError,
)

if TYPE_CHECKING:
    from app.core.singlelayer import BoundaryGrid, Equilibrium, MeasurementMatrix, SingleLayerMatrix

logger = logging.getLogger(__name__)

DEFAULT_IMAG_TOLERANCE = 1e-6

GpstKind = Literal["outer", "recovered", "oracle"]


def gram_from_densities(weights: np.ndarray, densities: np.ndarray, traces: np.ndarray) -> np.ndarray:
    """densities^T W traces"""
    return densities.T @ (weights[:, None] * traces)


@dataclass(frozen=True)
class HarmonicBasis:
    order: int
    center: complex
    constants: np.ndarray
    traces: np.ndarray

    def polynomial(self, m: int, points) -> np.ndarray:
        """Q^m evaluated at arbitrary points"""
        points = np.asarray(points, dtype=complex)
        return (points - self.center) ** m + self.constants[m - 1]


def build_basis(
    grid: "BoundaryGrid", eq: "Equilibrium", order: int, center: complex = 0j
) -> HarmonicBasis:
    if order < 1:
        raise OrderOutOfRangeError(f"Basis order must be >= 1, got {order}")
    powers = np.arange(1, order + 1)
    monomials = (grid.nodes[:, None] - center) ** powers[None, :]
    constants = -eq.mean(monomials)
    traces = monomials + constants[None, :]
    return HarmonicBasis(
        order=order,
        center=complex(center),
        constants=constants,
        traces=np.hstack([traces, np.conj(traces)]),
    )


@dataclass(frozen=True)
class GpstMatrix:
    """2M x 2M matrix of pairings <f_i, f_j> over the complex harmonic basis"""

    order: int
    entries: np.ndarray
    kind: GpstKind = "outer"

    def __post_init__(self):
        expected = (2 * self.order, 2 * self.order)
        if self.entries.shape != expected:
            raise OrderOutOfRangeError(
                f"GPST of order {self.order} needs shape {expected}, got {self.entries.shape}"
            )

    def _check(self, m: int) -> None:
        if not 1 <= m <= self.order:
            raise OrderOutOfRangeError(f"Index {m} outside 1..{self.order}")

    def mu(self, m: int, m_prime: int = 1) -> complex:
        """1/2 <Q^m, conj(Q^m')>"""
        self._check(m)
        self._check(m_prime)
        return complex(0.5 * self.entries[m - 1, self.order + m_prime - 1])

    def nu(self, m: int, m_prime: int = 1) -> complex:
        """1/2 <Q^m, Q^m'>"""
        self._check(m)
        self._check(m_prime)
        return complex(0.5 * self.entries[m - 1, m_prime - 1])

    def hermitian_form(self) -> np.ndarray:
        """Sesquilinear pairing <conj f_i, f_j>: the two row halves swapped"""
        m = self.order
        return np.vstack([self.entries[m:], self.entries[:m]])

    def truncated(self, order: int) -> "GpstMatrix":
        if not 1 <= order <= self.order:
            raise OrderOutOfRangeError(f"Cannot truncate order {self.order} to {order}")
        keep = np.r_[0:order, self.order : self.order + order]
        return GpstMatrix(order, self.entries[np.ix_(keep, keep)], kind=self.kind)


def gpst_matrix(single_layer: "SingleLayerMatrix", basis: HarmonicBasis) -> GpstMatrix:
    """GPST of the boundary carrying ``single_layer``; the basis traces are already mean-zero"""
    densities = single_layer.solve(basis.traces)
    entries = gram_from_densities(single_layer.grid.weights, densities, basis.traces)
    return GpstMatrix(basis.order, entries, kind="outer")


def real_gpst(gpst: GpstMatrix) -> np.ndarray:
    """Pairings in the real basis (Q^1_1..Q^M_1, Q^1_2..Q^M_2) where Q^m = Q^m_1 + i Q^m_2"""
    eye = np.eye(gpst.order)
    transform = np.block([[0.5 * eye, 0.5 * eye], [-0.5j * eye, 0.5j * eye]])
    return np.real(transform @ gpst.entries @ transform.T)


def recovered_gpst(outer: GpstMatrix, measurement: "MeasurementMatrix") -> GpstMatrix:
    """Q_gamma = Q_Gamma (Q_Gamma + R)^{-1} R, solved on a Jacobi-equilibrated system"""
    if measurement.order != outer.order:
        raise OrderOutOfRangeError(
            f"Measurement order {measurement.order} != GPST order {outer.order}"
        )
    system = outer.entries + measurement.entries
    diagonal = np.abs(np.diag(system))
    if np.any(diagonal == 0.0):
        raise MeasurementInconsistencyError("(Q + R) has a vanishing diagonal entry")
    scaling = 1.0 / np.sqrt(diagonal)
    equilibrated = scaling[:, None] * system * scaling[None, :]
    try:
        condition = float(np.linalg.cond(equilibrated))
        if not np.isfinite(condition):
            raise np.linalg.LinAlgError("infinite condition number")
        solved = scipy.linalg.solve(equilibrated, scaling[:, None] * measurement.entries)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise MeasurementInconsistencyError(f"(Q + R) is numerically singular: {e}") from e

    logger.debug(f"Equilibrated (Q + R) condition number: {condition:.3e}")
    entries = outer.entries @ (scaling[:, None] * solved)
    return GpstMatrix(outer.order, entries, kind="recovered")


@dataclass(frozen=True)
class MomentSequences:
    """mu_1..mu_M and nu_1..nu_M; index 0 holds order 1"""

    mu: np.ndarray
    nu: np.ndarray

    @property
    def order(self) -> int:
        return self.mu.size

    def truncated(self, order: int) -> "MomentSequences":
        return MomentSequences(self.mu[:order], self.nu[:order])


def extract_moments(
    gpst: GpstMatrix, imag_tolerance: Optional[float] = DEFAULT_IMAG_TOLERANCE
) -> MomentSequences:
    """Read mu_m, nu_m off the recovered GPST.

    ``imag_tolerance=None`` drops the imaginary part of mu_1 whatever its size.
    """
    if gpst.order < 2:
        raise OrderOutOfRangeError(f"Moment extraction needs order >= 2, got {gpst.order}")
    mu = np.array([gpst.mu(m) for m in range(1, gpst.order + 1)])
    nu = np.array([gpst.nu(m) for m in range(1, gpst.order + 1)])

    mu_1 = mu[0]
    if imag_tolerance is None:
        if mu_1.imag != 0.0:
            logger.warning(f"⚠ Discarding imaginary part of mu_1: {mu_1.imag:.3e}")
    elif abs(mu_1.imag) > imag_tolerance * abs(mu_1):
        raise InvalidMeasurementError(f"mu_1 is not real: {mu_1}")
    if mu_1.real <= 0.0:
        raise InvalidMeasurementError(f"mu_1 must be positive, got {mu_1.real}")
    mu[0] = mu_1.real
    return MomentSequences(mu=mu, nu=nu)
