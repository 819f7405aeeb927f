"""Nystrom discretization of the logarithmic single layer potential on closed curves.

Densities are nodal values per unit arc length, traces are nodal values of the
potential. The kernel is the fundamental solution of -Laplace in the plane,
G(x) = -log|x| / (2 pi). The weakly singular self-interaction is integrated with
the spectral log-splitting rule on the uniform grid (Kress); interactions between
two disjoint curves use the plain trapezoidal rule.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg

from app.config import get_settings
from app.core.curves import ParamCurve
from app.core.errors import (
    CapacityOneError,
    ConditioningWarning,
    GeometryError,
    SingularGeometryError,
)
from app.core.gpst import GpstMatrix, HarmonicBasis, build_basis, gram_from_densities

logger = logging.getLogger(__name__)

RESCALE_TARGET_DIAMETER = 0.9
CAPACITY_ONE_TOLERANCE = 1e-10
TOUCH_RTOL = 1e-8


def kernel(x) -> np.ndarray:
    """G(x) = -log|x| / (2 pi) for complex x"""
    return -np.log(np.abs(x)) / (2.0 * np.pi)


# ---------------------------------------------------------------------------
# Grids and dense factorizations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryGrid:
    """Quadrature carrier of a curve: arc-length weights and outward unit normals"""

    curve: ParamCurve
    weights: np.ndarray
    normals: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return self.curve.nodes

    @property
    def size(self) -> int:
        return self.curve.size


def make_grid(curve: ParamCurve) -> BoundaryGrid:
    speed = curve.speed
    weights = 2.0 * np.pi / curve.size * speed
    normals = -1j * curve.derivatives / speed
    return BoundaryGrid(curve=curve, weights=weights, normals=normals)


@dataclass(frozen=True)
class DenseFactorization:
    """LU factors of a dense real matrix together with its 1-norm condition number"""

    label: str
    lu: tuple
    condition: float

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs)
        if np.iscomplexobj(rhs):
            real = scipy.linalg.lu_solve(self.lu, rhs.real)
            imag = scipy.linalg.lu_solve(self.lu, rhs.imag)
            return real + 1j * imag
        return scipy.linalg.lu_solve(self.lu, rhs)


def factorize(
    matrix: np.ndarray,
    label: str,
    error_cls: type = SingularGeometryError,
    threshold: Optional[float] = None,
) -> DenseFactorization:
    """LU-factorize ``matrix``; warn when ill-conditioned, raise ``error_cls`` when singular."""
    if threshold is None:
        threshold = get_settings().condition_warning_threshold
    try:
        condition = float(np.linalg.cond(matrix, 1))
    except np.linalg.LinAlgError:
        condition = np.inf
    if not np.isfinite(condition):
        raise error_cls(f"{label} matrix is singular")
    if condition > threshold:
        message = f"{label} matrix is ill-conditioned (cond_1 = {condition:.3e})"
        logger.warning(f"⚠ {message}")
        warnings.warn(message, ConditioningWarning, stacklevel=2)
    else:
        logger.debug(f"{label} matrix factorized, cond_1 = {condition:.3e}")
    return DenseFactorization(label=label, lu=scipy.linalg.lu_factor(matrix), condition=condition)


# ---------------------------------------------------------------------------
# Single layer operator and equilibrium
# ---------------------------------------------------------------------------


def _log_weights(n: int) -> np.ndarray:
    """First column of the circulant quadrature for the log(4 sin^2((t - s)/2)) kernel"""
    half = n // 2
    d = np.arange(n)
    m = np.arange(1, half)
    angles = np.outer(d, m) * np.pi / half
    column = -(2.0 * np.pi / half) * (np.cos(angles) / m).sum(axis=1)
    column -= (np.pi / half**2) * np.cos(d * np.pi)
    return column


@dataclass(frozen=True)
class SingleLayerMatrix:
    """Discrete single layer trace operator on one curve.

    ``matrix @ density`` gives the nodal trace. ``diag(weights) @ matrix`` is
    symmetric up to quadrature error.
    """

    grid: BoundaryGrid
    matrix: np.ndarray

    @cached_property
    def factorization(self) -> DenseFactorization:
        return factorize(self.matrix, "single layer", error_cls=CapacityOneError)

    @property
    def condition(self) -> float:
        return self.factorization.condition

    def apply(self, density: np.ndarray) -> np.ndarray:
        return self.matrix @ density

    def solve(self, trace: np.ndarray) -> np.ndarray:
        return self.factorization.solve(trace)


def assemble_single_layer(grid: BoundaryGrid) -> SingleLayerMatrix:
    curve = grid.curve
    n = curve.size
    t = curve.params
    x = curve.nodes

    diff = x[:, None] - x[None, :]
    off_diagonal = ~np.eye(n, dtype=bool)
    if np.any(np.abs(diff[off_diagonal]) == 0.0):
        raise SingularGeometryError("Curve nodes coincide")

    sin2 = 4.0 * np.sin((t[:, None] - t[None, :]) / 2.0) ** 2
    smooth = np.empty((n, n))
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth[off_diagonal] = -np.log(np.abs(diff[off_diagonal]) ** 2 / sin2[off_diagonal]) / (4.0 * np.pi)
    np.fill_diagonal(smooth, -np.log(curve.speed) / (2.0 * np.pi))

    singular = -scipy.linalg.circulant(_log_weights(n)) / (4.0 * np.pi)
    matrix = (singular + 2.0 * np.pi / n * smooth) * curve.speed[None, :]
    return SingleLayerMatrix(grid=grid, matrix=matrix)


@dataclass(frozen=True)
class Equilibrium:
    """Equilibrium density of a curve with its logarithmic capacity"""

    grid: BoundaryGrid
    density: np.ndarray
    capacity: float
    constant_trace: float

    def mean(self, f: np.ndarray):
        """<e, f>: the weighted pairing of the equilibrium density with nodal traces"""
        return (self.grid.weights * self.density) @ f

    def project(self, f: np.ndarray) -> np.ndarray:
        return f - self.mean(f)


def equilibrium(single_layer: SingleLayerMatrix) -> Equilibrium:
    grid = single_layer.grid
    n = grid.size
    augmented = np.zeros((n + 1, n + 1))
    augmented[:n, :n] = single_layer.matrix
    augmented[:n, n] = -1.0
    augmented[n, :n] = grid.weights
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    try:
        solution = scipy.linalg.solve(augmented, rhs)
    except np.linalg.LinAlgError as e:
        raise CapacityOneError(f"Equilibrium system is singular: {e}") from e

    constant = float(solution[n])
    if abs(constant) < CAPACITY_ONE_TOLERANCE:
        raise CapacityOneError(
            "Logarithmic capacity is one; rescale the geometry before assembly"
        )
    capacity = float(np.exp(-2.0 * np.pi * constant))
    logger.debug(f"Equilibrium density computed, capacity={capacity:.12f}")
    return Equilibrium(grid=grid, density=solution[:n], capacity=capacity, constant_trace=constant)


def project(eq: Equilibrium, f: np.ndarray) -> np.ndarray:
    """Pi f = f - <e, f> 1"""
    return eq.project(f)


def half_order_gram(
    single_layer: SingleLayerMatrix, eq: Equilibrium, f: np.ndarray, g: np.ndarray
) -> np.ndarray:
    """Matrix of <f_i, g_j>_{1/2} = (S^{-1} Pi f_i)^T W (Pi g_j), complex-bilinear"""
    densities = single_layer.solve(eq.project(f))
    return gram_from_densities(single_layer.grid.weights, densities, eq.project(g))


def half_order_inner(
    single_layer: SingleLayerMatrix, eq: Equilibrium, f: np.ndarray, g: np.ndarray
) -> complex:
    return complex(half_order_gram(single_layer, eq, f[:, None], g[:, None])[0, 0])


def ritz_values(single_layer: SingleLayerMatrix) -> np.ndarray:
    """Eigenvalues of q -> q^T W S q restricted to densities of zero total mass"""
    weights = single_layer.grid.weights
    form = weights[:, None] * single_layer.matrix
    form = 0.5 * (form + form.T)
    basis = scipy.linalg.null_space(weights[None, :])
    return scipy.linalg.eigvalsh(basis.T @ form @ basis)


# ---------------------------------------------------------------------------
# Two-curve interactions
# ---------------------------------------------------------------------------


def _check_disjoint(source: BoundaryGrid, target: BoundaryGrid) -> None:
    distance = np.abs(target.nodes[:, None] - source.nodes[None, :]).min()
    scale = max(source.curve.diameter(), target.curve.diameter())
    if distance <= TOUCH_RTOL * scale:
        raise GeometryError(f"Curves touch (node distance {distance:.3e})")

    for outer, inner in ((source, target), (target, source)):
        inside = outer.curve.contains(inner.nodes)
        if inside.any() and not inside.all():
            raise GeometryError("Curves intersect")


def cross_layer(source: BoundaryGrid, target: BoundaryGrid) -> np.ndarray:
    """Trace on ``target`` of the single layer generated by densities on ``source``"""
    _check_disjoint(source, target)
    values = kernel(target.nodes[:, None] - source.nodes[None, :])
    return values * source.weights[None, :]


def evaluate_potential(grid: BoundaryGrid, density: np.ndarray, points) -> np.ndarray:
    """Single layer potential at off-curve points (trapezoidal rule)"""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    values = kernel(points[:, None] - grid.nodes[None, :]) * grid.weights[None, :]
    return values @ density


def rescale_factor(outer: ParamCurve) -> float:
    return RESCALE_TARGET_DIAMETER / outer.diameter()


@dataclass(frozen=True)
class CoupledSolution:
    """Densities of the coupled two-boundary problem; columns match the right-hand sides"""

    inner_density: np.ndarray
    outer_density: np.ndarray
    constant: np.ndarray


@dataclass(frozen=True)
class InteractionOperators:
    """Nodal boundary interaction operators between the outer and inner curves"""

    to_inner: np.ndarray
    to_outer: np.ndarray
    single_outer: SingleLayerMatrix
    equilibrium_outer: Equilibrium

    @cached_property
    def composite(self) -> np.ndarray:
        return self.to_outer @ self.to_inner

    @cached_property
    def spectral_radius(self) -> float:
        return float(np.abs(scipy.linalg.eigvals(self.composite)).max())

    def factorized_measurement(self, basis: np.ndarray) -> np.ndarray:
        """Matrix <f_i, (I - K)^{-1} K f_j>_{1/2} for the columns of ``basis``"""
        n = self.composite.shape[0]
        image = scipy.linalg.solve(np.eye(n) - self.composite, self.composite @ basis)
        return half_order_gram(self.single_outer, self.equilibrium_outer, basis, image)


@dataclass(frozen=True)
class MeasurementMatrix:
    """R = S_Gamma (Lambda_gamma - Lambda_0) in the complex harmonic basis.

    ``center`` is in the caller's coordinates; the basis was built around
    ``scale * center`` on the rescaled geometry.
    """

    order: int
    entries: np.ndarray
    scale: float
    center: complex
    outer_gpst: GpstMatrix
    conditions: dict = field(default_factory=dict)

    @property
    def scaled_center(self) -> complex:
        return self.scale * self.center

    def with_entries(self, entries: np.ndarray) -> "MeasurementMatrix":
        return replace(self, entries=entries)


@dataclass
class ForwardModel:
    """Factorized forward problem for one (outer, cavity) pair on the rescaled geometry.

    Built once, then ``measure`` assembles R for any order and basis center.
    """

    outer: BoundaryGrid
    inner: Optional[BoundaryGrid]
    scale: float
    single_outer: SingleLayerMatrix
    equilibrium_outer: Equilibrium
    single_inner: Optional[SingleLayerMatrix] = None
    equilibrium_inner: Optional[Equilibrium] = None
    cross_to_inner: Optional[np.ndarray] = None
    cross_to_outer: Optional[np.ndarray] = None
    coupled: Optional[DenseFactorization] = None

    @classmethod
    def build(
        cls, outer: ParamCurve, inner: Optional[ParamCurve] = None, rescale: bool = True
    ) -> "ForwardModel":
        scale = rescale_factor(outer) if rescale else 1.0
        logger.info(f"Building forward model: scale s={scale:.12g}, outer nodes={outer.size}")
        outer_grid = make_grid(outer.scaled(scale) if scale != 1.0 else outer)
        inner_grid = None
        if inner is not None:
            inner_grid = make_grid(inner.scaled(scale) if scale != 1.0 else inner)
        return cls.from_grids(outer_grid, inner_grid, scale=scale)

    @classmethod
    def from_grids(
        cls, outer: BoundaryGrid, inner: Optional[BoundaryGrid] = None, scale: float = 1.0
    ) -> "ForwardModel":
        single_outer = assemble_single_layer(outer)
        eq_outer = equilibrium(single_outer)
        logger.info(f"Outer boundary capacity: {eq_outer.capacity:.12g}")
        model = cls(
            outer=outer,
            inner=inner,
            scale=scale,
            single_outer=single_outer,
            equilibrium_outer=eq_outer,
        )
        if inner is None:
            return model

        if not outer.curve.contains(inner.nodes).all():
            raise GeometryError("Cavity must lie strictly inside the outer boundary")
        model.cross_to_inner = cross_layer(outer, inner)
        model.cross_to_outer = cross_layer(inner, outer)
        model.single_inner = assemble_single_layer(inner)
        model.equilibrium_inner = equilibrium(model.single_inner)
        logger.info(f"Cavity capacity: {model.equilibrium_inner.capacity:.12g}")

        n_in, n_out = inner.size, outer.size
        size = n_in + n_out + 1
        block = np.zeros((size, size))
        block[:n_in, :n_in] = model.single_inner.matrix
        block[:n_in, n_in : n_in + n_out] = model.cross_to_inner
        block[:n_in, -1] = -1.0
        block[n_in : n_in + n_out, :n_in] = model.cross_to_outer
        block[n_in : n_in + n_out, n_in : n_in + n_out] = single_outer.matrix
        block[-1, :n_in] = inner.weights
        model.coupled = factorize(block, "coupled block")
        return model

    @property
    def has_cavity(self) -> bool:
        return self.inner is not None

    def solve_coupled(self, f: np.ndarray) -> CoupledSolution:
        """Solve for (p, q, c) with traces f on the outer boundary (one column per rhs)"""
        f = np.asarray(f)
        single = f.ndim == 1
        f = f[:, None] if single else f
        if not self.has_cavity:
            outer_density = self.single_outer.solve(f)
            zeros = np.zeros((0, f.shape[1]), dtype=outer_density.dtype)
            solution = CoupledSolution(zeros, outer_density, np.zeros(f.shape[1]))
        else:
            n_in = self.inner.size
            rhs = np.zeros((n_in + self.outer.size + 1, f.shape[1]), dtype=f.dtype)
            rhs[n_in : n_in + self.outer.size] = f
            x = self.coupled.solve(rhs)
            solution = CoupledSolution(x[:n_in], x[n_in:-1], x[-1])
        if single:
            return CoupledSolution(
                solution.inner_density[:, 0], solution.outer_density[:, 0], solution.constant[0]
            )
        return solution

    def basis(self, order: int, center: complex = 0j) -> HarmonicBasis:
        return build_basis(self.outer, self.equilibrium_outer, order, self.scale * center)

    def measure(self, order: int, center: complex = 0j) -> MeasurementMatrix:
        basis = self.basis(order, center)
        traces = basis.traces
        weights = self.outer.weights

        free = self.single_outer.solve(traces)
        outer_gpst = GpstMatrix(order, gram_from_densities(weights, free, traces), kind="outer")
        if self.has_cavity:
            coupled = self.solve_coupled(traces).outer_density
            entries = traces.T @ (weights[:, None] * (coupled - free))
        else:
            entries = np.zeros((2 * order, 2 * order), dtype=complex)

        conditions = {"single_layer_outer": self.single_outer.condition}
        if self.coupled is not None:
            conditions["coupled_block"] = self.coupled.condition
        logger.info(
            f"Measurement assembled: M={order}, center={center}, |R|={np.linalg.norm(entries):.6e}"
        )
        return MeasurementMatrix(
            order=order,
            entries=entries,
            scale=self.scale,
            center=complex(center),
            outer_gpst=outer_gpst,
            conditions=conditions,
        )

    def interaction_operators(self) -> InteractionOperators:
        if not self.has_cavity:
            raise GeometryError("Interaction operators need a cavity")
        to_inner = self.equilibrium_inner.project(
            self.cross_to_inner @ _inverse(self.single_outer)
        )
        to_outer = self.equilibrium_outer.project(
            self.cross_to_outer @ _inverse(self.single_inner)
        )
        operators = InteractionOperators(
            to_inner=to_inner,
            to_outer=to_outer,
            single_outer=self.single_outer,
            equilibrium_outer=self.equilibrium_outer,
        )
        logger.info(f"Spectral radius of K: {operators.spectral_radius:.12f}")
        return operators


def _inverse(single_layer: SingleLayerMatrix) -> np.ndarray:
    return single_layer.solve(np.eye(single_layer.grid.size))


def interaction_operators(outer: BoundaryGrid, inner: BoundaryGrid) -> InteractionOperators:
    return ForwardModel.from_grids(outer, inner).interaction_operators()


def solve_coupled(outer: BoundaryGrid, inner: BoundaryGrid, f: np.ndarray) -> CoupledSolution:
    return ForwardModel.from_grids(outer, inner).solve_coupled(f)


def assemble_measurement(
    outer: BoundaryGrid, inner: Optional[BoundaryGrid], order: int, center: complex = 0j
) -> MeasurementMatrix:
    """R on grids that are already scaled (scale factor 1)"""
    return ForwardModel.from_grids(outer, inner).measure(order, center)
