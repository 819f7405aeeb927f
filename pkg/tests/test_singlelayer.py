import numpy as np
import pytest

from app.core.curves import LaurentMap, ellipse, from_laurent
from app.core.errors import (
    CapacityOneError,
    ConditioningWarning,
    GeometryError,
    SingularGeometryError,
)
from app.core.singlelayer import (
    ForwardModel,
    assemble_single_layer,
    cross_layer,
    equilibrium,
    evaluate_potential,
    factorize,
    half_order_inner,
    kernel,
    make_grid,
    rescale_factor,
    ritz_values,
)


def circle_grid(radius: float, nodes: int = 64, center: complex = 0j):
    return make_grid(from_laurent(LaurentMap(radius, center), nodes))


class TestSingleLayer:
    def test_kernel(self):
        assert kernel(1.0) == 0.0
        assert kernel(np.e * 1j) == pytest.approx(-1.0 / (2 * np.pi))

    @pytest.mark.parametrize("mode", [1, 3, 7])
    def test_circle_eigenvalues(self, mode):
        radius = 0.4
        grid = circle_grid(radius)
        single = assemble_single_layer(grid)
        density = np.cos(mode * grid.curve.params)
        np.testing.assert_allclose(single.apply(density), radius / (2 * mode) * density, atol=1e-10)

    def test_circle_constant_density(self):
        radius = 0.4
        single = assemble_single_layer(circle_grid(radius))
        trace = single.apply(np.ones(64))
        np.testing.assert_allclose(trace, -radius * np.log(radius), atol=1e-10)

    def test_weighted_matrix_is_symmetric(self):
        grid = make_grid(ellipse(0.45, 0.26, 128))
        form = grid.weights[:, None] * assemble_single_layer(grid).matrix
        np.testing.assert_allclose(form, form.T, atol=1e-12 * np.abs(form).max())

    def test_ritz_values_positive(self):
        single = assemble_single_layer(make_grid(ellipse(0.45, 0.26, 64)))
        assert ritz_values(single).min() > 0


class TestEquilibrium:
    def test_circle_capacity(self):
        eq = equilibrium(assemble_single_layer(circle_grid(0.4)))
        assert eq.capacity == pytest.approx(0.4, rel=1e-12)
        np.testing.assert_allclose(eq.density, 1.0 / (2 * np.pi * 0.4), rtol=1e-10)

    def test_ellipse_capacity(self, benchmark_model):
        assert benchmark_model.scale == pytest.approx(0.9 / 3.8)
        assert benchmark_model.equilibrium_outer.capacity == pytest.approx(
            1.5 * benchmark_model.scale, rel=1e-10
        )

    def test_capacity_converges_spectrally(self):
        exact = (0.45 + 0.26) / 2
        errors = [
            abs(equilibrium(assemble_single_layer(make_grid(ellipse(0.45, 0.26, n)))).capacity - exact)
            for n in (24, 48, 96)
        ]
        for coarse, fine in zip(errors, errors[1:]):
            assert fine <= max(1e-4 * coarse, 1e-12)

    def test_unit_capacity_rejected(self):
        with pytest.raises(CapacityOneError):
            equilibrium(assemble_single_layer(circle_grid(1.0)))

    def test_projection_is_mean_free(self):
        grid = make_grid(ellipse(0.45, 0.26, 64))
        eq = equilibrium(assemble_single_layer(grid))
        f = grid.nodes**3 + 2.0
        assert abs(eq.mean(eq.project(f))) < 1e-13

    def test_shell_theorem(self):
        grid = circle_grid(0.4, 128)
        eq = equilibrium(assemble_single_layer(grid))
        outside = np.array([0.8, 1.5j, -2.0 + 1.0j])
        np.testing.assert_allclose(
            evaluate_potential(grid, eq.density, outside), kernel(outside), atol=1e-12
        )
        inside = evaluate_potential(grid, eq.density, [0.0, 0.1 + 0.1j])
        np.testing.assert_allclose(inside, eq.constant_trace, atol=1e-10)

    def test_half_order_inner_is_symmetric(self):
        grid = make_grid(ellipse(0.45, 0.26, 128))
        single = assemble_single_layer(grid)
        eq = equilibrium(single)
        f = grid.nodes.real**2
        g = grid.nodes.imag + grid.nodes.real**3
        assert half_order_inner(single, eq, f, g) == pytest.approx(
            half_order_inner(single, eq, g, f), rel=1e-10
        )
        assert half_order_inner(single, eq, f, f).real > 0


class TestFactorize:
    def test_singular_matrix(self):
        with pytest.raises(SingularGeometryError):
            factorize(np.ones((3, 3)), "test")

    def test_ill_conditioned_warns(self):
        matrix = np.diag([1.0, 1e-13])
        with pytest.warns(ConditioningWarning):
            factorization = factorize(matrix, "test", threshold=1e12)
        np.testing.assert_allclose(factorization.solve(np.array([1.0, 1e-13])), [1.0, 1.0])

    def test_complex_right_hand_side(self):
        matrix = np.array([[2.0, 1.0], [1.0, 3.0]])
        rhs = np.array([1.0 + 2.0j, -1.0j])
        solution = factorize(matrix, "test").solve(rhs)
        np.testing.assert_allclose(matrix @ solution, rhs, atol=1e-14)


class TestCoupledProblem:
    def test_intersecting_curves(self):
        with pytest.raises(GeometryError):
            cross_layer(circle_grid(0.3), circle_grid(0.3, center=0.4))

    def test_cavity_outside_outer_boundary(self):
        with pytest.raises(GeometryError):
            ForwardModel.build(ellipse(1.0, 0.5, 64), from_laurent(LaurentMap(0.2, 3.0), 64))

    def test_constant_data(self, annulus_model):
        solution = annulus_model.solve_coupled(np.ones(annulus_model.outer.size))
        assert solution.constant == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(solution.inner_density, 0.0, atol=1e-10)

    def test_cosine_data(self, annulus_model):
        f = np.cos(annulus_model.outer.curve.params)
        solution = annulus_model.solve_coupled(f)
        assert abs(solution.constant) < 1e-10
        assert np.abs(solution.inner_density).max() > 1e-3

    def test_annulus_dirichlet_to_neumann(self, annulus_model):
        outer, inner = 0.4, 0.1
        amplitude = 1.0 / (outer - inner**2 / outer)
        difference = amplitude * (1 + inner**2 / outer**2) - 1.0 / outer

        measurement = annulus_model.measure(2)
        # <Q^1, conj Q^1> pairs z with its own density change
        assert measurement.entries[0, 2] == pytest.approx(2 * np.pi * outer**3 * difference, rel=1e-8)
        assert abs(measurement.entries[0, 0]) < 1e-10
        assert measurement.entries[0, 2].real > 0

    def test_empty_cavity(self):
        model = ForwardModel.build(ellipse(1.9, 1.1, 64))
        measurement = model.measure(4, center=-0.5)
        assert not model.has_cavity
        np.testing.assert_array_equal(measurement.entries, 0.0)
        assert measurement.scale == pytest.approx(rescale_factor(ellipse(1.9, 1.1, 64)))

    def test_measurement_is_symmetric(self, benchmark_model):
        entries = benchmark_model.measure(6, center=-0.5).entries
        np.testing.assert_allclose(entries, entries.T, atol=1e-8 * np.abs(entries).max())


class TestInteractionOperators:
    def test_spectral_radius_below_one(self, benchmark_model):
        operators = benchmark_model.interaction_operators()
        assert operators.spectral_radius < 1 - 1e-6

    def test_factorized_measurement(self, benchmark_model):
        order = 8
        measurement = benchmark_model.measure(order)
        basis = benchmark_model.basis(order)
        factorized = benchmark_model.interaction_operators().factorized_measurement(basis.traces)
        error = np.linalg.norm(factorized - measurement.entries) / np.linalg.norm(measurement.entries)
        assert error <= 1e-6

    def test_operators_are_adjoint(self, benchmark_model):
        operators = benchmark_model.interaction_operators()
        x, y = benchmark_model.outer.nodes.real, benchmark_model.outer.nodes.imag
        q = benchmark_model.equilibrium_outer.project(x**3 - y + x * y)
        x, y = benchmark_model.inner.nodes.real, benchmark_model.inner.nodes.imag
        p = benchmark_model.equilibrium_inner.project(x * y + y**2)

        on_inner = half_order_inner(
            benchmark_model.single_inner, benchmark_model.equilibrium_inner, operators.to_inner @ q, p
        )
        on_outer = half_order_inner(
            benchmark_model.single_outer, benchmark_model.equilibrium_outer, q, operators.to_outer @ p
        )
        assert on_inner == pytest.approx(on_outer, rel=1e-8)

    def test_exterior_representation(self, benchmark_model):
        model = benchmark_model
        f = model.equilibrium_outer.project(np.exp(model.outer.nodes).real)
        solution = model.solve_coupled(f)
        free = model.single_outer.solve(f)

        # outer boundary fits in a disk of diameter 0.9 after rescaling
        points = np.array([2.0, 1.5j, -2.5 - 1.0j, 3.0 + 3.0j])
        coupled = evaluate_potential(model.outer, solution.outer_density, points) + evaluate_potential(
            model.inner, solution.inner_density, points
        )
        np.testing.assert_allclose(coupled, evaluate_potential(model.outer, free, points), atol=1e-8)

    def test_no_cavity(self):
        with pytest.raises(GeometryError):
            ForwardModel.build(ellipse(1.0, 0.5, 64)).interaction_operators()


def test_zero_mass_potential_decays():
    grid = make_grid(ellipse(0.45, 0.26, 128))
    density = np.cos(grid.curve.params)
    assert abs(grid.weights @ density) < 1e-14
    near, far = np.abs(evaluate_potential(grid, density, [10.0 + 3.0j, 100.0 + 30.0j]))
    assert far < 0.2 * near
