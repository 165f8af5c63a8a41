import numpy as np
import pytest

from plaplab.errors import InvalidParameterError, OutOfDomainError
from plaplab.grid import (
    Grid,
    Region,
    SpaceTimeField,
    gradient,
    gradient_field,
    gradient_sq_field,
    hessian_frobenius_sq,
    hessian_frobenius_sq_field,
    lp_norm,
    spacetime_integral,
)


def unit_grid_1d(cells=16, steps=8):
    return Grid(((0.0, 1.0),), (cells,), (0.0, 1.0), steps)


def unit_grid_2d(cells=10, steps=8):
    return Grid(((0.0, 1.0), (0.0, 1.0)), (cells, cells), (0.0, 1.0), steps)


class TestGridConstruction:
    def test_spacings(self):
        g = Grid(((-4.0, 4.0),), (200,), (0.0, 1.0), 200)
        assert g.h == (0.04,)
        assert g.tau == 0.005
        assert g.shape == (201, 201)

    def test_node_coordinates_exact(self):
        g = Grid(((-4.0, 4.0),), (200,), (0.0, 1.0), 200)
        x = g.axis_coords(0)
        expected = -4.0 + np.arange(201) * 0.04
        assert np.array_equal(x, expected)

    def test_minimum_resolution_enforced(self):
        with pytest.raises(InvalidParameterError):
            Grid(((0.0, 1.0),), (4,), (0.0, 1.0), 8)
        with pytest.raises(InvalidParameterError):
            Grid(((0.0, 1.0),), (8,), (0.0, 1.0), 4)

    def test_dimension_limit(self):
        with pytest.raises(InvalidParameterError):
            Grid(((0.0, 1.0),) * 3, (8, 8, 8), (0.0, 1.0), 8)

    def test_field_shape_checked(self):
        g = unit_grid_1d()
        with pytest.raises(InvalidParameterError):
            SpaceTimeField(g, np.zeros((3, 3)))

    def test_field_rejects_nan(self):
        g = unit_grid_1d()
        vals = np.zeros(g.shape)
        vals[0, 0] = np.nan
        with pytest.raises(InvalidParameterError):
            SpaceTimeField(g, vals)


class TestGradient:
    def test_affine_1d(self):
        g = unit_grid_1d()
        fld = g.sample(lambda x, t: 3.0 * x)
        for i in range(1, 16):
            assert gradient(fld, i, 3) == pytest.approx([3.0], abs=1e-12)

    def test_affine_2d(self):
        g = unit_grid_2d()
        fld = g.sample(lambda x, y, t: x - 2.0 * y)
        assert gradient(fld, (4, 7), 2) == pytest.approx([1.0, -2.0], abs=1e-12)

    def test_quadratic_is_exact_for_central_difference(self):
        # d/dx x^2 = 2x; the centered quotient reproduces it exactly
        g = Grid(((0.0, 1.0),), (10,), (0.0, 1.0), 8)
        fld = g.sample(lambda x, t: x**2)
        node = 5  # x = 0.5
        assert gradient(fld, node, 0)[0] == pytest.approx(1.0, abs=1e-12)

    def test_boundary_raises(self):
        g = unit_grid_1d()
        fld = g.sample(lambda x, t: x)
        with pytest.raises(OutOfDomainError):
            gradient(fld, 0, 0)
        with pytest.raises(OutOfDomainError):
            gradient(fld, 16, 0)


class TestHessian:
    def test_affine_vanishes(self):
        g = unit_grid_2d()
        fld = g.sample(lambda x, y, t: 2.0 * x - y + 5.0)
        assert hessian_frobenius_sq(fld, (3, 3), 1) == pytest.approx(0.0, abs=1e-12)

    def test_1d_quadratic(self):
        g = unit_grid_1d()
        fld = g.sample(lambda x, t: x**2 / 2.0)
        assert hessian_frobenius_sq(fld, 8, 2) == pytest.approx(1.0, abs=1e-12)

    def test_mixed_term_counts_twice(self):
        # u = xy has two mixed entries, each equal to 1
        g = unit_grid_2d()
        fld = g.sample(lambda x, y, t: x * y)
        assert hessian_frobenius_sq(fld, (5, 5), 0) == pytest.approx(2.0, abs=1e-12)

    def test_margin_raises(self):
        g = unit_grid_1d()
        fld = g.sample(lambda x, t: x)
        with pytest.raises(OutOfDomainError):
            hessian_frobenius_sq(fld, 0, 0)


class TestIntegral:
    def test_unit_measure(self):
        g = unit_grid_1d()
        region = Region.whole(g)
        assert spacetime_integral(np.ones(g.shape), region) == pytest.approx(1.0, abs=1e-14)

    def test_constant_scales_with_measure(self):
        g = Grid(((0.0, 2.0),), (16,), (0.0, 3.0), 12)
        region = Region.whole(g)
        assert spacetime_integral(np.full(g.shape, 7.0), region) == pytest.approx(
            42.0, rel=1e-13
        )

    def test_sine_against_antiderivative(self):
        # integral of sin(pi x) over the unit cylinder is 2/pi
        g = Grid(((0.0, 1.0),), (100,), (0.0, 1.0), 8)
        fld = g.sample(lambda x, t: np.sin(np.pi * x) + 0.0 * t)
        value = spacetime_integral(fld.values, Region.whole(g))
        assert value == pytest.approx(2.0 / np.pi, abs=1e-4)

    def test_linearity_and_monotonicity(self):
        g = unit_grid_1d()
        region = Region.whole(g)
        rng = np.random.default_rng(7)
        a = rng.random(g.shape)
        b = rng.random(g.shape)
        ia = spacetime_integral(a, region)
        ib = spacetime_integral(b, region)
        iab = spacetime_integral(2.0 * a + 3.0 * b, region)
        assert iab == pytest.approx(2.0 * ia + 3.0 * ib, rel=1e-12)
        assert spacetime_integral(a + 0.5, region) >= ia  # monotone

    def test_region_restriction(self):
        g = unit_grid_1d(cells=20, steps=10)
        region = Region(g, ((5, 16),), (0, 11))
        # window covers x in [0.25, 0.75]: measure 0.5
        assert spacetime_integral(np.ones(g.shape), region) == pytest.approx(0.5, rel=1e-12)


class TestLpNorm:
    def test_zero_field(self):
        g = unit_grid_1d()
        assert lp_norm(np.zeros(g.shape), 1.7, Region.whole(g)) == 0.0

    def test_constant_field_l2(self):
        g = unit_grid_1d()
        assert lp_norm(np.full(g.shape, -3.0), 2.0, Region.whole(g)) == pytest.approx(
            3.0, rel=1e-12
        )

    def test_gradient_magnitude_of_linear_field(self):
        g = unit_grid_1d()
        fld = g.sample(lambda x, t: x)
        grad = gradient_field(fld)
        assert lp_norm(grad, 1.5, Region.whole(g)) == pytest.approx(1.0, rel=1e-12)

    def test_invalid_exponent(self):
        g = unit_grid_1d()
        with pytest.raises(InvalidParameterError):
            lp_norm(np.ones(g.shape), 0.5, Region.whole(g))


class TestRegion:
    def test_interior_default_margins(self):
        g = unit_grid_1d(cells=20, steps=10)
        region = Region.interior_box(g)
        assert region.space_ranges == ((2, 19),)
        assert region.time_range == (1, 10)

    def test_interior_flag_enforced(self):
        g = unit_grid_1d()
        with pytest.raises(InvalidParameterError):
            Region(g, ((0, 17),), (0, 9), interior=True)

    def test_empty_window_rejected(self):
        g = unit_grid_1d()
        with pytest.raises(InvalidParameterError):
            Region(g, ((5, 5),), (0, 9))


class TestFieldStencils:
    def test_gradient_field_exact_on_affine_everywhere(self):
        g = unit_grid_2d()
        fld = g.sample(lambda x, y, t: 2.0 * x - 3.0 * y + 1.0)
        grad = gradient_field(fld)
        assert np.allclose(grad[0], 2.0, atol=1e-12)
        assert np.allclose(grad[1], -3.0, atol=1e-12)

    def test_hessian_field_matches_pointwise_op(self):
        g = unit_grid_2d()
        fld = g.sample(lambda x, y, t: np.sin(x) * np.cos(y) + 0.0 * t)
        full = hessian_frobenius_sq_field(fld)
        assert full[3, 4, 2] == pytest.approx(hessian_frobenius_sq(fld, (3, 4), 2), rel=1e-12)
        assert np.all(full[0, :, :] == 0.0)  # zero ring

    def test_discrete_gradient_square_bound(self):
        # |grad v|^2 <= 4 V |D^2 u|^2 + tol on smooth fields, tol shrinking
        # under refinement (v and the Hessian use the same stencils)
        def defect(cells):
            g = Grid(((0.0, 1.0), (0.0, 1.0)), (cells, cells), (0.0, 1.0), 8)
            fld = g.sample(lambda x, y, t: np.sin(2 * x + y) + 0.3 * x * y + 0.0 * t)
            eps = 0.1
            v = gradient_sq_field(fld)
            big_v = v + eps**2
            grad_v = np.stack(
                [np.gradient(v, g.h[a], axis=a, edge_order=2) for a in range(2)], axis=0
            )
            grad_v_sq = np.sum(grad_v**2, axis=0)
            hess = hessian_frobenius_sq_field(fld)
            inner = (slice(2, -2), slice(2, -2), slice(None))
            return np.max(grad_v_sq[inner] - 4.0 * big_v[inner] * hess[inner])

        coarse = defect(16)
        fine = defect(32)
        assert fine <= max(coarse, 0.0) + 1e-12
        assert fine < 1e-2
