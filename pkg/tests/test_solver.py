import numpy as np
import pytest

from plaplab.errors import (
    InvalidParameterError,
    InvalidTestFunctionError,
    SolverFailure,
)
from plaplab.exact_solutions import barenblatt_fast_diffusion, linear_solution
from plaplab.functionals import make_cutoff
from plaplab.grid import Grid, Region, lp_norm
from plaplab.solver import (
    BoundaryData,
    SolverParams,
    picard_step,
    solve_regularized,
    weak_form_residual,
)


def small_grid_1d(cells=16, steps=8, extent=(0.0, 1.0)):
    return Grid((extent,), (cells,), (0.0, 1.0), steps)


@pytest.fixture(scope="module")
def bb15():
    return barenblatt_fast_diffusion(1.5, 1, 1.0, 1.0)


class TestSolverParams:
    def test_p_range(self):
        with pytest.raises(InvalidParameterError):
            SolverParams(p=2.1, eps=0.1)
        with pytest.raises(InvalidParameterError):
            SolverParams(p=1.0, eps=0.1)

    def test_eps_zero_needs_floor(self):
        with pytest.raises(InvalidParameterError):
            SolverParams(p=1.5, eps=0.0, gradient_floor=0.0)
        assert SolverParams(p=1.5, eps=0.0).floored

    def test_negative_eps(self):
        with pytest.raises(InvalidParameterError):
            SolverParams(p=1.5, eps=-0.1)


class TestSolveRegularized:
    @pytest.mark.parametrize("p", [1.1, 1.5, 1.9])
    @pytest.mark.parametrize("eps", [0.0, 0.5, 1.0])
    def test_affine_reproduced_exactly(self, p, eps):
        grid = small_grid_1d()
        sol = linear_solution([1.0], 0.0)
        fld, log = solve_regularized(grid, SolverParams(p=p, eps=eps), BoundaryData.from_solution(sol))
        assert np.max(np.abs(fld.values - grid.sample(sol.u).values)) <= 1e-9
        assert log.converged

    def test_constant_data(self):
        grid = small_grid_1d()
        fld, _ = solve_regularized(
            grid, SolverParams(p=1.3, eps=0.2), BoundaryData.constant(5.0)
        )
        assert np.max(np.abs(fld.values - 5.0)) <= 1e-12

    def test_barenblatt_accuracy_small(self, bb15):
        grid = Grid(((-4.0, 4.0),), (100,), (0.0, 1.0), 50)
        fld, log = solve_regularized(
            grid, SolverParams(p=1.5, eps=1e-2), BoundaryData.from_solution(bb15)
        )
        exact = bb15.sample_on(grid)
        region = Region.whole(grid)
        rel = lp_norm(fld.values - exact.values, 2.0, region) / lp_norm(
            exact.values, 2.0, region
        )
        assert rel <= 5e-2
        assert all(n <= 200 for n in log.picard_iterations)

    def test_maximum_principle(self, bb15):
        grid = Grid(((-4.0, 4.0),), (64,), (0.0, 1.0), 16)
        fld, _ = solve_regularized(
            grid, SolverParams(p=1.5, eps=0.1), BoundaryData.from_solution(bb15)
        )
        lo, hi = _parabolic_boundary_range(fld.values, grid)
        assert np.min(fld.values) >= lo - 1e-9
        assert np.max(fld.values) <= hi + 1e-9

    def test_failure_carries_step_index(self, bb15):
        grid = Grid(((-4.0, 4.0),), (64,), (0.0, 1.0), 16)
        params = SolverParams(p=1.2, eps=1e-3, picard_max_iters=1)
        with pytest.raises(SolverFailure) as err:
            solve_regularized(grid, params, BoundaryData.from_solution(bb15))
        assert err.value.step_index == 1
        assert err.value.log is not None and not err.value.log.converged

    def test_2d_axis_relabeling_symmetry(self):
        grid = Grid(((-1.0, 1.0), (-1.0, 2.0)), (10, 14), (0.0, 1.0), 8)
        swapped = Grid(((-1.0, 2.0), (-1.0, 1.0)), (14, 10), (0.0, 1.0), 8)
        data = BoundaryData(lambda x, y, t: np.exp(-(x**2) - 0.5 * y**2) * (1.0 + 0.3 * t))
        data_sw = BoundaryData(lambda x, y, t: np.exp(-(y**2) - 0.5 * x**2) * (1.0 + 0.3 * t))
        params = SolverParams(p=1.6, eps=0.2)
        fld, _ = solve_regularized(grid, params, data)
        fld_sw, _ = solve_regularized(swapped, params, data_sw)
        assert np.max(np.abs(fld.values - fld_sw.values.transpose(1, 0, 2))) <= 1e-12

    def test_eps_continuity_trend(self, bb15):
        # || u_eps - u_eps' || shrinks along a geometric ladder of eps gaps
        grid = Grid(((-4.0, 4.0),), (64,), (0.0, 1.0), 16)
        fields = {}
        for eps in (0.4, 0.2, 0.1, 0.05):
            fields[eps], _ = solve_regularized(
                grid, SolverParams(p=1.5, eps=eps), BoundaryData.from_solution(bb15)
            )
        region = Region.whole(grid)
        gaps = [
            lp_norm(fields[0.4].values - fields[0.2].values, 2.0, region),
            lp_norm(fields[0.2].values - fields[0.1].values, 2.0, region),
            lp_norm(fields[0.1].values - fields[0.05].values, 2.0, region),
        ]
        assert gaps[0] > gaps[1] > gaps[2] > 0.0

    def test_diffusivity_bounds_hold(self, bb15):
        from plaplab.solver import _nodal_diffusivity

        grid = Grid(((-4.0, 4.0),), (64,), (0.0, 1.0), 16)
        params = SolverParams(p=1.5, eps=0.1)
        fld, _ = solve_regularized(grid, params, BoundaryData.from_solution(bb15))
        for k in (0, 5, 16):
            coeff = _nodal_diffusivity(grid, fld.values[..., k], params)
            grad = np.gradient(fld.values[..., k], grid.h[0], edge_order=2)
            gmax_sq = float(np.max(grad**2))
            assert np.max(coeff) <= params.eps ** (params.p - 2.0) + 1e-12
            assert np.min(coeff) >= (gmax_sq + params.eps**2) ** ((params.p - 2.0) / 2.0) - 1e-12


def _parabolic_boundary_range(values, grid):
    pieces = [values[..., 0].ravel()]
    if grid.n == 1:
        pieces += [values[0, :], values[-1, :]]
    else:
        pieces += [
            values[0, :, :].ravel(),
            values[-1, :, :].ravel(),
            values[:, 0, :].ravel(),
            values[:, -1, :].ravel(),
        ]
    stacked = np.concatenate(pieces)
    return float(np.min(stacked)), float(np.max(stacked))


class TestPicardStep:
    def test_affine_coefficients_affine_output(self):
        grid = small_grid_1d()
        params = SolverParams(p=1.5, eps=1.0)
        x = grid.axis_coords(0)
        affine = 2.0 * x + 1.0
        out = picard_step(grid, params, affine, affine, affine)
        assert np.max(np.abs(out - affine)) <= 1e-12

    def test_vanishing_time_step_returns_previous_level(self):
        grid = Grid(((0.0, 1.0),), (16,), (0.0, 8e-12), 8)  # tau = 1e-12
        params = SolverParams(p=1.5, eps=0.5)
        rng = np.random.default_rng(3)
        prev = rng.random(17)
        boundary = prev.copy()
        out = picard_step(grid, params, prev, prev, boundary)
        assert np.max(np.abs(out[1:-1] - prev[1:-1])) <= 1e-9

    def test_heat_step_against_dense_solve(self):
        # frozen unit diffusivity reproduces the implicit heat step; compare
        # the banded elimination against a dense linear-algebra oracle
        grid = Grid(((0.0, 1.0),), (16,), (0.0, 1.0), 8)
        params = SolverParams(p=1.7, eps=1.0)  # zero iterate => A = 1 exactly
        rng = np.random.default_rng(11)
        prev_level = rng.random(17)
        boundary = prev_level.copy()
        zero_iterate = np.zeros(17)
        out = picard_step(grid, params, zero_iterate, prev_level, boundary)

        tau, h = grid.tau, grid.h[0]
        m = 15
        dense = np.zeros((m, m))
        r = tau / h**2
        for i in range(m):
            dense[i, i] = 1.0 + 2.0 * r
            if i > 0:
                dense[i, i - 1] = -r
            if i < m - 1:
                dense[i, i + 1] = -r
        rhs = prev_level[1:-1].copy()
        rhs[0] += r * boundary[0]
        rhs[-1] += r * boundary[-1]
        oracle = np.linalg.solve(dense, rhs)
        assert np.max(np.abs(out[1:-1] - oracle)) <= 1e-10


class TestWeakFormResidual:
    def _bump(self, grid):
        if grid.n == 1:
            return make_cutoff(grid, ((0.2, 0.8), (0.2, 0.8)), 0.2)
        return make_cutoff(grid, ((0.2, 0.8), (0.2, 0.8), (0.2, 0.8)), 0.2)

    def test_linear_field(self):
        grid = Grid(((0.0, 1.0),), (40,), (0.0, 1.0), 40)
        sol = linear_solution([1.0])
        fld = grid.sample(sol.u)
        res = weak_form_residual(fld, self._bump(grid), p=1.4, eps=0.3)
        assert abs(res) <= 1e-8

    def test_zero_test_function(self):
        grid = Grid(((0.0, 1.0),), (16,), (0.0, 1.0), 8)
        fld = grid.sample(lambda x, t: np.sin(x) * (1 + t))

        class Zero:
            def value(self, *c):
                return np.zeros(np.broadcast(*c).shape)

            time_derivative = value

            def space_gradient(self, *c):
                return np.zeros((1,) + np.broadcast(*c).shape)

        assert weak_form_residual(fld, Zero(), p=1.5, eps=0.1) == 0.0

    def test_non_compact_support_rejected(self):
        grid = Grid(((0.0, 1.0),), (16,), (0.0, 1.0), 8)
        fld = grid.sample(lambda x, t: x + 0.0 * t)
        spatial_only = make_cutoff(
            grid, ((0.2, 0.8), (0.2, 0.8)), 0.2, time_compact=False
        )
        with pytest.raises(InvalidTestFunctionError):
            weak_form_residual(fld, spatial_only, p=1.5, eps=0.1)

    def test_residual_shrinks_under_refinement(self, bb15):
        def defect(cells, steps):
            grid = Grid(((-4.0, 4.0),), (cells,), (0.0, 1.0), steps)
            eps = 0.1
            fld, _ = solve_regularized(
                grid, SolverParams(p=1.5, eps=eps), BoundaryData.from_solution(bb15)
            )
            bump = make_cutoff(grid, ((-2.5, 2.5), (0.15, 0.85)), (0.8, 0.15))
            return abs(weak_form_residual(fld, bump, p=1.5, eps=eps))

        coarse = defect(100, 100)
        fine = defect(200, 200)
        assert coarse / fine >= 1.5
