import numpy as np
import pytest

from plaplab.errors import (
    InvalidParameterError,
    InvalidPlanError,
    InvalidSupportError,
    PreconditionError,
    WrongRegimeError,
)
from plaplab.exact_solutions import barenblatt_fast_diffusion, linear_solution
from plaplab.functionals import make_cutoff
from plaplab.grid import Grid, Region
from plaplab.solver import BoundaryData, SolverParams, solve_regularized
from plaplab.verifier import (
    SweepPlan,
    Verdict,
    benilan_crandall_check,
    check_scalar_perturbation_inequality,
    check_vector_monotonicity,
    convergence_study,
    discretization_tolerance,
    maximum_principle_verdict,
    scalar_perturbation_campaign,
    uniform_boundedness,
    ut_summability_study,
    vector_monotonicity_campaign,
    verify_case_p_above_threshold,
    verify_energy_lemma,
    verify_general_estimate,
    verify_onedim_estimate,
    verify_theta_bound,
)


@pytest.fixture(scope="module")
def solved_16():
    p, eps = 1.6, 0.1
    sol = barenblatt_fast_diffusion(p, 1, 1.0, 1.0)
    grid = Grid(((-4.0, 4.0),), (100,), (0.0, 1.0), 100)
    fld, _ = solve_regularized(grid, SolverParams(p=p, eps=eps), BoundaryData.from_solution(sol))
    cutoff = make_cutoff(grid, ((-3.0, 3.0), (0.1, 0.9)), (0.8, 0.2))
    return grid, fld, cutoff, p, eps


@pytest.fixture(scope="module")
def solved_12():
    p, eps = 1.2, 0.1
    sol = barenblatt_fast_diffusion(p, 1, 0.2, 0.25)
    grid = Grid(((-4.0, 4.0),), (100,), (0.0, 1.0), 100)
    fld, _ = solve_regularized(grid, SolverParams(p=p, eps=eps), BoundaryData.from_solution(sol))
    cutoff = make_cutoff(grid, ((-3.0, 3.0), (0.1, 0.9)), (0.8, 0.2))
    return grid, fld, cutoff, p, eps


class TestScalarInequality:
    def test_p_two_degenerate(self):
        assert check_scalar_perturbation_inequality(1.0, 0.5, 1.0, 2.0).passed

    def test_eps_zero(self):
        assert check_scalar_perturbation_inequality(2.0, 0.0, 1.0, 1.5).passed

    def test_worked_values(self):
        v = check_scalar_perturbation_inequality(1.0, 0.5, 1.0, 1.5)
        assert v.left == pytest.approx(1.0 - 1.25 ** (-0.25), abs=1e-12)
        assert v.right == pytest.approx(0.0625, abs=1e-12)
        assert v.passed

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            check_scalar_perturbation_inequality(0.5, 0.1, 1.0, 1.5)

    def test_campaign_clean(self):
        report = scalar_perturbation_campaign(samples=100_000, seed=20260809)
        assert report["total_violations"] == 0
        for stats in report["per_p"].values():
            assert stats["counterexamples"] == []

    def test_campaign_deterministic(self):
        a = scalar_perturbation_campaign(samples=1000, seed=5)
        b = scalar_perturbation_campaign(samples=1000, seed=5)
        assert a == b


class TestVectorInequality:
    def test_equal_vectors(self):
        assert check_vector_monotonicity([1.0, 2.0], [1.0, 2.0], 1.5).passed

    def test_worked_values(self):
        v = check_vector_monotonicity([0.0, 0.0], [1.0, 0.0], 1.5)
        assert v.right == pytest.approx(1.0, abs=1e-12)  # pairing
        assert v.left == pytest.approx(0.5 * 2.0 ** (-0.25), abs=1e-12)  # bound
        assert v.passed

    def test_campaign_clean_both_dims(self):
        for dim in (1, 2):
            report = vector_monotonicity_campaign(samples=100_000, seed=7, dimension=dim)
            assert report["total_violations"] == 0


class TestSweepPlan:
    def test_too_short(self):
        grid = Grid(((-1.0, 1.0),), (16,), (0.0, 1.0), 8)
        with pytest.raises(InvalidPlanError):
            SweepPlan(grid=grid, p=1.5, eps_values=(0.1, 0.01))

    def test_not_decreasing(self):
        grid = Grid(((-1.0, 1.0),), (16,), (0.0, 1.0), 8)
        with pytest.raises(InvalidPlanError):
            SweepPlan(grid=grid, p=1.5, eps_values=(0.1, 0.1, 0.01))


class TestEstimateVerdicts:
    def test_general_estimate_linear_field(self):
        grid = Grid(((-4.0, 4.0),), (40,), (0.0, 1.0), 20)
        fld = grid.sample(linear_solution([2.0]).u)
        cutoff = make_cutoff(grid, ((-3.0, 3.0), (0.2, 0.8)), (1.0, 0.2))
        v = verify_general_estimate(fld, cutoff, p=1.6, eps=0.5, alpha=-0.2, sigma=0.1)
        assert v.passed and v.left == pytest.approx(0.0, abs=1e-12)

    def test_general_estimate_solved(self, solved_16):
        _, fld, cutoff, p, eps = solved_16
        v = verify_general_estimate(fld, cutoff, p, eps, alpha=(p - 2) / 2, sigma=0.1)
        assert v.passed

    def test_general_estimate_sigma_guard(self, solved_16):
        _, fld, cutoff, p, eps = solved_16
        with pytest.raises(InvalidParameterError):
            verify_general_estimate(fld, cutoff, p, eps, alpha=(p - 2) / 2, sigma=0.5)

    def test_onedim_estimate_solved(self, solved_12):
        _, fld, cutoff, p, eps = solved_12
        v = verify_onedim_estimate(fld, cutoff, p, eps)
        assert v.passed
        assert v.provenance["measured_ratio"] > 0.0

    def test_onedim_estimate_needs_1d(self):
        grid = Grid(((-1.0, 1.0), (-1.0, 1.0)), (10, 10), (0.0, 1.0), 8)
        fld = grid.sample(lambda x, y, t: x + y + 0.0 * t)
        cutoff = make_cutoff(grid, ((-0.7, 0.7), (-0.7, 0.7), (0.2, 0.8)), (0.3, 0.3, 0.2))
        with pytest.raises(WrongRegimeError):
            verify_onedim_estimate(fld, cutoff, 1.3, 0.1)

    def test_case_above_threshold_solved(self, solved_16):
        _, fld, cutoff, p, eps = solved_16
        v = verify_case_p_above_threshold(fld, cutoff, p, eps, sigma=0.05)
        assert v.passed
        assert v.provenance["weighted_hessian_mass"] > 0.0

    def test_case_above_threshold_wrong_regime(self, solved_16):
        _, fld, cutoff, _, eps = solved_16
        with pytest.raises(WrongRegimeError):
            verify_case_p_above_threshold(fld, cutoff, 1.5, eps, sigma=0.05)

    def test_energy_lemma_solved(self, solved_12):
        _, fld, cutoff, p, eps = solved_12
        theta = 1.2
        alpha = (theta - 1.0) * (p - 2.0) / 2.0
        v = verify_energy_lemma(fld, cutoff, p, eps, alpha, kappa=0.05)
        assert v.passed

    def test_energy_lemma_linear_field(self):
        grid = Grid(((-4.0, 4.0),), (40,), (0.0, 1.0), 20)
        fld = grid.sample(linear_solution([1.0]).u)
        cutoff = make_cutoff(grid, ((-3.0, 3.0), (0.2, 0.8)), (1.0, 0.2))
        v = verify_energy_lemma(fld, cutoff, p=1.2, eps=0.3, alpha=-0.08, kappa=0.05)
        assert v.passed and v.right >= 0.0

    def test_energy_lemma_needs_time_ramp(self, solved_12):
        grid, fld, _, p, eps = solved_12
        spatial_only = make_cutoff(grid, ((-3.0, 3.0), (0.1, 0.9)), (0.8, 0.2), time_compact=False)
        with pytest.raises(InvalidSupportError):
            verify_energy_lemma(fld, spatial_only, p, eps, alpha=-0.08, kappa=0.05)

    def test_energy_lemma_wrong_regime(self, solved_16):
        _, fld, cutoff, p, eps = solved_16
        with pytest.raises(WrongRegimeError):
            verify_energy_lemma(fld, cutoff, p, eps, alpha=-0.2, kappa=0.05)

    def test_theta_bound_range_checks(self, solved_12):
        _, fld, cutoff, p, eps = solved_12
        assert verify_theta_bound(fld, cutoff, 1.2, eps, theta=1.24).passed
        with pytest.raises(InvalidParameterError):
            verify_theta_bound(fld, cutoff, 1.2, eps, theta=1.3)
        with pytest.raises(WrongRegimeError):
            verify_theta_bound(fld, cutoff, 1.6, eps, theta=1.2)


class TestUniformBoundedness:
    def test_flat_sequence(self):
        v = uniform_boundedness("flat", (1.0, 0.1, 0.01), [2.0, 2.1, 2.2])
        assert v.passed

    def test_divergent_sequence(self):
        v = uniform_boundedness("bad", (1.0, 0.1, 0.01), [1.0, 2.0, 4.5])
        assert not v.passed


class TestBenilanCrandall:
    def test_stationary_nonnegative(self):
        grid = Grid(((0.0, 1.0),), (16,), (0.0, 1.0), 8)
        fld = grid.sample(lambda x, t: 1.0 + 0.0 * x + 0.0 * t)
        v = benilan_crandall_check(fld, p=1.5, t_offset=1.0, slack=1e-12)
        assert v.passed

    def test_analytic_field(self):
        sol = barenblatt_fast_diffusion(1.5, 1, 1.0, 1.0)
        grid = Grid(((-4.0, 4.0),), (64,), (0.0, 1.0), 16)
        fld = sol.sample_on(grid)
        ut = sol.sample_ut_on(grid).values
        assert benilan_crandall_check(fld, 1.5, 1.0, slack=1e-9, ut_values=ut).passed

    def test_negative_field_rejected(self):
        grid = Grid(((0.0, 1.0),), (16,), (0.0, 1.0), 8)
        fld = grid.sample(lambda x, t: -1.0 + 0.0 * x + 0.0 * t)
        with pytest.raises(PreconditionError):
            benilan_crandall_check(fld, p=1.5, t_offset=1.0, slack=1e-9)


class TestMaximumPrinciple:
    def test_solved_field(self, solved_16):
        _, fld, _, _, _ = solved_16
        assert maximum_principle_verdict(fld).passed

    def test_detects_interior_overshoot(self):
        grid = Grid(((0.0, 1.0),), (16,), (0.0, 1.0), 8)
        values = np.zeros(grid.shape)
        values[8, 4] = 1.0  # interior spike above boundary range
        from plaplab.grid import SpaceTimeField

        assert not maximum_principle_verdict(SpaceTimeField(grid, values)).passed


@pytest.fixture(scope="module")
def study():
    sol = barenblatt_fast_diffusion(1.5, 1, 1.0, 1.0)
    grid = Grid(((-4.0, 4.0),), (100,), (0.0, 1.0), 100)
    plan = SweepPlan(grid=grid, p=1.5, eps_values=(0.3, 0.1, 0.03))
    cutoff = make_cutoff(grid, ((-3.0, 3.0), (0.1, 0.9)), (0.8, 0.2))
    return convergence_study(plan, BoundaryData.from_solution(sol), sol, cutoff=cutoff)


class TestConvergenceStudy:
    def test_all_verdicts_pass(self, study):
        assert study.passed(), [v.as_dict() for v in study.verdicts if not v.passed]

    def test_w_nonpositive_up_to_tol(self, study):
        assert all(e.w_eps <= study.tol_disc for e in study.entries)

    def test_certificate_bounds_masses(self, study):
        assert all(e.grad_lp_mass <= study.certificate_k for e in study.entries)

    def test_distances_decrease(self, study):
        l2 = [e.l2_dist for e in study.entries]
        assert l2[0] > l2[-1]
        assert not study.reference_substituted

    def test_exact_reference_reproduced(self):
        # boundary data from an affine profile: every solve lands exactly on it
        sol = linear_solution([1.0], 0.0)
        grid = Grid(((0.0, 1.0),), (16,), (0.0, 1.0), 8)
        plan = SweepPlan(grid=grid, p=1.5, eps_values=(0.3, 0.1, 0.03))
        report = convergence_study(plan, BoundaryData.from_solution(sol), sol)
        assert all(e.l2_dist <= 1e-9 for e in report.entries)
        assert all(abs(e.w_eps) <= 1e-12 for e in report.entries)

    def test_reference_substitution_recorded(self):
        sol = barenblatt_fast_diffusion(1.5, 1, 1.0, 1.0)
        grid = Grid(((-4.0, 4.0),), (64,), (0.0, 1.0), 16)
        plan = SweepPlan(grid=grid, p=1.5, eps_values=(0.3, 0.1, 0.03))
        report = convergence_study(plan, BoundaryData.from_solution(sol), reference=None)
        assert report.reference_substituted
        assert report.entries[-1].l2_dist == 0.0  # reference is the last solve


class TestUtSummability:
    def test_regime_enforcement(self):
        grid = Grid(((-1.0, 1.0),), (16,), (0.0, 1.0), 8)
        plan = SweepPlan(grid=grid, p=1.6, eps_values=(0.3, 0.1, 0.03))
        with pytest.raises(WrongRegimeError):
            ut_summability_study(plan, 1.5, Region.interior_box(grid), BoundaryData.constant(1.0))

    def test_time_constant_data(self):
        grid = Grid(((-1.0, 1.0),), (16,), (0.0, 1.0), 8)
        plan = SweepPlan(grid=grid, p=1.6, eps_values=(0.3, 0.1, 0.03))
        v = ut_summability_study(plan, 2.0, Region.interior_box(grid), BoundaryData.constant(2.0))
        assert v.passed
        assert max(v.provenance["ut_theta_masses"]) <= 1e-20


class TestDiscretizationTolerance:
    def test_positive_and_shrinking(self, solved_16):
        grid, fld, cutoff, p, eps = solved_16
        tol = discretization_tolerance(fld, cutoff, p, eps)
        assert tol > 0.0
        sol = barenblatt_fast_diffusion(p, 1, 1.0, 1.0)
        fine = grid.refine(2)
        fld2, _ = solve_regularized(
            fine, SolverParams(p=p, eps=eps), BoundaryData.from_solution(sol)
        )
        cutoff2 = make_cutoff(fine, ((-3.0, 3.0), (0.1, 0.9)), (0.8, 0.2))
        assert discretization_tolerance(fld2, cutoff2, p, eps) < tol


class TestVerdictShape:
    def test_pass_rule(self):
        v = Verdict.compare("demo", 1.0, 2.0, 0.0)
        assert v.passed
        v = Verdict.compare("demo", 3.0, 2.0, 0.5)
        assert not v.passed

    def test_as_dict_roundtrip_keys(self):
        v = Verdict.compare("demo", 1.0, 2.0, 0.1, provenance={"p": 1.5})
        d = v.as_dict()
        assert set(d) == {"name", "left", "right", "slack", "passed", "provenance"}
