"""Executable checks: inequality verdicts, property campaigns, sweeps, studies.

A Verdict freezes one checked inequality: left-hand value, bound, slack,
and pass flag, plus enough provenance to reproduce it.  Sweep-level checks
never compare values across different grids, and refinement checks never
compare across different regularizations; the two limits stay orthogonal.

Inequalities that hold at the continuous level are asserted with an
additive slack of five times the observed seven-term identity residual at
the same resolution (the package-wide discretization tolerance convention);
the slack shrinks under refinement together with the residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidParameterError,
    InvalidPlanError,
    InvalidSupportError,
    PreconditionError,
    WrongRegimeError,
)
from .exact_solutions import AnalyticSolution
from .functionals import (
    EstimateParams,
    cutoff_weighted_hessian_mass,
    flux_derivative_bound_field,
    fundamental_terms,
    gradient_lp_mass,
    j_eps,
    m_eps_and_o_eps,
    make_cutoff,
    time_derivative_field,
    ut_theta_mass,
    v_weighted_integral,
    w_eps,
)
from .grid import Grid, Region, SpaceTimeField, gradient_field, lp_norm, spacetime_integral
from .solver import BoundaryData, SolverParams, solve_regularized

DEFAULT_EPS_SWEEP = (1.0, 0.3, 0.1, 0.03, 0.01)
BOUNDEDNESS_RATIO = 1.5


@dataclass(frozen=True)
class Verdict:
    """One checked bound: pass implies left <= right + slack."""

    name: str
    left: float
    right: float
    slack: float
    passed: bool
    provenance: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, name, left, right, slack=0.0, provenance=None, extra_ok=True):
        left = float(left)
        right = float(right)
        ok = bool(extra_ok) and math.isfinite(left) and left <= right + slack
        return cls(
            name=name,
            left=left,
            right=right,
            slack=float(slack),
            passed=ok,
            provenance=provenance or {},
        )

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "left": self.left,
            "right": self.right,
            "slack": self.slack,
            "passed": self.passed,
            "provenance": self.provenance,
        }


@dataclass(frozen=True)
class SweepPlan:
    """Decreasing regularization ladder on a fixed grid, with optional refinements."""

    grid: Grid
    p: float
    eps_values: tuple[float, ...] = DEFAULT_EPS_SWEEP
    params: EstimateParams | None = None
    refinement_factors: tuple[int, ...] = ()

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_values)
        object.__setattr__(self, "eps_values", eps)
        if len(eps) < 3:
            raise InvalidPlanError(f"a sweep needs at least 3 entries, got {len(eps)}")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise InvalidPlanError("sweep values must be strictly decreasing")
        if any(e <= 0.0 for e in eps):
            raise InvalidPlanError("sweep values must be positive")


# --- pointwise inequality checks ---------------------------------------------


def check_scalar_perturbation_inequality(a: float, eps: float, delta: float, p: float) -> Verdict:
    """0 <= |a|^(p-2) - (a^2 + eps^2)^((p-2)/2) < ((2-p)/2) eps^2 |a|^(p-2) / delta^2.

    Valid for |a| >= delta > 0 and 1 < p <= 2; checked with 1e-12 slack on
    both ends of the chain.
    """
    if not (1.0 < p <= 2.0):
        raise InvalidParameterError(f"need 1 < p <= 2, got {p}")
    mag = abs(float(a))
    if not mag >= delta > 0.0:
        raise PreconditionError(f"need |a| >= delta > 0, got |a| = {mag}, delta = {delta}")
    lhs = mag ** (p - 2.0) - (mag**2 + eps**2) ** ((p - 2.0) / 2.0)
    rhs = 0.5 * (2.0 - p) * eps**2 * mag ** (p - 2.0) / delta**2
    slack = 1e-12
    return Verdict.compare(
        "scalar_perturbation_inequality",
        lhs,
        rhs,
        slack,
        provenance={"a": mag, "eps": eps, "delta": delta, "p": p},
        extra_ok=lhs >= -slack,
    )


def check_vector_monotonicity(a, b, p: float) -> Verdict:
    """<|b|^(p-2) b - |a|^(p-2) a, b - a>  >=  (p-1)|b-a|^2 (1+|a|^2+|b|^2)^((p-2)/2).

    Zero vectors contribute zero flux.  Encoded as bound <= pairing + slack.
    """
    if not (1.0 < p <= 2.0):
        raise InvalidParameterError(f"need 1 < p <= 2, got {p}")
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))

    def flux(vec):
        mag = np.linalg.norm(vec)
        if mag < 1e-300:
            return np.zeros_like(vec)
        return mag ** (p - 2.0) * vec

    pairing = float(np.dot(flux(b) - flux(a), b - a))
    na, nb = float(np.dot(a, a)), float(np.dot(b, b))
    bound = (p - 1.0) * float(np.dot(b - a, b - a)) * (1.0 + na + nb) ** ((p - 2.0) / 2.0)
    return Verdict.compare(
        "vector_monotonicity_inequality",
        bound,
        pairing,
        1e-12,
        provenance={"a": a.tolist(), "b": b.tolist(), "p": p},
    )


def scalar_perturbation_campaign(
    p_values=(1.1, 1.5, 1.9), samples: int = 100_000, seed: int = 0
) -> dict:
    """Randomized campaign over (a, eps, delta); reports violations verbatim."""
    rng = np.random.default_rng(seed)
    report = {"kind": "scalar_perturbation", "samples": samples, "seed": seed, "per_p": {}}
    for p in p_values:
        delta = rng.uniform(1e-2, 5.0, samples)
        mag = delta + rng.uniform(0.0, 10.0, samples)
        eps = rng.uniform(0.0, 2.0, samples)
        lhs = mag ** (p - 2.0) - (mag**2 + eps**2) ** ((p - 2.0) / 2.0)
        rhs = 0.5 * (2.0 - p) * eps**2 * mag ** (p - 2.0) / delta**2
        bad = (lhs < -1e-12) | (lhs > rhs + 1e-12)
        counterexamples = [
            {"a": float(mag[i]), "eps": float(eps[i]), "delta": float(delta[i]),
             "lhs": float(lhs[i]), "rhs": float(rhs[i])}
            for i in np.nonzero(bad)[0][:10]
        ]
        report["per_p"][str(p)] = {
            "violations": int(np.count_nonzero(bad)),
            "worst_excess": float(np.max(np.maximum(lhs - rhs, -lhs))),
            "counterexamples": counterexamples,
        }
    report["total_violations"] = sum(v["violations"] for v in report["per_p"].values())
    return report


def vector_monotonicity_campaign(
    p_values=(1.1, 1.5, 1.9),
    samples: int = 100_000,
    seed: int = 0,
    dimension: int = 2,
    radius: float = 10.0,
) -> dict:
    """Randomized campaign over vector pairs in a ball; reports violations verbatim."""
    rng = np.random.default_rng(seed)
    report = {
        "kind": "vector_monotonicity",
        "samples": samples,
        "seed": seed,
        "dimension": dimension,
        "radius": radius,
        "per_p": {},
    }
    for p in p_values:
        a = rng.uniform(-radius, radius, (samples, dimension))
        b = rng.uniform(-radius, radius, (samples, dimension))
        na = np.sum(a**2, axis=1)
        nb = np.sum(b**2, axis=1)

        def flux(vecs, norms_sq):
            mags = np.sqrt(norms_sq)
            coef = np.where(mags < 1e-300, 0.0, np.where(mags < 1e-300, 1.0, mags) ** (p - 2.0))
            return coef[:, None] * vecs

        diff = b - a
        pairing = np.sum((flux(b, nb) - flux(a, na)) * diff, axis=1)
        bound = (p - 1.0) * np.sum(diff**2, axis=1) * (1.0 + na + nb) ** ((p - 2.0) / 2.0)
        bad = pairing < bound - 1e-12
        counterexamples = [
            {"a": a[i].tolist(), "b": b[i].tolist(),
             "pairing": float(pairing[i]), "bound": float(bound[i])}
            for i in np.nonzero(bad)[0][:10]
        ]
        report["per_p"][str(p)] = {
            "violations": int(np.count_nonzero(bad)),
            "worst_excess": float(np.max(bound - pairing)),
            "counterexamples": counterexamples,
        }
    report["total_violations"] = sum(v["violations"] for v in report["per_p"].values())
    return report


# --- discretization tolerance -------------------------------------------------


def calibration_alpha(p: float) -> float:
    """An exponent inside both windows 1-p < 2a < 0 and p-1+2a > 0 for any p."""
    return -(p - 1.0) / 4.0


def discretization_tolerance(
    fld: SpaceTimeField, cutoff, p: float, eps: float, alpha: float | None = None
) -> float:
    """Five times the observed identity residual at this resolution."""
    alpha = calibration_alpha(p) if alpha is None else alpha
    terms = fundamental_terms(fld, cutoff, p, eps, alpha)
    return 5.0 * abs(terms.identity_residual())


# --- estimate verdicts ---------------------------------------------------------


def verify_general_estimate(
    fld: SpaceTimeField,
    cutoff,
    p: float,
    eps: float,
    alpha: float,
    sigma: float,
    slack: float | None = None,
) -> Verdict:
    """(p-1+2a-s) * I <= (1/s + (2-p)/|a|) iint V^((p+2a)/2)|grad zeta|^2 + VII."""
    margin = p - 1.0 + 2.0 * alpha - sigma
    if margin <= 0.0:
        raise InvalidParameterError(
            f"absorption parameter too large: p - 1 + 2 alpha - sigma = {margin:.4g} <= 0"
        )
    main = cutoff_weighted_hessian_mass(fld, cutoff, eps, (p - 2.0 + 2.0 * alpha) / 2.0)
    lateral = v_weighted_integral(fld, cutoff, eps, (p + 2.0 * alpha) / 2.0, "grad_zeta_sq")
    time_term = v_weighted_integral(fld, cutoff, eps, alpha + 1.0, "zeta_zeta_t")
    left = margin * main
    right = (1.0 / sigma + (2.0 - p) / abs(alpha)) * lateral + time_term / (alpha + 1.0)
    if slack is None:
        slack = discretization_tolerance(fld, cutoff, p, eps, alpha)
    return Verdict.compare(
        "general_estimate",
        left,
        right,
        slack,
        provenance={
            "p": p,
            "eps": eps,
            "alpha": alpha,
            "sigma": sigma,
            "main_term": main,
            "grid": fld.grid.shape,
        },
    )


def verify_onedim_estimate(
    fld: SpaceTimeField,
    cutoff,
    p: float,
    eps: float,
    sigma: float | None = None,
    slack: float | None = None,
) -> Verdict:
    """One-dimensional bound via the perfect-square factor; records the measured ratio.

    ((p-1)^2 - (3-p)s) iint zeta^2 V^(p-2)|u''|^2
        <= (3-p)/s iint V^(p-1)|grad zeta|^2 + (2/p) iint V^(p/2)|zeta zeta_t|,
    and the ratio  iint zeta^2 V^(p-2)|u''|^2 / (iint |grad u|^p + 1)  is the
    measured constant; sweep-level boundedness is checked by the aggregator.
    """
    if fld.grid.n != 1:
        raise WrongRegimeError("the perfect-square route exists in one dimension only")
    if sigma is None:
        sigma = (p - 1.0) ** 2 / (2.0 * (3.0 - p))
    margin = (p - 1.0) ** 2 - (3.0 - p) * sigma
    if margin <= 0.0:
        raise InvalidParameterError("absorption parameter leaves no positive main-term margin")
    weighted = cutoff_weighted_hessian_mass(fld, cutoff, eps, p - 2.0)
    lateral = v_weighted_integral(fld, cutoff, eps, p - 1.0, "grad_zeta_sq")
    time_term = v_weighted_integral(fld, cutoff, eps, p / 2.0, "abs_zeta_zeta_t")
    left = margin * weighted
    right = (3.0 - p) / sigma * lateral + (2.0 / p) * time_term
    ratio = weighted / (gradient_lp_mass(fld, p) + 1.0)
    if slack is None:
        slack = discretization_tolerance(fld, cutoff, p, eps)
    return Verdict.compare(
        "onedim_estimate",
        left,
        right,
        slack,
        provenance={
            "p": p,
            "eps": eps,
            "sigma": sigma,
            "measured_ratio": ratio,
            "weighted_hessian_mass": weighted,
            "grid": fld.grid.shape,
        },
    )


def verify_case_p_above_threshold(
    fld: SpaceTimeField,
    cutoff,
    p: float,
    eps: float,
    sigma: float,
    slack: float | None = None,
) -> Verdict:
    """(2p-3-s) iint zeta^2 V^(p-2)|D^2 u|^2 <= (1/s+2) iint V^(p-1)|grad zeta|^2 + VII.

    The choice 2 alpha = p - 2 needs 2p - 3 > 0, so p must exceed 3/2.
    """
    if p <= 1.5:
        raise WrongRegimeError(f"this bound needs p > 3/2 (2p - 3 = {2 * p - 3:.4g})")
    margin = 2.0 * p - 3.0 - sigma
    if margin <= 0.0:
        raise InvalidParameterError(f"sigma = {sigma} leaves no positive margin at p = {p}")
    weighted = cutoff_weighted_hessian_mass(fld, cutoff, eps, p - 2.0)
    lateral = v_weighted_integral(fld, cutoff, eps, p - 1.0, "grad_zeta_sq")
    time_term = v_weighted_integral(fld, cutoff, eps, p / 2.0, "zeta_zeta_t")
    left = margin * weighted
    right = (1.0 / sigma + 2.0) * lateral + time_term / (p - 1.0)
    if slack is None:
        slack = discretization_tolerance(fld, cutoff, p, eps, (p - 2.0) / 2.0)
    return Verdict.compare(
        "weighted_hessian_bound_p_above_3_2",
        left,
        right,
        slack,
        provenance={
            "p": p,
            "eps": eps,
            "sigma": sigma,
            "weighted_hessian_mass": weighted,
            "grid": fld.grid.shape,
        },
    )


def verify_energy_lemma(
    fld: SpaceTimeField,
    cutoff,
    p: float,
    eps: float,
    alpha: float,
    kappa: float,
    slack: float | None = None,
) -> Verdict:
    """Bound the time-weight integral iint zeta zeta_t V^(a+1) by sup-norm terms.

    Needs p < 3/2, the exponent window 1-p < 2a < 0, a bounded field, and a
    cutoff with a genuine time ramp.
    """
    if p >= 1.5:
        raise WrongRegimeError(f"the energy route is for p < 3/2, got p = {p}")
    if not (1.0 - p < 2.0 * alpha < 0.0):
        raise WrongRegimeError(f"alpha = {alpha} violates 1 - p < 2 alpha < 0 at p = {p}")
    if not getattr(cutoff, "has_time_ramp", False):
        raise InvalidSupportError("the energy bound needs a cutoff with a time ramp")
    if kappa <= 0.0:
        raise InvalidParameterError("kappa must be positive")
    sup_u = float(np.max(np.abs(fld.values)))
    lhs = v_weighted_integral(fld, cutoff, eps, alpha + 1.0, "zeta_zeta_t")
    abs_zzt = v_weighted_integral(fld, cutoff, eps, 0.0, "abs_zeta_zeta_t")
    grad_zzt = v_weighted_integral(fld, cutoff, eps, (2.0 * alpha + 1.0) / 2.0, "abs_grad_zzt")
    main = cutoff_weighted_hessian_mass(fld, cutoff, eps, (p + 2.0 * alpha - 2.0) / 2.0)
    zeta_t_sq = v_weighted_integral(fld, cutoff, eps, (2.0 - p + 2.0 * alpha) / 2.0, "zeta_t_sq")
    right = (
        eps ** (2.0 * (alpha + 1.0)) * abs_zzt
        + 2.0 * sup_u * grad_zzt
        + 0.5 * (1.0 + 2.0 * abs(alpha)) * sup_u * (kappa * main + zeta_t_sq / kappa)
    )
    if slack is None:
        slack = discretization_tolerance(fld, cutoff, p, eps, alpha)
    return Verdict.compare(
        "energy_lemma",
        lhs,
        right,
        slack,
        provenance={
            "p": p,
            "eps": eps,
            "alpha": alpha,
            "kappa": kappa,
            "sup_norm": sup_u,
            "main_term": main,
            "grid": fld.grid.shape,
        },
    )


def verify_theta_bound(
    fld: SpaceTimeField, cutoff, p: float, eps: float, theta: float
) -> Verdict:
    """Record iint zeta^2 V^(theta(p-2)) |D^2 u|^2; boundedness is a sweep property.

    Enforces p < 3/2, 1 < theta < 1/(2-p) and the three exponent windows
    that the route needs (all strictly between 0 and p/2).
    """
    if p >= 1.5:
        raise WrongRegimeError(f"the theta-weighted bound is for p < 3/2, got p = {p}")
    if not (1.0 < theta < 1.0 / (2.0 - p)):
        raise InvalidParameterError(
            f"theta = {theta} outside the admissible window (1, {1.0 / (2.0 - p):.4g})"
        )
    alpha = (theta - 1.0) * (p - 2.0) / 2.0
    exponents = {
        "(2a+1)/2": (2.0 * alpha + 1.0) / 2.0,
        "(p+2a)/2": (p + 2.0 * alpha) / 2.0,
        "(2-p+2a)/2": (2.0 - p + 2.0 * alpha) / 2.0,
    }
    for label, value in exponents.items():
        if not (0.0 < value < p / 2.0 + 1e-15):
            raise InvalidParameterError(
                f"exponent {label} = {value:.4g} leaves (0, p/2) at p = {p}, theta = {theta}"
            )
    weighted = cutoff_weighted_hessian_mass(fld, cutoff, eps, theta * (p - 2.0))
    return Verdict.compare(
        "theta_weighted_hessian_mass",
        weighted,
        math.inf,
        0.0,
        provenance={
            "p": p,
            "eps": eps,
            "theta": theta,
            "alpha": alpha,
            "measured_L_theta": weighted,
            "grid": fld.grid.shape,
        },
    )


def uniform_boundedness(name: str, eps_values, values, max_ratio: float = BOUNDEDNESS_RATIO,
                        provenance: dict | None = None) -> Verdict:
    """No divergence trend along a decreasing regularization ladder.

    Passes when every consecutive ratio value[i+1] / value[i] stays below
    max_ratio (the desk-scale surrogate for a bound uniform in the
    regularization).
    """
    values = [float(v) for v in values]
    # floor keeps roundoff-scale sequences flat instead of producing wild ratios
    floor = 1e-14 * max(1.0, max((abs(v) for v in values), default=0.0))
    ratios = [
        (abs(nxt) + floor) / (abs(prev) + floor) for prev, nxt in zip(values, values[1:])
    ]
    worst = max(ratios) if ratios else 0.0
    prov = {"eps_values": list(eps_values), "values": values, "ratios": ratios}
    prov.update(provenance or {})
    return Verdict.compare(name, worst, max_ratio, 0.0, provenance=prov)


def benilan_crandall_check(
    fld: SpaceTimeField,
    p: float,
    t_offset: float,
    slack: float,
    ut_values: np.ndarray | None = None,
    region: Region | None = None,
) -> Verdict:
    """u_t <= u / ((2-p)(t + offset)) at every interior node, for nonnegative fields."""
    if not p < 2.0:
        raise InvalidParameterError("the bound concerns the singular range p < 2")
    if np.min(fld.values) < 0.0:
        raise PreconditionError("the bound applies to nonnegative solutions only")
    grid = fld.grid
    ut = ut_values if ut_values is not None else time_derivative_field(fld).values
    t = grid.times[(None,) * grid.n + (slice(None),)]
    bound = fld.values / ((2.0 - p) * (t + t_offset))
    region = region or Region.interior_box(grid, space_margin=1, time_margin=1)
    window = region.slices
    excess = float(np.max(ut[window] - bound[window]))
    return Verdict.compare(
        "benilan_crandall",
        excess,
        0.0,
        slack,
        provenance={"p": p, "t_offset": t_offset, "grid": grid.shape},
    )


def maximum_principle_verdict(fld: SpaceTimeField, slack: float = 1e-9) -> Verdict:
    """Solution range bounded by the parabolic boundary data range."""
    values = fld.values
    grid = fld.grid
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
    boundary = np.concatenate(pieces)
    lo, hi = float(np.min(boundary)), float(np.max(boundary))
    overshoot = max(float(np.max(values)) - hi, lo - float(np.min(values)))
    return Verdict.compare(
        "maximum_principle",
        overshoot,
        0.0,
        slack,
        provenance={"boundary_min": lo, "boundary_max": hi, "grid": grid.shape},
    )


# --- sweep studies --------------------------------------------------------------


@dataclass
class ConvergenceEntry:
    eps: float
    j_eps: float
    w_eps: float
    m_eps: float
    o_eps: float
    grad_lp_mass: float
    l2_dist: float
    grad_lp_dist: float
    rel_l2_dist: float
    rel_grad_lp_dist: float
    tol_disc: float


@dataclass
class ConvergenceReport:
    """Per-regularization functionals plus the certified gradient bound.

    tol_disc characterizes the resolution: the worst identity residual
    slack observed across the sweep entries (per-entry values are kept in
    the entries themselves).
    """

    p: float
    entries: list[ConvergenceEntry]
    constant_cp: float
    certificate_k: float
    reference_grad_mass: float
    reference_substituted: bool
    tol_disc: float
    verdicts: list[Verdict]
    floored: bool = False

    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


def _decreasing_verdict(name, eps_values, values, slack_factor=0.05):
    ok = all(nxt <= prev * (1.0 + slack_factor) for prev, nxt in zip(values, values[1:]))
    worst = max(
        (nxt / prev if prev > 0 else math.inf for prev, nxt in zip(values, values[1:])),
        default=0.0,
    )
    return Verdict.compare(
        name,
        worst,
        1.0 + slack_factor,
        0.0,
        provenance={"eps_values": list(eps_values), "values": [float(v) for v in values]},
        extra_ok=ok,
    )


def convergence_study(
    plan: SweepPlan,
    boundary: BoundaryData,
    reference: AnalyticSolution | None = None,
    cutoff=None,
    solver_defaults: dict | None = None,
) -> ConvergenceReport:
    """Solve along the sweep and certify the approximation functionals.

    reference supplies the limit solution; when absent, the smallest-entry
    solve stands in and the substitution is recorded on the report.
    """
    grid = plan.grid
    p = plan.p
    solver_defaults = solver_defaults or {}
    delta = plan.params.delta if plan.params is not None else 0.1
    region = Region.whole(grid)

    fields: dict[float, SpaceTimeField] = {}
    floored = False
    for eps in plan.eps_values:
        params = SolverParams(p=p, eps=eps, **solver_defaults)
        fld, log = solve_regularized(grid, params, boundary)
        fields[eps] = fld
        floored = floored or log.floored

    substituted = reference is None
    if substituted:
        ref_field = fields[plan.eps_values[-1]]
    else:
        ref_field = reference.sample_on(grid)

    if cutoff is None:
        cutoff = _default_sweep_cutoff(grid)

    mes = _cylinder_measure(grid)
    ref_grad_mass = gradient_lp_mass(ref_field, p)
    ref_l2 = lp_norm(ref_field.values, 2.0, region)
    ref_grad_norm = lp_norm(gradient_field(ref_field), p, region)

    entries = []
    cp_candidates = [1.0]
    for eps in plan.eps_values:
        fld = fields[eps]
        j_val = j_eps(fld, p, eps)
        w_val = w_eps(fld, ref_field, p, eps)
        m_val, o_val = m_eps_and_o_eps(fld, ref_field, p, eps, delta)
        grad_mass = gradient_lp_mass(fld, p)
        diff = fld.values - ref_field.values
        l2_dist = lp_norm(diff, 2.0, region)
        grad_dist = lp_norm(gradient_field(fld) - gradient_field(ref_field), p, region)
        tol = discretization_tolerance(fld, cutoff, p, eps)
        entries.append(
            ConvergenceEntry(
                eps=eps,
                j_eps=j_val,
                w_eps=w_val,
                m_eps=m_val,
                o_eps=o_val,
                grad_lp_mass=grad_mass,
                l2_dist=l2_dist,
                grad_lp_dist=grad_dist,
                rel_l2_dist=l2_dist / ref_l2 if ref_l2 > 0 else l2_dist,
                rel_grad_lp_dist=grad_dist / ref_grad_norm if ref_grad_norm > 0 else grad_dist,
                tol_disc=tol,
            )
        )
        cp_candidates.append(j_val / (ref_grad_mass + eps**p * mes))

    constant_cp = max(cp_candidates)
    eps_max = plan.eps_values[0]
    certificate_k = 3.0 * constant_cp * (ref_grad_mass + eps_max**p * mes)
    tol_disc = max(e.tol_disc for e in entries)

    verdicts = [
        Verdict.compare(
            "w_eps_nonpositive_up_to_tol",
            max(e.w_eps for e in entries),
            tol_disc,
            0.0,
            provenance={"w_values": [e.w_eps for e in entries],
                        "tolerances": [e.tol_disc for e in entries]},
        ),
        Verdict.compare(
            "gradient_mass_certificate",
            max(e.grad_lp_mass for e in entries),
            certificate_k,
            0.0,
            provenance={"grad_masses": [e.grad_lp_mass for e in entries],
                        "constant_cp": constant_cp},
        ),
    ]
    compare_entries = entries if not substituted else entries[:-1]
    verdicts.append(
        _decreasing_verdict(
            "l2_distance_decreasing",
            [e.eps for e in compare_entries],
            [e.l2_dist for e in compare_entries],
        )
    )
    verdicts.append(
        _decreasing_verdict(
            "grad_lp_distance_decreasing",
            [e.eps for e in compare_entries],
            [e.grad_lp_dist for e in compare_entries],
        )
    )
    verdicts.append(
        _decreasing_verdict(
            "o_eps_decreasing_to_zero",
            [e.eps for e in entries],
            [abs(e.o_eps) for e in entries],
        )
    )
    return ConvergenceReport(
        p=p,
        entries=entries,
        constant_cp=constant_cp,
        certificate_k=certificate_k,
        reference_grad_mass=ref_grad_mass,
        reference_substituted=substituted,
        tol_disc=tol_disc,
        verdicts=verdicts,
        floored=floored,
    )


def _cylinder_measure(grid: Grid) -> float:
    mes = grid.time_extent[1] - grid.time_extent[0]
    for lo, hi in grid.space_extent:
        mes *= hi - lo
    return mes


def default_cutoff(grid: Grid):
    """A cutoff spanning most of the cylinder, margins sized to the stencils."""
    return _default_sweep_cutoff(grid)


def _default_sweep_cutoff(grid: Grid):
    box = []
    ramps = []
    for axis, (lo, hi) in enumerate(grid.space_extent):
        width = hi - lo
        margin = max(0.125 * width, 2.5 * grid.h[axis])
        box.append((lo + margin, hi - margin))
        ramps.append(0.1 * width)
    t_lo, t_hi = grid.time_extent
    span = t_hi - t_lo
    t_margin = max(0.075 * span, 1.5 * grid.tau)
    box.append((t_lo + t_margin, t_hi - t_margin))
    ramps.append(min(0.2 * span, 0.5 * ((t_hi - t_margin) - (t_lo + t_margin))))
    return make_cutoff(grid, tuple(box), tuple(ramps))


def ut_summability_study(
    plan: SweepPlan,
    theta: float,
    region: Region,
    boundary: BoundaryData,
    solver_defaults: dict | None = None,
) -> Verdict:
    """Boundedness of iint |u_t|^theta and of the envelope mass along the sweep.

    Exponent regime: theta = 2 exactly when p >= 3/2 or n = 1; otherwise
    1 < theta < 1/(2-p) with p < 3/2 in two dimensions.
    """
    grid = plan.grid
    p = plan.p
    if p >= 1.5 or grid.n == 1:
        if theta != 2.0:
            raise WrongRegimeError("take theta = 2 when p >= 3/2 or in one dimension")
    else:
        if not (1.0 < theta < 1.0 / (2.0 - p)):
            raise WrongRegimeError(
                f"theta = {theta} outside (1, {1.0 / (2.0 - p):.4g}) for p = {p} < 3/2"
            )
    solver_defaults = solver_defaults or {}
    ut_masses = []
    envelope_masses = []
    for eps in plan.eps_values:
        fld, _ = solve_regularized(grid, SolverParams(p=p, eps=eps, **solver_defaults), boundary)
        ut_masses.append(ut_theta_mass(fld, theta, region))
        envelope = flux_derivative_bound_field(fld, p, eps)
        envelope_masses.append(spacetime_integral(envelope.values**theta, region))
    ut_verdict = uniform_boundedness("ut_theta_mass_bounded", plan.eps_values, ut_masses)
    env_verdict = uniform_boundedness(
        "flux_derivative_envelope_bounded", plan.eps_values, envelope_masses
    )
    worst = max(ut_verdict.left, env_verdict.left)
    return Verdict.compare(
        "time_derivative_summability",
        worst,
        BOUNDEDNESS_RATIO,
        0.0,
        provenance={
            "p": p,
            "theta": theta,
            "eps_values": list(plan.eps_values),
            "ut_theta_masses": ut_masses,
            "envelope_masses": envelope_masses,
        },
    )
