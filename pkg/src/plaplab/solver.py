"""Implicit solver for the regularized flow with prescribed parabolic boundary data.

Backward Euler in time; each step runs a lagged-diffusivity (Picard)
iteration: the coefficient (|grad u|^2 + eps^2)^((p-2)/2) is frozen from the
previous iterate, leaving one symmetric positive-definite linear solve per
sweep.  1-D steps use direct tridiagonal elimination, 2-D steps a matrix-free
conjugate gradient on the five-point system.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    InternalCoefficientError,
    InvalidParameterError,
    InvalidTestFunctionError,
    SolverFailure,
)
from .exact_solutions import regularized_flux
from .grid import Grid, Region, SpaceTimeField, gradient_field, spacetime_integral

DEFAULT_GRADIENT_FLOOR = 1e-8


@dataclass(frozen=True)
class SolverParams:
    """Exponent, regularization and iteration controls for one solve."""

    p: float
    eps: float
    picard_tol: float = 1e-10
    picard_max_iters: int = 200
    linear_tol: float = 1e-12
    source: Callable | None = None
    gradient_floor: float = DEFAULT_GRADIENT_FLOOR

    def __post_init__(self):
        if not (1.0 < self.p <= 2.0):
            raise InvalidParameterError(f"need 1 < p <= 2, got {self.p}")
        if self.eps < 0.0:
            raise InvalidParameterError(f"regularization must be >= 0, got {self.eps}")
        if self.picard_tol <= 0.0 or self.linear_tol <= 0.0:
            raise InvalidParameterError("tolerances must be strictly positive")
        if self.picard_max_iters < 1:
            raise InvalidParameterError("picard_max_iters must be at least 1")
        if self.eps == 0.0 and self.gradient_floor <= 0.0:
            raise InvalidParameterError(
                "eps = 0 is admitted only together with a positive gradient floor"
            )

    @property
    def floored(self) -> bool:
        return self.eps == 0.0


@dataclass(frozen=True)
class BoundaryData:
    """Values g(x, t) on the parabolic boundary (lateral sides plus initial slice).

    A single space-time evaluator supplies both parts, so the initial slice
    is consistent with the lateral data at the corners by construction.
    """

    evaluate: Callable

    @classmethod
    def from_solution(cls, solution) -> "BoundaryData":
        return cls(solution.u)

    @classmethod
    def constant(cls, value: float) -> "BoundaryData":
        c = float(value)
        return cls(lambda *args: np.full(np.broadcast(*args).shape, c))

    def sample_level(self, grid: Grid, t: float) -> np.ndarray:
        meshes = grid.space_meshes()
        values = np.broadcast_to(self.evaluate(*meshes, t), grid.space_shape).astype(float)
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError(f"boundary data is not finite at t = {t}")
        return values.copy()


@dataclass
class SolveLog:
    """Per-step iteration counts and final relative updates for one solve."""

    picard_iterations: list[int] = field(default_factory=list)
    final_updates: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = True
    floored: bool = False


def _nodal_diffusivity(grid: Grid, values: np.ndarray, params: SolverParams) -> np.ndarray:
    comps = [
        np.gradient(values, grid.h[axis], axis=axis, edge_order=2) for axis in range(grid.n)
    ]
    grad_sq = np.zeros(grid.space_shape)
    for c in comps:
        grad_sq += c**2
    if params.eps == 0.0:
        grad_sq = np.maximum(grad_sq, params.gradient_floor**2)
    coefficient = (grad_sq + params.eps**2) ** ((params.p - 2.0) / 2.0)
    if np.min(coefficient) <= 0.0 or not np.all(np.isfinite(coefficient)):
        raise InternalCoefficientError("frozen diffusivity is not strictly positive")
    return coefficient


def _solve_step_1d(
    grid: Grid, face_coeff: np.ndarray, rhs_interior: np.ndarray, boundary: np.ndarray
) -> np.ndarray:
    # (I - tau div(A grad .)) u = rhs with Dirichlet values eliminated
    h = grid.h[0]
    tau = grid.tau
    r = tau / h**2
    m = rhs_interior.size
    diag = 1.0 + r * (face_coeff[:-1] + face_coeff[1:])
    lower = -r * face_coeff[1:-1]
    upper = lower.copy()
    b = rhs_interior.copy()
    b[0] += r * face_coeff[0] * boundary[0]
    b[-1] += r * face_coeff[-1] * boundary[-1]
    ab = np.zeros((3, m))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, b)


def _apply_operator_2d(w: np.ndarray, ax: np.ndarray, ay: np.ndarray, grid: Grid) -> np.ndarray:
    hx, hy = grid.h
    flux_x = ax * (w[1:, :] - w[:-1, :])
    flux_y = ay * (w[:, 1:] - w[:, :-1])
    out = np.zeros_like(w)
    out[1:-1, 1:-1] = (flux_x[1:, 1:-1] - flux_x[:-1, 1:-1]) / hx**2 + (
        flux_y[1:-1, 1:] - flux_y[1:-1, :-1]
    ) / hy**2
    return out


def _solve_step_2d(
    grid: Grid,
    ax: np.ndarray,
    ay: np.ndarray,
    rhs_interior: np.ndarray,
    boundary: np.ndarray,
    tol: float,
    x0: np.ndarray,
) -> np.ndarray:
    """Conjugate gradient on the SPD system (I - tau div(A grad)) u = rhs."""
    tau = grid.tau
    inner = (slice(1, -1), slice(1, -1))

    def matvec(v_interior):
        w = np.zeros(grid.space_shape)
        w[inner] = v_interior
        return v_interior - tau * _apply_operator_2d(w, ax, ay, grid)[inner]

    lift = boundary.copy()
    lift[inner] = 0.0
    b = rhs_interior + tau * _apply_operator_2d(lift, ax, ay, grid)[inner]

    x = x0.copy()
    r = b - matvec(x)
    target = tol * max(float(np.linalg.norm(b)), 1e-300)
    if np.linalg.norm(r) <= target:
        return x
    d = r.copy()
    rho = float(np.sum(r * r))
    max_iters = 20 * b.size + 100
    for _ in range(max_iters):
        q = matvec(d)
        denom = float(np.sum(d * q))
        if denom <= 0.0:
            raise SolverFailure("conjugate gradient breakdown: operator not positive definite")
        alpha = rho / denom
        x += alpha * d
        r -= alpha * q
        if np.linalg.norm(r) <= target:
            return x
        rho_new = float(np.sum(r * r))
        d = r + (rho_new / rho) * d
        rho = rho_new
    raise SolverFailure("conjugate gradient did not reach the requested tolerance")


def picard_step(
    grid: Grid,
    params: SolverParams,
    previous_iterate: np.ndarray,
    previous_time_level: np.ndarray,
    boundary_slice: np.ndarray,
    source_values: np.ndarray | None = None,
) -> np.ndarray:
    """One frozen-coefficient implicit step: solve (I - tau div(A grad)) u = u_old + tau f.

    A is evaluated from previous_iterate at cell faces by arithmetic
    averaging of the adjacent nodal diffusivities, which keeps the system
    symmetric.
    """
    previous_iterate = np.asarray(previous_iterate, dtype=float)
    if not np.all(np.isfinite(previous_iterate)):
        raise InvalidParameterError("previous iterate contains non-finite values")
    nodal = _nodal_diffusivity(grid, previous_iterate, params)
    rhs = previous_time_level.copy()
    if source_values is not None:
        rhs = rhs + grid.tau * source_values

    if grid.n == 1:
        face = 0.5 * (nodal[:-1] + nodal[1:])
        interior = _solve_step_1d(grid, face, rhs[1:-1], boundary_slice)
        out = boundary_slice.copy()
        out[1:-1] = interior
        return out

    ax = 0.5 * (nodal[:-1, :] + nodal[1:, :])
    ay = 0.5 * (nodal[:, :-1] + nodal[:, 1:])
    inner = (slice(1, -1), slice(1, -1))
    interior = _solve_step_2d(
        grid, ax, ay, rhs[inner], boundary_slice, params.linear_tol, previous_iterate[inner]
    )
    out = boundary_slice.copy()
    out[inner] = interior
    return out


def solve_regularized(
    grid: Grid, params: SolverParams, boundary: BoundaryData
) -> tuple[SpaceTimeField, SolveLog]:
    """March the regularized flow over all time levels.

    Boundary nodes carry g exactly at every level; the initial level carries
    g(., t_lo).  Each step iterates picard_step from the previous time level
    (warm start) until the relative update drops below picard_tol.
    """
    start = time.perf_counter()
    log = SolveLog(floored=params.floored)
    values = np.empty(grid.shape)
    values[..., 0] = boundary.sample_level(grid, grid.times[0])

    for k in range(1, grid.steps + 1):
        t = grid.times[k]
        boundary_slice = boundary.sample_level(grid, t)
        previous_level = values[..., k - 1]
        if params.source is not None:
            meshes = grid.space_meshes()
            source_values = np.broadcast_to(
                params.source(*meshes, t), grid.space_shape
            ).astype(float)
        else:
            source_values = None

        iterate = previous_level.copy()
        _impose_boundary(iterate, boundary_slice, grid)
        update = np.inf
        iterations = 0
        for iterations in range(1, params.picard_max_iters + 1):
            new_iterate = picard_step(
                grid, params, iterate, previous_level, boundary_slice, source_values
            )
            scale = max(float(np.max(np.abs(new_iterate))), 1e-300)
            update = float(np.max(np.abs(new_iterate - iterate))) / scale
            iterate = new_iterate
            if update <= params.picard_tol:
                break
        log.picard_iterations.append(iterations)
        log.final_updates.append(update)
        if update > params.picard_tol:
            log.converged = False
            log.wall_time = time.perf_counter() - start
            raise SolverFailure(
                f"lagged-diffusivity iteration stalled at step {k} "
                f"(relative update {update:.3e} after {iterations} sweeps)",
                step_index=k,
                log=log,
            )
        values[..., k] = iterate

    log.wall_time = time.perf_counter() - start
    return SpaceTimeField(grid, values), log


def _impose_boundary(level: np.ndarray, boundary_slice: np.ndarray, grid: Grid):
    if grid.n == 1:
        level[0] = boundary_slice[0]
        level[-1] = boundary_slice[-1]
    else:
        level[0, :] = boundary_slice[0, :]
        level[-1, :] = boundary_slice[-1, :]
        level[:, 0] = boundary_slice[:, 0]
        level[:, -1] = boundary_slice[:, -1]


def _support_margin_violated(phi_values: np.ndarray, grid: Grid) -> bool:
    rings = []
    if grid.n == 1:
        rings += [phi_values[:2, :], phi_values[-2:, :]]
    else:
        rings += [
            phi_values[:2, :, :],
            phi_values[-2:, :, :],
            phi_values[:, :2, :],
            phi_values[:, -2:, :],
        ]
    rings += [phi_values[..., :2], phi_values[..., -2:]]
    return any(np.any(r != 0.0) for r in rings)


def weak_form_residual(fld: SpaceTimeField, phi, p: float, eps: float) -> float:
    """Weak-form defect of a field against a compactly supported test function.

    Returns  iint u phi_t - iint (|grad u|^2 + eps^2)^((p-2)/2) <grad u, grad phi>,
    zero up to discretization order when the field solves the flow.  phi must
    expose value / space_gradient / time_derivative evaluators (a cutoff does)
    and vanish on and near the parabolic boundary and the final slice.
    """
    grid = fld.grid
    coords = grid.spacetime_meshes()
    phi_values = np.broadcast_to(phi.value(*coords), grid.shape)
    if _support_margin_violated(phi_values, grid):
        raise InvalidTestFunctionError(
            "test function does not vanish near the parabolic boundary and final slice"
        )
    phi_t = np.broadcast_to(phi.time_derivative(*coords), grid.shape)
    phi_grad = phi.space_gradient(*coords)

    flux = regularized_flux(gradient_field(fld), p, eps)
    pairing = np.zeros(grid.shape)
    for axis in range(grid.n):
        pairing += flux[axis] * np.broadcast_to(phi_grad[axis], grid.shape)
    region = Region.whole(grid)
    return spacetime_integral(fld.values * phi_t, region) - spacetime_integral(
        pairing, region
    )
