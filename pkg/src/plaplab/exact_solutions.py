"""Closed-form reference solutions and strong-form substitution checks.

Every nontrivial closed form is admitted only through a substitution gate:
its declared evaluators are plugged into the flow equation with high-order
finite differences and must reproduce a residual below 1e-6 before the
solution object is released.  A transcription error therefore cannot
silently poison downstream accuracy tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidDomainError, InvalidParameterError, OracleVerificationError
from .grid import Grid, SpaceTimeField, time_derivative_values

ZERO_GRADIENT_CUTOFF = 1e-14
FD_STEP = 2e-3
GATE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ValidityDomain:
    """Where a closed form may be evaluated: optional box, excluded origin ball, time window."""

    space_box: tuple[tuple[float, float], ...] | None = None
    min_radius: float = 0.0
    time_interval: tuple[float, float] = (-np.inf, np.inf)

    def admits_grid(self, grid: Grid) -> bool:
        if self.space_box is not None:
            for (glo, ghi), (dlo, dhi) in zip(grid.space_extent, self.space_box):
                if glo < dlo or ghi > dhi:
                    return False
        t_lo, t_hi = grid.time_extent
        if t_lo < self.time_interval[0] or t_hi > self.time_interval[1]:
            return False
        if self.min_radius > 0.0:
            meshes = grid.space_meshes()
            r = np.sqrt(sum(m**2 for m in meshes))
            if np.min(r) < self.min_radius:
                return False
        return True


@dataclass(frozen=True)
class AnalyticSolution:
    """Closed-form solution with evaluators for u, its gradient and u_t.

    Evaluators take broadcastable coordinate arrays (x[, y], t); grad returns
    the components stacked along a leading axis.
    """

    n: int
    u: Callable
    grad: Callable
    u_t: Callable
    domain: ValidityDomain = field(default_factory=ValidityDomain)
    nonnegative: bool = False

    def _check_grid(self, grid: Grid):
        if grid.n != self.n:
            raise InvalidDomainError(f"solution is {self.n}-dimensional, grid is {grid.n}-dimensional")
        if not self.domain.admits_grid(grid):
            raise InvalidDomainError("grid leaves the solution's validity domain")

    def sample_on(self, grid: Grid) -> SpaceTimeField:
        self._check_grid(grid)
        return grid.sample(self.u)

    def sample_ut_on(self, grid: Grid) -> SpaceTimeField:
        self._check_grid(grid)
        return grid.sample(self.u_t)

    def sample_grad_on(self, grid: Grid) -> np.ndarray:
        self._check_grid(grid)
        coords = grid.spacetime_meshes()
        g = self.grad(*coords)
        out = np.empty((self.n,) + grid.shape)
        for i in range(self.n):
            out[i] = np.broadcast_to(g[i], grid.shape)
        return out


def regularized_flux(grad_components: np.ndarray, p: float, eps: float) -> np.ndarray:
    """Flux (|g|^2 + eps^2)^((p-2)/2) g; zero where the gradient vanishes at eps = 0."""
    g = np.asarray(grad_components, dtype=float)
    magnitude_sq = np.sum(g**2, axis=0)
    if eps > 0.0:
        coefficient = (magnitude_sq + eps**2) ** ((p - 2.0) / 2.0)
    else:
        safe = np.where(magnitude_sq < ZERO_GRADIENT_CUTOFF**2, 1.0, magnitude_sq)
        coefficient = np.where(
            magnitude_sq < ZERO_GRADIENT_CUTOFF**2, 0.0, safe ** ((p - 2.0) / 2.0)
        )
    return coefficient * g


def strong_form_residual_at(
    solution: AnalyticSolution,
    space_points: np.ndarray,
    times: np.ndarray,
    p: float,
    eps: float = 0.0,
    step: float = FD_STEP,
) -> np.ndarray:
    """u_t - div(flux) at scattered points, divergence by 4th-order differences.

    The gradient entering the flux comes from the declared evaluator, so one
    level of numerical differentiation suffices.
    """
    pts = np.atleast_2d(np.asarray(space_points, dtype=float))
    times = np.asarray(times, dtype=float)

    def flux_component(coords, j):
        g = np.stack(
            [np.asarray(c, dtype=float) for c in solution.grad(*coords, times)], axis=0
        )
        return regularized_flux(g, p, eps)[j]

    divergence = np.zeros(pts.shape[0])
    for j in range(solution.n):
        values = []
        for shift in (-2, -1, 1, 2):
            coords = [pts[:, a].copy() for a in range(solution.n)]
            coords[j] += shift * step
            values.append(flux_component(coords, j))
        divergence += (-values[3] + 8.0 * values[2] - 8.0 * values[1] + values[0]) / (
            12.0 * step
        )
    ut = np.asarray(solution.u_t(*[pts[:, a] for a in range(solution.n)], times), dtype=float)
    return np.broadcast_to(ut, divergence.shape) - divergence


def linear_solution(a, b: float = 0.0) -> AnalyticSolution:
    """u = <a, x> + b: constant flux, so it solves the flow for every p and eps."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    n = a.size

    if n == 1:

        def u(x, t):
            return a[0] * x + b + 0.0 * t

        def grad(x, t):
            shape = np.broadcast(x, t).shape
            return np.broadcast_to(a[0], (1,) + shape)

        def u_t(x, t):
            return np.zeros(np.broadcast(x, t).shape)

    else:

        def u(x, y, t):
            return a[0] * x + a[1] * y + b + 0.0 * t

        def grad(x, y, t):
            shape = np.broadcast(x, y, t).shape
            out = np.empty((2,) + shape)
            out[0] = a[0]
            out[1] = a[1]
            return out

        def u_t(x, y, t):
            return np.zeros(np.broadcast(x, y, t).shape)

    return AnalyticSolution(n=n, u=u, grad=grad, u_t=u_t, nonnegative=bool(b >= 0 and np.all(a == 0)))


def _gate_sample_points(n: int, t_shift: float):
    # keep |x| away from the symmetry point: the flux loses higher-order
    # smoothness there and would spoil the 4th-order divergence stencil
    radii = [0.5, 1.0, 1.75, 2.5]
    if n == 1:
        xs = np.array([r * s for r in radii for s in (-1.0, 1.0)])
        pts = xs[:, None]
    else:
        vals = np.array([-1.75, -1.0, -0.5, 0.5, 1.0, 1.75])
        xx, yy = np.meshgrid(vals, vals, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
    times = np.linspace(0.0, 1.0, 3)
    space = np.repeat(pts, times.size, axis=0)
    tvals = np.tile(times, pts.shape[0])
    return space, tvals


def barenblatt_fast_diffusion(
    p: float, n: int, mass_param: float = 1.0, t_shift: float = 1.0
) -> AnalyticSolution:
    """Self-similar source-type solution of the fast-diffusion flow, 1 < p < 2.

    u(x, t) = T^(-n/lam) * [C + k * (|x| T^(-1/lam))^q]^(-(p-1)/(2-p)),
    T = t + t_shift, lam = n(p-2) + p, q = p/(p-1), k = ((2-p)/p) lam^(1/(1-p)).
    Strictly positive and smooth for T > 0.  Released only after the
    substitution gate passes.
    """
    if not (1.0 < p < 2.0):
        raise InvalidParameterError(f"fast-diffusion profile needs 1 < p < 2, got {p}")
    if mass_param <= 0.0 or t_shift <= 0.0:
        raise InvalidParameterError("mass parameter and time shift must be positive")
    lam = n * (p - 2.0) + p
    if lam <= 0.0:
        raise InvalidParameterError(
            f"self-similar exponent n(p-2)+p = {lam:.4g} must be positive (n={n}, p={p})"
        )
    C = float(mass_param)
    q = p / (p - 1.0)
    k = ((2.0 - p) / p) * lam ** (1.0 / (1.0 - p))
    s = (p - 1.0) / (2.0 - p)  # outer exponent is -s

    def _parts(r, t):
        T = t + t_shift
        eta = r * T ** (-1.0 / lam)
        phi = C + k * eta**q
        return T, eta, phi

    def _value(r, t):
        T, eta, phi = _parts(r, t)
        return T ** (-n / lam) * phi ** (-s)

    def _radial_slope(r, t):
        # du/dr; vanishes like r^(q-1) with q > 2 at the symmetry point
        T, eta, phi = _parts(r, t)
        return T ** (-n / lam) * (-s) * phi ** (-s - 1.0) * k * q * eta ** (q - 1.0) * T ** (
            -1.0 / lam
        )

    def _time_slope(r, t):
        T, eta, phi = _parts(r, t)
        u_val = T ** (-n / lam) * phi ** (-s)
        return (-(n / lam) * u_val + (s / lam) * T ** (-n / lam) * phi ** (-s - 1.0) * k * q * eta**q) / T

    if n == 1:

        def u(x, t):
            return _value(np.abs(x), t)

        def grad(x, t):
            r = np.abs(x)
            slope = _radial_slope(r, t)
            return np.stack([np.where(r > 0.0, np.sign(x) * slope, 0.0)], axis=0)

        def u_t(x, t):
            return _time_slope(np.abs(x), t)

    else:

        def u(x, y, t):
            return _value(np.sqrt(x**2 + y**2), t)

        def grad(x, y, t):
            r = np.sqrt(x**2 + y**2)
            slope = _radial_slope(r, t)
            safe_r = np.where(r > 0.0, r, 1.0)
            gx = np.where(r > 0.0, slope * x / safe_r, 0.0)
            gy = np.where(r > 0.0, slope * y / safe_r, 0.0)
            return np.stack(np.broadcast_arrays(gx, gy), axis=0)

        def u_t(x, y, t):
            return _time_slope(np.sqrt(x**2 + y**2), t)

    solution = AnalyticSolution(
        n=n,
        u=u,
        grad=grad,
        u_t=u_t,
        domain=ValidityDomain(time_interval=(-t_shift / 2.0, np.inf)),
        nonnegative=True,
    )

    pts, tvals = _gate_sample_points(n, t_shift)
    residual = strong_form_residual_at(solution, pts, tvals, p, eps=0.0)
    worst = float(np.max(np.abs(residual)))
    if worst > GATE_TOLERANCE:
        raise OracleVerificationError(
            f"fast-diffusion profile failed the substitution gate: max residual {worst:.3e}"
        )
    return solution


def radial_p_harmonic(p: float, n: int = 2, min_radius: float = 0.25) -> AnalyticSolution:
    """Stationary radial solution u = |x|^((p-2)/(p-1)) in the plane, origin excluded."""
    if n != 2:
        raise InvalidParameterError("the radial stationary profile is implemented for n = 2")
    if not (1.0 < p <= 2.0):
        raise InvalidParameterError(f"need 1 < p <= 2, got {p}")
    if min_radius <= 0.0:
        raise InvalidDomainError("the validity domain must exclude a ball around the origin")
    gamma = (p - 2.0) / (p - 1.0)

    def u(x, y, t):
        r = np.sqrt(x**2 + y**2)
        return r**gamma + 0.0 * t

    def grad(x, y, t):
        r = np.sqrt(x**2 + y**2)
        coef = gamma * r ** (gamma - 2.0)
        shape = np.broadcast(x, y, t).shape
        out = np.empty((2,) + shape)
        out[0] = np.broadcast_to(coef * x, shape)
        out[1] = np.broadcast_to(coef * y, shape)
        return out

    def u_t(x, y, t):
        return np.zeros(np.broadcast(x, y, t).shape)

    return AnalyticSolution(
        n=2,
        u=u,
        grad=grad,
        u_t=u_t,
        domain=ValidityDomain(min_radius=min_radius),
        nonnegative=True,
    )


def pde_residual(solution, grid: Grid, p: float, eps: float) -> SpaceTimeField:
    """Pointwise strong-form residual u_t - div((|grad u|^2 + eps^2)^((p-2)/2) grad u).

    Analytic solutions are differentiated with 4th-order stencils of width
    FD_STEP around every node; discrete fields use the grid stencils
    (second-order, one-sided on the boundary rings, where the values are
    least accurate).
    """
    if isinstance(solution, AnalyticSolution):
        solution._check_grid(grid)
        coords = grid.spacetime_meshes()
        space_shapes = grid.space_meshes()
        if grid.n == 1:
            pts = space_shapes[0][:, None]
        else:
            pts = np.column_stack([m.ravel() for m in space_shapes])
        res = np.empty(grid.shape)
        for level, t in enumerate(grid.times):
            values = strong_form_residual_at(
                solution, pts, np.full(pts.shape[0], t), p, eps
            )
            res[..., level] = values.reshape(grid.space_shape)
        return SpaceTimeField(grid, res)

    fld = solution
    if fld.grid != grid:
        raise InvalidParameterError("field lives on a different grid")
    comps = [
        np.gradient(fld.values, grid.h[axis], axis=axis, edge_order=2)
        for axis in range(grid.n)
    ]
    flux = regularized_flux(np.stack(comps, axis=0), p, eps)
    divergence = np.zeros(grid.shape)
    for axis in range(grid.n):
        divergence += np.gradient(flux[axis], grid.h[axis], axis=axis, edge_order=2)
    ut = time_derivative_values(fld.values, grid.tau)
    return SpaceTimeField(grid, ut - divergence)
