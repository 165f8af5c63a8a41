"""Uniform tensor grids on a space-time cylinder, difference stencils, quadrature.

The cylinder is Omega x (t_lo, t_hi) with Omega a box in 1 or 2 space
dimensions.  Fields store nodal values with shape (N_x+1[, N_y+1], N_t+1).
All operators here are pure functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, OutOfDomainError

MIN_CELLS = 8
MIN_STEPS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid over the space-time cylinder.

    space_extent: ((x_lo, x_hi),) or ((x_lo, x_hi), (y_lo, y_hi))
    cells:        nodes-minus-one per spatial axis
    time_extent:  (t_lo, t_hi)
    steps:        number of time steps (levels = steps + 1)
    """

    space_extent: tuple[tuple[float, float], ...]
    cells: tuple[int, ...]
    time_extent: tuple[float, float]
    steps: int

    def __post_init__(self):
        extent = tuple((float(lo), float(hi)) for lo, hi in self.space_extent)
        cells = tuple(int(c) for c in self.cells)
        object.__setattr__(self, "space_extent", extent)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "time_extent", tuple(float(t) for t in self.time_extent))
        object.__setattr__(self, "steps", int(self.steps))
        if len(extent) not in (1, 2):
            raise InvalidParameterError(f"spatial dimension must be 1 or 2, got {len(extent)}")
        if len(cells) != len(extent):
            raise InvalidParameterError("cells and space_extent must have equal length")
        for c in cells:
            if c < MIN_CELLS:
                raise InvalidParameterError(f"need at least {MIN_CELLS} cells per axis, got {c}")
        if self.steps < MIN_STEPS:
            raise InvalidParameterError(f"need at least {MIN_STEPS} time steps, got {self.steps}")
        for lo, hi in extent:
            if not hi > lo:
                raise InvalidParameterError(f"empty spatial extent ({lo}, {hi})")
        if not self.time_extent[1] > self.time_extent[0]:
            raise InvalidParameterError(f"empty time extent {self.time_extent}")

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((hi - lo) / c for (lo, hi), c in zip(self.space_extent, self.cells))

    @property
    def tau(self) -> float:
        t_lo, t_hi = self.time_extent
        return (t_hi - t_lo) / self.steps

    @property
    def space_shape(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.space_shape + (self.steps + 1,)

    def axis_coords(self, axis: int) -> np.ndarray:
        # node i sits exactly at lo + i*h (single rounding per index, no drift)
        lo = self.space_extent[axis][0]
        return lo + np.arange(self.cells[axis] + 1) * self.h[axis]

    @property
    def times(self) -> np.ndarray:
        return self.time_extent[0] + np.arange(self.steps + 1) * self.tau

    def space_meshes(self) -> tuple[np.ndarray, ...]:
        """Spatial coordinate arrays broadcast to space_shape."""
        axes = [self.axis_coords(i) for i in range(self.n)]
        if self.n == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def spacetime_meshes(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays (x[, y], t) broadcastable to the full field shape."""
        space = self.space_meshes()
        space = tuple(c[..., None] for c in space)
        t = self.times[(None,) * self.n + (slice(None),)]
        return space + (t,)

    def sample(self, func) -> "SpaceTimeField":
        """Evaluate func(x[, y], t) on every node and wrap it as a field."""
        coords = self.spacetime_meshes()
        values = np.broadcast_to(func(*coords), self.shape).astype(float)
        return SpaceTimeField(self, values.copy())

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(
            self.space_extent,
            tuple(c * factor for c in self.cells),
            self.time_extent,
            self.steps * factor,
        )


@dataclass
class SpaceTimeField:
    """Nodal values of a scalar function over a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise InvalidParameterError(
                f"field shape {self.values.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("field contains non-finite values")

    def copy(self) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.values.copy())

    def level(self, k: int) -> np.ndarray:
        return self.values[..., k]


@dataclass(frozen=True)
class Region:
    """Axis-aligned index sub-box used for local (interior) integrals.

    Ranges are half-open index windows (lo, hi) per spatial axis plus one
    for time, directly usable as slices.
    """

    grid: Grid
    space_ranges: tuple[tuple[int, int], ...]
    time_range: tuple[int, int]
    interior: bool = field(default=False)

    def __post_init__(self):
        if len(self.space_ranges) != self.grid.n:
            raise InvalidParameterError("region rank does not match grid dimension")
        for (lo, hi), count in zip(self.space_ranges, self.grid.space_shape):
            if not (0 <= lo < hi <= count):
                raise InvalidParameterError(f"empty or out-of-range window ({lo}, {hi})")
            if self.interior and not (0 < lo and hi < count):
                raise InvalidParameterError("interior region touches the spatial boundary")
        lo, hi = self.time_range
        if not (0 <= lo < hi <= self.grid.steps + 1):
            raise InvalidParameterError(f"empty or out-of-range time window ({lo}, {hi})")
        if self.interior and not (0 < lo and hi < self.grid.steps + 1):
            raise InvalidParameterError("interior region touches the time boundary")

    @classmethod
    def whole(cls, grid: Grid) -> "Region":
        return cls(
            grid,
            tuple((0, m) for m in grid.space_shape),
            (0, grid.steps + 1),
        )

    @classmethod
    def interior_box(cls, grid: Grid, space_margin: int = 2, time_margin: int = 1) -> "Region":
        # default margins leave room for every stencil used in the package
        return cls(
            grid,
            tuple((space_margin, m - space_margin) for m in grid.space_shape),
            (time_margin, grid.steps + 1 - time_margin),
            interior=True,
        )

    @property
    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(lo, hi) for lo, hi in self.space_ranges) + (
            slice(self.time_range[0], self.time_range[1]),
        )


def _check_interior(grid: Grid, node, time_level: int, margin: int = 1):
    idx = (node,) if np.isscalar(node) else tuple(node)
    if len(idx) != grid.n:
        raise InvalidParameterError(f"node index rank {len(idx)} != dimension {grid.n}")
    for i, count in zip(idx, grid.space_shape):
        if not (margin <= i <= count - 1 - margin):
            raise OutOfDomainError(f"node {idx} too close to the spatial boundary for the stencil")
    if not (0 <= time_level <= grid.steps):
        raise OutOfDomainError(f"time level {time_level} out of range")
    return idx


def gradient(fld: SpaceTimeField, node, time_level: int) -> np.ndarray:
    """Central-difference spatial gradient at an interior node; exact on affine fields."""
    grid = fld.grid
    idx = _check_interior(grid, node, time_level, margin=1)
    u = fld.values[..., time_level]
    out = np.empty(grid.n)
    for axis in range(grid.n):
        up = list(idx)
        dn = list(idx)
        up[axis] += 1
        dn[axis] -= 1
        out[axis] = (u[tuple(up)] - u[tuple(dn)]) / (2.0 * grid.h[axis])
    return out


def hessian_frobenius_sq(fld: SpaceTimeField, node, time_level: int) -> float:
    """Sum of squares of all second-order central differences, mixed terms included.

    Mixed derivatives use the four-point cross stencil, so the value is
    symmetric in the axis pair by construction.
    """
    grid = fld.grid
    idx = _check_interior(grid, node, time_level, margin=1)
    u = fld.values[..., time_level]
    h = grid.h
    total = 0.0
    for a in range(grid.n):
        up = list(idx)
        dn = list(idx)
        up[a] += 1
        dn[a] -= 1
        second = (u[tuple(up)] - 2.0 * u[idx] + u[tuple(dn)]) / h[a] ** 2
        total += second**2
    for a in range(grid.n):
        for b in range(a + 1, grid.n):
            pp = list(idx)
            pm = list(idx)
            mp = list(idx)
            mm = list(idx)
            pp[a] += 1
            pp[b] += 1
            pm[a] += 1
            pm[b] -= 1
            mp[a] -= 1
            mp[b] += 1
            mm[a] -= 1
            mm[b] -= 1
            mixed = (u[tuple(pp)] - u[tuple(pm)] - u[tuple(mp)] + u[tuple(mm)]) / (
                4.0 * h[a] * h[b]
            )
            total += 2.0 * mixed**2
    return float(total)


def _trapezoid_weights(count: int, spacing: float) -> np.ndarray:
    w = np.full(count, spacing)
    w[0] = 0.5 * spacing
    w[-1] = 0.5 * spacing
    return w


def spacetime_integral(values: np.ndarray, region: Region) -> float:
    """Tensor-product trapezoidal rule over a region; samples are nodal.

    numpy's pairwise summation keeps the reduction order fixed, so results
    are reproducible bit-for-bit on a given platform.
    """
    grid = region.grid
    sub = np.asarray(values, dtype=float)[region.slices]
    expected = tuple(hi - lo for lo, hi in region.space_ranges) + (
        region.time_range[1] - region.time_range[0],
    )
    if sub.shape != expected:
        raise InvalidParameterError(f"integrand shape {values.shape} does not cover the region")
    out = sub
    for axis in range(grid.n):
        w = _trapezoid_weights(out.shape[0], grid.h[axis])
        out = np.tensordot(w, out, axes=(0, 0))
    wt = _trapezoid_weights(out.shape[-1], grid.tau)
    return float(np.dot(out, wt))


def space_integral(values: np.ndarray, region: Region) -> float:
    """Trapezoidal integral over the region's spatial window of a single slice."""
    grid = region.grid
    sub = np.asarray(values, dtype=float)[region.slices[:-1]]
    out = sub
    for axis in range(grid.n):
        w = _trapezoid_weights(out.shape[0], grid.h[axis])
        out = np.tensordot(w, out, axes=(0, 0))
    return float(out)


def lp_norm(values: np.ndarray, exponent: float, region: Region) -> float:
    """(integral of |.|^q)^(1/q) over a region.

    Accepts scalar nodal samples or a stacked vector field of shape
    (n,) + grid.shape, whose pointwise magnitude is integrated.
    """
    if exponent < 1:
        raise InvalidParameterError(f"L^q norm needs q >= 1, got {exponent}")
    values = np.asarray(values, dtype=float)
    if values.ndim == region.grid.n + 2:
        magnitude = np.sqrt(np.sum(values**2, axis=0))
    else:
        magnitude = np.abs(values)
    mass = spacetime_integral(magnitude**exponent, region)
    return float(mass ** (1.0 / exponent))


def time_derivative_values(values: np.ndarray, tau: float) -> np.ndarray:
    """Centered time differences inside, one-sided second order at the ends."""
    out = np.empty_like(values)
    out[..., 1:-1] = (values[..., 2:] - values[..., :-2]) / (2.0 * tau)
    out[..., 0] = (-3.0 * values[..., 0] + 4.0 * values[..., 1] - values[..., 2]) / (2.0 * tau)
    out[..., -1] = (3.0 * values[..., -1] - 4.0 * values[..., -2] + values[..., -3]) / (2.0 * tau)
    return out


def gradient_field(fld: SpaceTimeField) -> np.ndarray:
    """Nodal spatial gradient, shape (n,) + grid.shape.

    Central differences inside, one-sided second-order on the boundary
    rings, so affine fields are reproduced exactly everywhere.
    """
    grid = fld.grid
    comps = [
        np.gradient(fld.values, grid.h[axis], axis=axis, edge_order=2)
        for axis in range(grid.n)
    ]
    return np.stack(comps, axis=0)


def gradient_sq_field(fld: SpaceTimeField) -> np.ndarray:
    g = gradient_field(fld)
    return np.sum(g**2, axis=0)


def hessian_frobenius_sq_field(fld: SpaceTimeField) -> np.ndarray:
    """Nodal |D^2 u|^2 on the margin-1 interior; the outermost ring is zero.

    The node-wise operator raises out-of-domain on that ring instead; the
    field version zero-fills so it can feed compactly supported integrands.
    """
    grid = fld.grid
    u = fld.values
    h = grid.h
    out = np.zeros(grid.shape)
    if grid.n == 1:
        uxx = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h[0] ** 2
        out[1:-1] = uxx**2
    else:
        uxx = (u[2:, 1:-1] - 2.0 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / h[0] ** 2
        uyy = (u[1:-1, 2:] - 2.0 * u[1:-1, 1:-1] + u[1:-1, :-2]) / h[1] ** 2
        uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4.0 * h[0] * h[1])
        out[1:-1, 1:-1] = uxx**2 + uyy**2 + 2.0 * uxy**2
    return out
