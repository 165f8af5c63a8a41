"""Named integral quantities evaluated on discrete fields, plus the cutoff machinery.

Conventions used throughout: v = |grad u|^2 nodally (central differences),
V = v + eps^2, grad v by differencing the nodal v field (not by the chain
rule; the two agree to second order), |D^2 u|^2 by the grid's second-order
stencils.  Every integral is the tensor-product trapezoidal rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, InvalidSupportError
from .grid import (
    Grid,
    Region,
    SpaceTimeField,
    gradient,
    gradient_field,
    hessian_frobenius_sq_field,
    space_integral,
    spacetime_integral,
    time_derivative_values,
)

ZERO_GRADIENT_CUTOFF = 1e-14

VI_FORM_GRAD_VSQ = "grad_vsq"  # pairs grad(zeta) with grad(|grad u|^2)
VI_FORM_GRAD_U = "grad_u"  # pairs grad(zeta) with grad(u), as printed


def smoothstep(r: np.ndarray) -> np.ndarray:
    """Quintic smoothstep 6r^5 - 15r^4 + 10r^3 clamped to [0, 1]; C^2 at both ends."""
    r = np.clip(r, 0.0, 1.0)
    return r**3 * (10.0 + r * (-15.0 + 6.0 * r))


def smoothstep_slope(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    inside = (r > 0.0) & (r < 1.0)
    rr = np.where(inside, r, 0.0)
    return np.where(inside, 30.0 * rr**2 * (1.0 - rr) ** 2, 0.0)


class _AxisProfile:
    """One C^2 ramp-plateau-ramp factor: 0 outside [lo, hi], exactly 1 on the plateau."""

    def __init__(self, lo: float, hi: float, ramp: float):
        if ramp <= 0.0:
            raise InvalidSupportError("ramp width must be positive")
        if 2.0 * ramp > (hi - lo):
            raise InvalidSupportError(
                f"ramps of width {ramp} do not fit into the support extent ({lo}, {hi})"
            )
        self.lo = lo
        self.hi = hi
        self.ramp = ramp

    def value(self, c):
        up = smoothstep((np.asarray(c, dtype=float) - self.lo) / self.ramp)
        down = smoothstep((self.hi - np.asarray(c, dtype=float)) / self.ramp)
        return up * down

    def slope(self, c):
        c = np.asarray(c, dtype=float)
        up = smoothstep((c - self.lo) / self.ramp)
        down = smoothstep((self.hi - c) / self.ramp)
        d_up = smoothstep_slope((c - self.lo) / self.ramp) / self.ramp
        d_down = -smoothstep_slope((self.hi - c) / self.ramp) / self.ramp
        return d_up * down + up * d_down


class _ConstantProfile:
    def value(self, c):
        return np.ones(np.shape(c)) if np.ndim(c) else 1.0

    def slope(self, c):
        return np.zeros(np.shape(c)) if np.ndim(c) else 0.0


@dataclass(frozen=True)
class Cutoff:
    """Tensor-product cutoff zeta(x, t) in [0, 1] with exactly evaluable derivatives.

    Evaluators take broadcastable coordinate arrays (x[, y], t), mirroring
    grid.spacetime_meshes().
    """

    n: int
    space_profiles: tuple
    time_profile: object
    support_box: tuple
    has_time_ramp: bool

    def _space_factors(self, coords):
        return [prof.value(c) for prof, c in zip(self.space_profiles, coords)]

    def value(self, *coords):
        *space, t = coords
        out = self.time_profile.value(t)
        for factor in self._space_factors(space):
            out = out * factor
        return out

    def space_gradient(self, *coords):
        *space, t = coords
        factors = self._space_factors(space)
        tval = self.time_profile.value(t)
        comps = []
        for j in range(self.n):
            comp = self.space_profiles[j].slope(space[j]) * tval
            for i, factor in enumerate(factors):
                if i != j:
                    comp = comp * factor
            comps.append(comp)
        return np.stack(np.broadcast_arrays(*comps), axis=0) if self.n > 1 else np.stack(
            [comps[0]], axis=0
        )

    def time_derivative(self, *coords):
        *space, t = coords
        out = self.time_profile.slope(t)
        for factor in self._space_factors(space):
            out = out * factor
        return out

    def grad_zeta_zeta_t(self, *coords):
        """Gradient of the product zeta * zeta_t = s(x)^2 T(t) T'(t)."""
        *space, t = coords
        factors = self._space_factors(space)
        tt = self.time_profile.value(t) * self.time_profile.slope(t)
        comps = []
        for j in range(self.n):
            comp = 2.0 * self.space_profiles[j].slope(space[j]) * tt
            for i, factor in enumerate(factors):
                if i == j:
                    comp = comp * factor
                else:
                    comp = comp * factor**2
            comps.append(comp)
        return np.stack(np.broadcast_arrays(*comps), axis=0) if self.n > 1 else np.stack(
            [comps[0]], axis=0
        )

    # nodal samples on a grid ------------------------------------------------

    def zeta_nodal(self, grid: Grid) -> np.ndarray:
        return np.broadcast_to(self.value(*grid.spacetime_meshes()), grid.shape).copy()

    def zeta_t_nodal(self, grid: Grid) -> np.ndarray:
        return np.broadcast_to(
            self.time_derivative(*grid.spacetime_meshes()), grid.shape
        ).copy()

    def grad_nodal(self, grid: Grid) -> np.ndarray:
        g = self.space_gradient(*grid.spacetime_meshes())
        out = np.empty((grid.n,) + grid.shape)
        for i in range(grid.n):
            out[i] = np.broadcast_to(g[i], grid.shape)
        return out

    def grad_zzt_nodal(self, grid: Grid) -> np.ndarray:
        g = self.grad_zeta_zeta_t(*grid.spacetime_meshes())
        out = np.empty((grid.n,) + grid.shape)
        for i in range(grid.n):
            out[i] = np.broadcast_to(g[i], grid.shape)
        return out


def make_cutoff(grid: Grid, support_box, ramp_widths, time_compact: bool = True) -> Cutoff:
    """Build a tensor-product quintic-smoothstep cutoff supported in support_box.

    support_box lists (lo, hi) per spatial axis followed by the time window;
    ramp_widths gives the ramp length per axis (scalar broadcasts).  With
    time_compact=False the time factor is identically 1 (purely spatial
    cutoff; zeta_t vanishes) and the time window is ignored.
    """
    box = tuple((float(lo), float(hi)) for lo, hi in support_box)
    if len(box) != grid.n + 1:
        raise InvalidSupportError(f"support box needs {grid.n + 1} axis windows")
    if np.isscalar(ramp_widths):
        ramps = (float(ramp_widths),) * (grid.n + 1)
    else:
        ramps = tuple(float(w) for w in ramp_widths)
        if len(ramps) != grid.n + 1:
            raise InvalidSupportError("one ramp width per axis is required")

    for axis in range(grid.n):
        (blo, bhi) = box[axis]
        (dlo, dhi) = grid.space_extent[axis]
        if not (dlo < blo < bhi < dhi):
            raise InvalidSupportError(
                f"support window ({blo}, {bhi}) must lie strictly inside ({dlo}, {dhi})"
            )
    profiles = tuple(
        _AxisProfile(box[axis][0], box[axis][1], ramps[axis]) for axis in range(grid.n)
    )
    if time_compact:
        (blo, bhi) = box[-1]
        (dlo, dhi) = grid.time_extent
        if not (dlo < blo < bhi < dhi):
            raise InvalidSupportError(
                f"time support ({blo}, {bhi}) must lie strictly inside ({dlo}, {dhi})"
            )
        time_profile = _AxisProfile(blo, bhi, ramps[-1])
        has_ramp = True
    else:
        time_profile = _ConstantProfile()
        box = box[: grid.n] + (grid.time_extent,)
        has_ramp = False
    return Cutoff(
        n=grid.n,
        space_profiles=profiles,
        time_profile=time_profile,
        support_box=box,
        has_time_ramp=has_ramp,
    )


@dataclass(frozen=True)
class EstimateParams:
    """Exponents and absorption parameters shared by the estimate verdicts."""

    p: float
    alpha: float
    theta: float
    sigma: float
    kappa: float
    delta: float

    def __post_init__(self):
        if not (1.0 < self.p <= 2.0):
            raise InvalidParameterError(f"need 1 < p <= 2, got p = {self.p}")
        if not (1.0 - self.p < 2.0 * self.alpha < 0.0):
            raise InvalidParameterError(
                f"alpha = {self.alpha} violates 1 - p < 2 alpha < 0 at p = {self.p}"
            )
        if self.sigma <= 0.0 or self.kappa <= 0.0 or self.delta <= 0.0:
            raise InvalidParameterError("sigma, kappa and delta must be positive")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @classmethod
    def for_p(
        cls,
        p: float,
        theta: float | None = None,
        sigma: float | None = None,
        kappa: float = 0.05,
        delta: float = 0.1,
    ) -> "EstimateParams":
        """Defaults: alpha = (p-2)/2 where admissible, else the theta parameterization."""
        if theta is None:
            if 1.5 < p < 2.0:
                alpha = (p - 2.0) / 2.0
                theta = 1.0  # unused in this regime
            elif p == 2.0:
                alpha = -(p - 1.0) / 4.0
                theta = 1.0
            else:
                theta = 0.5 * (1.0 + 1.0 / (2.0 - p))
                alpha = (theta - 1.0) * (p - 2.0) / 2.0
        else:
            if not (1.0 < theta < 1.0 / (2.0 - p)):
                raise InvalidParameterError(
                    f"theta = {theta} outside (1, {1.0 / (2.0 - p):.4g}) at p = {p}"
                )
            alpha = (theta - 1.0) * (p - 2.0) / 2.0
        if sigma is None:
            sigma = (p - 1.0 + 2.0 * alpha) / 2.0
        return cls(p=p, alpha=alpha, theta=theta, sigma=sigma, kappa=kappa, delta=delta)


# --- nodal building blocks --------------------------------------------------


@dataclass
class FieldStencils:
    """Cached nodal derivative fields shared by the integral quantities."""

    grad: np.ndarray  # (n,) + shape
    v: np.ndarray  # |grad u|^2
    grad_v: np.ndarray  # (n,) + shape, differenced from nodal v
    hess_sq: np.ndarray  # |D^2 u|^2, zero on the outermost ring


def field_stencils(fld: SpaceTimeField) -> FieldStencils:
    grid = fld.grid
    grad = gradient_field(fld)
    v = np.sum(grad**2, axis=0)
    grad_v = np.stack(
        [np.gradient(v, grid.h[axis], axis=axis, edge_order=2) for axis in range(grid.n)],
        axis=0,
    )
    return FieldStencils(grad=grad, v=v, grad_v=grad_v, hess_sq=hessian_frobenius_sq_field(fld))


def _flux(grad: np.ndarray, p: float, eps: float) -> np.ndarray:
    g = np.asarray(grad, dtype=float)
    msq = np.sum(g**2, axis=0)
    if eps > 0.0:
        coef = (msq + eps**2) ** ((p - 2.0) / 2.0)
    else:
        tiny = msq < ZERO_GRADIENT_CUTOFF**2
        coef = np.where(tiny, 0.0, np.where(tiny, 1.0, msq) ** ((p - 2.0) / 2.0))
    return coef * g


def j_eps(fld: SpaceTimeField, p: float, eps: float, region: Region | None = None) -> float:
    """iint (|grad u|^2 + eps^2)^((p-2)/2) |grad u|^2 over the region (default: all)."""
    region = region or Region.whole(fld.grid)
    v = np.sum(gradient_field(fld) ** 2, axis=0)
    if eps > 0.0:
        integrand = (v + eps**2) ** ((p - 2.0) / 2.0) * v
    else:
        integrand = v ** (p / 2.0)
    return spacetime_integral(integrand, region)


def gradient_lp_mass(fld: SpaceTimeField, p: float, region: Region | None = None) -> float:
    """iint |grad u|^p over the region (default: all)."""
    region = region or Region.whole(fld.grid)
    v = np.sum(gradient_field(fld) ** 2, axis=0)
    return spacetime_integral(v ** (p / 2.0), region)


def _pair_fields(u_eps_fld: SpaceTimeField, u_fld: SpaceTimeField):
    if u_eps_fld.grid != u_fld.grid:
        raise InvalidParameterError("the two fields live on different grids")
    return gradient_field(u_eps_fld), gradient_field(u_fld)


def w_eps(u_eps_fld: SpaceTimeField, u_fld: SpaceTimeField, p: float, eps: float) -> float:
    """Pairing of the regularized/plain flux difference with the gradient difference.

    Nonpositive up to discretization error when both fields solve their flows
    with shared parabolic boundary values.
    """
    ge, gu = _pair_fields(u_eps_fld, u_fld)
    diff = ge - gu
    integrand = np.sum((_flux(ge, p, eps) - _flux(gu, p, 0.0)) * diff, axis=0)
    return spacetime_integral(integrand, Region.whole(u_eps_fld.grid))


def m_eps_and_o_eps(
    u_eps_fld: SpaceTimeField,
    u_fld: SpaceTimeField,
    p: float,
    eps: float,
    delta: float,
) -> tuple[float, float]:
    """Monotone pairing M and regularization defect O; M = W + O nodally.

    delta is the gradient-splitting threshold of the associated tail bound;
    it must be positive but does not enter the two integrals themselves.
    """
    if delta <= 0.0:
        raise InvalidParameterError(f"splitting threshold must be positive, got {delta}")
    ge, gu = _pair_fields(u_eps_fld, u_fld)
    diff = ge - gu
    plain_e = _flux(ge, p, 0.0)
    m_val = spacetime_integral(
        np.sum((plain_e - _flux(gu, p, 0.0)) * diff, axis=0), Region.whole(u_eps_fld.grid)
    )
    o_val = spacetime_integral(
        np.sum((plain_e - _flux(ge, p, eps)) * diff, axis=0), Region.whole(u_eps_fld.grid)
    )
    return m_val, o_val


def weighted_gradient_distance(
    u_eps_fld: SpaceTimeField, u_fld: SpaceTimeField, p: float
) -> float:
    """iint |grad u_eps - grad u|^2 (1 + |grad u|^2 + |grad u_eps|^2)^((p-2)/2)."""
    ge, gu = _pair_fields(u_eps_fld, u_fld)
    weight = (1.0 + np.sum(gu**2, axis=0) + np.sum(ge**2, axis=0)) ** ((p - 2.0) / 2.0)
    integrand = np.sum((ge - gu) ** 2, axis=0) * weight
    return spacetime_integral(integrand, Region.whole(u_eps_fld.grid))


# --- the seven-term identity -------------------------------------------------


@dataclass(frozen=True)
class FundamentalTerms:
    """The seven space-time integrals of the differentiated-equation identity.

    term_values carry the stated coefficients ((p-2+2a)/4 on II, a(p-2)/2 on
    III, 1/(2(a+1)) on IV, (2-p) on V, -1 on VI, 1/(a+1) on VII) with the
    selected candidate for VI; both VI candidates are kept for calibration.
    """

    term_values: dict
    coefficients: dict
    raw_integrals: dict
    vi_candidates: dict
    vi_form: str

    def lhs_total(self) -> float:
        t = self.term_values
        return t["I"] + t["II"] + t["III"] + t["IV"]

    def rhs_total(self, vi_form: str | None = None) -> float:
        t = self.term_values
        vi = -self.vi_candidates[vi_form or self.vi_form]
        return t["V"] + vi + t["VII"]

    def identity_residual(self, vi_form: str | None = None) -> float:
        return self.lhs_total() - self.rhs_total(vi_form)

    def relative_residual(self, vi_form: str | None = None) -> float:
        form = vi_form or self.vi_form
        t = dict(self.term_values)
        t["VI"] = -self.vi_candidates[form]
        scale = sum(abs(val) for val in t.values())
        if scale == 0.0:
            return 0.0
        return abs(self.identity_residual(form)) / scale


def _check_cutoff_margins(grid: Grid, cutoff: Cutoff):
    for axis in range(grid.n):
        lo, hi = cutoff.support_box[axis]
        dlo, dhi = grid.space_extent[axis]
        margin = 2.0 * grid.h[axis]
        if lo < dlo + margin or hi > dhi - margin:
            raise InvalidSupportError(
                "cutoff support is closer than two cells to the spatial boundary; "
                "second-order stencils need that margin"
            )
    if cutoff.has_time_ramp:
        lo, hi = cutoff.support_box[-1]
        dlo, dhi = grid.time_extent
        if lo < dlo + grid.tau or hi > dhi - grid.tau:
            raise InvalidSupportError(
                "cutoff time support is closer than one level to the time boundary"
            )


def fundamental_terms(
    fld: SpaceTimeField,
    cutoff: Cutoff,
    p: float,
    eps: float,
    alpha: float,
    vi_form: str = VI_FORM_GRAD_VSQ,
) -> FundamentalTerms:
    """Evaluate the seven identity terms on a discrete field.

    Requires eps > 0 and the exponent restriction p - 1 + 2 alpha > 0; the
    identity is worthless outside it.
    """
    if eps <= 0.0:
        raise InvalidParameterError("the identity terms are evaluated at eps > 0")
    if not (1.0 - p < 2.0 * alpha < 0.0):
        raise InvalidParameterError(f"alpha = {alpha} violates 1 - p < 2 alpha < 0")
    if p - 1.0 + 2.0 * alpha <= 0.0:
        raise InvalidParameterError(
            f"restriction p - 1 + 2 alpha > 0 violated (p = {p}, alpha = {alpha})"
        )
    if vi_form not in (VI_FORM_GRAD_VSQ, VI_FORM_GRAD_U):
        raise InvalidParameterError(f"unknown VI form {vi_form!r}")
    grid = fld.grid
    _check_cutoff_margins(grid, cutoff)

    st = field_stencils(fld)
    big_v = st.v + eps**2
    e0 = (p - 2.0 + 2.0 * alpha) / 2.0

    zeta = cutoff.zeta_nodal(grid)
    zeta_t = cutoff.zeta_t_nodal(grid)
    grad_zeta = cutoff.grad_nodal(grid)

    grad_u_dot_grad_v = np.sum(st.grad * st.grad_v, axis=0)
    grad_zeta_dot_grad_u = np.sum(grad_zeta * st.grad, axis=0)
    grad_zeta_dot_grad_v = np.sum(grad_zeta * st.grad_v, axis=0)
    grad_v_sq = np.sum(st.grad_v**2, axis=0)

    region = Region.whole(grid)
    raw = {
        "I": spacetime_integral(zeta**2 * big_v**e0 * st.hess_sq, region),
        "II": spacetime_integral(zeta**2 * big_v ** (e0 - 1.0) * grad_v_sq, region),
        "III": spacetime_integral(
            zeta**2 * big_v ** (e0 - 2.0) * grad_u_dot_grad_v**2, region
        ),
        "V": spacetime_integral(
            zeta * big_v ** (e0 - 1.0) * grad_u_dot_grad_v * grad_zeta_dot_grad_u, region
        ),
        "VI_grad_vsq": spacetime_integral(
            zeta * big_v**e0 * grad_zeta_dot_grad_v, region
        ),
        "VI_grad_u": spacetime_integral(zeta * big_v**e0 * grad_zeta_dot_grad_u, region),
        "VII": spacetime_integral(big_v ** (alpha + 1.0) * zeta * zeta_t, region),
    }
    bracket = zeta**2 * big_v ** (alpha + 1.0)
    raw["IV"] = space_integral(bracket[..., -1], region) - space_integral(
        bracket[..., 0], region
    )

    coefficients = {
        "I": 1.0,
        "II": (p - 2.0 + 2.0 * alpha) / 4.0,
        "III": alpha * (p - 2.0) / 2.0,
        "IV": 1.0 / (2.0 * (alpha + 1.0)),
        "V": 2.0 - p,
        "VI": -1.0,
        "VII": 1.0 / (alpha + 1.0),
    }
    vi_candidates = {
        VI_FORM_GRAD_VSQ: raw["VI_grad_vsq"],
        VI_FORM_GRAD_U: raw["VI_grad_u"],
    }
    term_values = {
        "I": coefficients["I"] * raw["I"],
        "II": coefficients["II"] * raw["II"],
        "III": coefficients["III"] * raw["III"],
        "IV": coefficients["IV"] * raw["IV"],
        "V": coefficients["V"] * raw["V"],
        "VI": coefficients["VI"] * vi_candidates[vi_form],
        "VII": coefficients["VII"] * raw["VII"],
    }
    return FundamentalTerms(
        term_values=term_values,
        coefficients=coefficients,
        raw_integrals=raw,
        vi_candidates=vi_candidates,
        vi_form=vi_form,
    )


def calibrate_vi_form(coarse: FundamentalTerms, fine: FundamentalTerms) -> str:
    """Select the VI candidate whose identity residual shrinks under refinement."""
    best = None
    best_key = (np.inf, np.inf)
    for form in (VI_FORM_GRAD_VSQ, VI_FORM_GRAD_U):
        key = (fine.relative_residual(form), coarse.relative_residual(form))
        if key < best_key:
            best_key = key
            best = form
    return best


# --- pointwise and per-node quantities ---------------------------------------


def braces_factor(uprime, eps: float, p: float):
    """((p-1) u'^2 + eps^2)^2 / (u'^2 + eps^2)^2; bounded below by (p-1)^2."""
    s = np.asarray(uprime, dtype=float) ** 2
    denom = s + eps**2
    if np.any(denom == 0.0):
        raise InvalidParameterError("braces factor undefined at u' = 0 with eps = 0")
    return (((p - 1.0) * s + eps**2) / denom) ** 2


def onedim_braces_factor(
    fld: SpaceTimeField, eps: float, p: float, node: int, level: int
) -> float:
    """The perfect-square factor at one node of a 1-D field."""
    if fld.grid.n != 1:
        raise InvalidParameterError("braces factor is a one-dimensional quantity")
    uprime = gradient(fld, node, level)[0]
    return float(braces_factor(uprime, eps, p))


def time_derivative_field(fld: SpaceTimeField) -> SpaceTimeField:
    """Difference quotient in time: centered inside, one-sided second order at the ends."""
    return SpaceTimeField(fld.grid, time_derivative_values(fld.values, fld.grid.tau))


def ut_theta_mass(fld: SpaceTimeField, theta: float, region: Region) -> float:
    """iint_region |u_t|^theta for theta > 1."""
    if theta <= 1.0:
        raise InvalidParameterError(f"summability exponent must exceed 1, got {theta}")
    ut = time_derivative_values(fld.values, fld.grid.tau)
    return spacetime_integral(np.abs(ut) ** theta, region)


def flux_derivative_bound_field(fld: SpaceTimeField, p: float, eps: float) -> SpaceTimeField:
    """Dominating envelope 2 (|grad u|^2 + eps^2)^((p-2)/2) |D^2 u| for the flux derivatives.

    Zero on the outermost spatial ring where the Hessian stencil does not fit.
    """
    if eps <= 0.0:
        raise InvalidParameterError("the envelope is defined for eps > 0")
    st = field_stencils(fld)
    big_v = st.v + eps**2
    values = 2.0 * big_v ** ((p - 2.0) / 2.0) * np.sqrt(st.hess_sq)
    return SpaceTimeField(fld.grid, values)


def cutoff_weighted_hessian_mass(
    fld: SpaceTimeField, cutoff: Cutoff, eps: float, exponent: float
) -> float:
    """iint zeta^2 (|grad u|^2 + eps^2)^exponent |D^2 u|^2 (the recurring left side)."""
    grid = fld.grid
    _check_cutoff_margins(grid, cutoff)
    st = field_stencils(fld)
    big_v = st.v + eps**2
    zeta = cutoff.zeta_nodal(grid)
    return spacetime_integral(zeta**2 * big_v**exponent * st.hess_sq, Region.whole(grid))


def v_weighted_integral(
    fld: SpaceTimeField, cutoff: Cutoff, eps: float, exponent: float, weight: str
) -> float:
    """iint (weight) * (|grad u|^2 + eps^2)^exponent for the named cutoff weight.

    weight is one of: zeta_sq, grad_zeta_sq, zeta_zeta_t, abs_zeta_zeta_t,
    zeta_t_sq, abs_grad_zzt.
    """
    grid = fld.grid
    st = field_stencils(fld)
    big_v = st.v + eps**2
    if weight == "zeta_sq":
        w = cutoff.zeta_nodal(grid) ** 2
    elif weight == "grad_zeta_sq":
        w = np.sum(cutoff.grad_nodal(grid) ** 2, axis=0)
    elif weight == "zeta_zeta_t":
        w = cutoff.zeta_nodal(grid) * cutoff.zeta_t_nodal(grid)
    elif weight == "abs_zeta_zeta_t":
        w = np.abs(cutoff.zeta_nodal(grid) * cutoff.zeta_t_nodal(grid))
    elif weight == "zeta_t_sq":
        w = cutoff.zeta_t_nodal(grid) ** 2
    elif weight == "abs_grad_zzt":
        w = np.sqrt(np.sum(cutoff.grad_zzt_nodal(grid) ** 2, axis=0))
    else:
        raise InvalidParameterError(f"unknown cutoff weight {weight!r}")
    return spacetime_integral(w * big_v**exponent, Region.whole(grid))
