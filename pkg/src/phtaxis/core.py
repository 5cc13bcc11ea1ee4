"""Domain geometry, fields, and the model's coefficient functions.

The model couples a cell density u and a proton concentration h on an
interval [-a, a] with no-flux walls:

    u_t = (d(x) u)_xx + (d(x) u h_x)_x + mu(h) u^alpha (1 - J conv u^beta)
    h_t = D_H h_xx + g(u, h)

This module holds the configuration types (grid, growth law mu, acid
source g, initial data) and their pointwise evaluation.  All types are
immutable after construction and safe to share between concurrent runs.
Discrete operators live in `solver`, interaction kernels J in `kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np

if TYPE_CHECKING:
    from .kernels import KernelSpec


class ConfigurationError(ValueError):
    """Invalid run configuration (bad geometry, parameters, or schema)."""


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class Domain1D:
    """Symmetric interval [-a, a] with no-flux walls (the only boundary type)."""

    half_length: float

    def __post_init__(self):
        if not np.isfinite(self.half_length) or self.half_length <= 0.0:
            raise ConfigurationError(
                f"domain half-length must be positive, got {self.half_length}"
            )

    @property
    def diameter(self) -> float:
        return 2.0 * self.half_length


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on [-a, a].

    Cell centers sit at -a + (i + 1/2) dx; cell-centered placement keeps the
    no-flux ghost reflection symmetric about the walls.
    """

    domain: Domain1D
    n_cells: int
    dx: float
    x: np.ndarray

    @property
    def half_length(self) -> float:
        return self.domain.half_length


def build_grid(domain: Domain1D, n_cells: int) -> Grid1D:
    """Build the uniform cell-centered grid with n_cells >= 8 cells."""
    n_cells = int(n_cells)
    if n_cells < 8:
        raise ConfigurationError(f"n_cells must be >= 8, got {n_cells}")
    a = domain.half_length
    dx = 2.0 * a / n_cells
    x = -a + (np.arange(n_cells, dtype=np.float64) + 0.5) * dx
    return Grid1D(domain=domain, n_cells=n_cells, dx=dx, x=x)


@dataclass
class State:
    """Cell density u and proton concentration h on a grid at time t."""

    u: np.ndarray
    h: np.ndarray
    t: float

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.h = np.asarray(self.h, dtype=np.float64)
        if self.u.shape != self.h.shape:
            raise ValueError(
                f"u and h must have equal length, got {self.u.shape} and {self.h.shape}"
            )

    def copy(self) -> "State":
        return State(u=self.u.copy(), h=self.h.copy(), t=self.t)


# ---------------------------------------------------------------------------
# growth law mu(h)

_GROWTH_FORMS = ("constant", "rational", "tabulated")


@dataclass(frozen=True)
class GrowthSpec:
    """Proliferation rate mu(h), positive and Lipschitz on [0, H].

    Forms: "constant" mu(h) = mu0; "rational" mu(h) = mu0 / (1 + h);
    "tabulated" an arbitrary user callable.  `delta` declares a positive
    lower bound of mu over [0, H]; it is checked by dense sampling at
    validation time rather than symbolically, because tabulated functions
    admit no symbolic analysis.  mu0 = 0 is accepted for pure-transport
    studies but marks the spec as outside the boundedness theory.
    """

    form: str = "rational"
    mu0: float = 1.0
    delta: float | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.form not in _GROWTH_FORMS:
            raise ConfigurationError(
                f"unknown growth form {self.form!r}, expected one of {_GROWTH_FORMS}"
            )
        if self.form == "tabulated" and self.func is None:
            raise ConfigurationError("tabulated growth form requires func")
        if self.form != "tabulated" and self.mu0 < 0.0:
            raise ConfigurationError(f"mu0 must be >= 0, got {self.mu0}")


def eval_mu(spec: GrowthSpec, h) -> np.ndarray | float:
    """Evaluate mu(h) pointwise; h must be nonnegative."""
    h_arr = np.asarray(h, dtype=np.float64)
    if np.any(h_arr < 0.0):
        raise ValueError("mu(h) is only defined for h >= 0")
    if spec.form == "constant":
        out = np.full_like(h_arr, spec.mu0)
    elif spec.form == "rational":
        out = spec.mu0 / (1.0 + h_arr)
    else:
        out = np.asarray(spec.func(h_arr), dtype=np.float64)
    return out if np.ndim(h) else float(out)


def eval_dmu(spec: GrowthSpec, h: float, eps: float = 1e-6) -> float:
    """mu'(h); analytic for the closed forms, central difference otherwise."""
    if spec.form == "constant":
        return 0.0
    if spec.form == "rational":
        return -spec.mu0 / (1.0 + h) ** 2
    lo = max(h - eps, 0.0)
    return (eval_mu(spec, h + eps) - eval_mu(spec, lo)) / (h + eps - lo)


@dataclass(frozen=True)
class GrowthBounds:
    """Sampled bounds of mu over [0, H]: used by dt control and diagnostics."""

    mu_min: float
    mu_max: float
    mu_at_zero: float
    lipschitz: float
    positive: bool


def sample_growth_bounds(spec: GrowthSpec, H: float, n_samples: int = 1000) -> GrowthBounds:
    """Estimate min/max/Lipschitz constant of mu on [0, H] by dense sampling."""
    hs = np.linspace(0.0, H, n_samples)
    vals = np.asarray(eval_mu(spec, hs), dtype=np.float64)
    if not np.all(np.isfinite(vals)):
        raise ConfigurationError("mu(h) is not finite on [0, H]")
    slopes = np.abs(np.diff(vals) / np.diff(hs)) if n_samples > 1 else np.zeros(1)
    return GrowthBounds(
        mu_min=float(vals.min()),
        mu_max=float(vals.max()),
        mu_at_zero=float(vals[0]),
        lipschitz=float(slopes.max()),
        positive=bool(vals.min() > 0.0),
    )


def validate_growth(spec: GrowthSpec, H: float, n_samples: int = 1000) -> GrowthBounds:
    """Check the declared lower bound mu >= delta > 0 by sampling.

    A spec with min mu = 0 (e.g. constant 0 for transport tests) is allowed
    through but reported as non-positive via the returned bounds.
    """
    bounds = sample_growth_bounds(spec, H, n_samples)
    if np.any(np.asarray(eval_mu(spec, np.linspace(0.0, H, n_samples))) < 0.0):
        raise ConfigurationError("mu(h) must be nonnegative on [0, H]")
    if spec.delta is not None:
        if spec.delta <= 0.0:
            raise ConfigurationError(f"declared delta must be positive, got {spec.delta}")
        if bounds.mu_min < spec.delta * (1.0 - 1e-12):
            raise ConfigurationError(
                f"sampled min of mu on [0,{H}] is {bounds.mu_min:.6g}, below the "
                f"declared lower bound delta={spec.delta:.6g}"
            )
    return bounds


# ---------------------------------------------------------------------------
# acid source g(u, h)

_SOURCE_FORMS = ("logistic_acid", "destabilizing", "tabulated")


@dataclass(frozen=True)
class SourceSpec:
    """Proton production/decay g(u, h).

    Forms: "logistic_acid" g = u (1 - h); "destabilizing" g = u + u h -
    gamma h^2; "tabulated" a user callable.  H is the ceiling concentration
    used for validation and for clipping when the comparison principle
    applies.  The destabilizing form deliberately violates g(u, H) <= 0 and
    is exempt from that check (flag `instability_permitted`); solutions
    with it are not clipped and may leave [0, H].
    """

    form: str = "logistic_acid"
    gamma: float = 0.8
    H: float = 1.0
    G: float | None = None
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    instability_permitted: bool = field(default=False)

    def __post_init__(self):
        if self.form not in _SOURCE_FORMS:
            raise ConfigurationError(
                f"unknown source form {self.form!r}, expected one of {_SOURCE_FORMS}"
            )
        if self.form == "tabulated" and self.func is None:
            raise ConfigurationError("tabulated source form requires func")
        if self.H <= 0.0:
            raise ConfigurationError(f"ceiling H must be positive, got {self.H}")
        if self.form == "destabilizing":
            if self.gamma <= 0.0:
                raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
            object.__setattr__(self, "instability_permitted", True)


def eval_g(spec: SourceSpec, u, h) -> np.ndarray | float:
    """Evaluate g(u, h) pointwise; u and h must be nonnegative."""
    u_arr = np.asarray(u, dtype=np.float64)
    h_arr = np.asarray(h, dtype=np.float64)
    if np.any(u_arr < 0.0) or np.any(h_arr < 0.0):
        raise ValueError("g(u, h) is only defined for u >= 0 and h >= 0")
    if spec.form == "logistic_acid":
        out = u_arr * (1.0 - h_arr)
    elif spec.form == "destabilizing":
        out = u_arr + u_arr * h_arr - spec.gamma * h_arr**2
    else:
        out = np.asarray(spec.func(u_arr, h_arr), dtype=np.float64)
    scalar = np.ndim(u) == 0 and np.ndim(h) == 0
    return float(out) if scalar else out


def eval_du_g(spec: SourceSpec, u: float, h: float, eps: float = 1e-6) -> float:
    """Partial derivative of g with respect to u at (u, h)."""
    if spec.form == "logistic_acid":
        return 1.0 - h
    if spec.form == "destabilizing":
        return 1.0 + h
    lo = max(u - eps, 0.0)
    return (eval_g(spec, u + eps, h) - eval_g(spec, lo, h)) / (u + eps - lo)


def eval_dh_g(spec: SourceSpec, u: float, h: float, eps: float = 1e-6) -> float:
    """Partial derivative of g with respect to h at (u, h)."""
    if spec.form == "logistic_acid":
        return -u
    if spec.form == "destabilizing":
        return u - 2.0 * spec.gamma * h
    lo = max(h - eps, 0.0)
    return (eval_g(spec, u, h + eps) - eval_g(spec, u, lo)) / (h + eps - lo)


def validate_source(spec: SourceSpec, u_max: float = 10.0, n_samples: int = 1000) -> bool:
    """Check the sign structure g(u,0) in [0,G] and g(u,H) <= 0 by sampling.

    Returns True when the sampled structure holds.  A violation raises for
    forms claiming it; the destabilizing form is exempt and only reports
    False (its instability is the point).
    """
    us = np.linspace(0.0, u_max, n_samples)
    g0 = np.asarray(eval_g(spec, us, np.zeros_like(us)))
    gH = np.asarray(eval_g(spec, us, np.full_like(us, spec.H)))
    bound = spec.G if spec.G is not None else float(g0.max())
    ok = bool(g0.min() >= -1e-12 and g0.max() <= bound * (1.0 + 1e-12) + 1e-12 and gH.max() <= 1e-12)
    if not ok and not spec.instability_permitted:
        raise ConfigurationError(
            f"source {spec.form!r} violates the sign structure 0 <= g(u,0) <= G, "
            f"g(u,H) <= 0 on u in [0,{u_max}] with H={spec.H}"
        )
    return ok


# ---------------------------------------------------------------------------
# model parameters

@dataclass(frozen=True)
class ModelParams:
    """Complete coefficient set of the coupled u/h system.

    `d` is the cell motility: a constant or a per-node positive field (the
    1D reduction of the kinetic diffusion tensor).  alpha and beta are the
    competition exponents; alpha <= 1 + beta is the 1D well-posedness
    condition, enforced unless the run is explicitly a blow-up study.
    """

    alpha: float
    beta: float
    d: float | np.ndarray
    D_H: float
    growth: GrowthSpec
    source: SourceSpec
    kernel: "KernelSpec"
    blow_up_study: bool = False

    def __post_init__(self):
        if self.alpha < 1.0 or self.beta < 1.0:
            raise ConfigurationError(
                f"exponents must satisfy alpha >= 1 and beta >= 1, "
                f"got alpha={self.alpha}, beta={self.beta}"
            )
        if self.alpha > 1.0 + self.beta and not self.blow_up_study:
            raise ConfigurationError(
                f"well-posedness exponent condition alpha <= 1 + beta violated "
                f"(alpha={self.alpha}, beta={self.beta}); set blow_up_study=true "
                f"to run anyway"
            )
        d_arr = np.atleast_1d(np.asarray(self.d, dtype=np.float64))
        if not np.all(np.isfinite(d_arr)) or d_arr.min() <= 0.0:
            raise ConfigurationError("motility d must be positive and finite everywhere")
        if self.D_H <= 0.0:
            raise ConfigurationError(f"proton diffusion D_H must be positive, got {self.D_H}")

    def d_field(self, grid: Grid1D) -> np.ndarray:
        """Motility as a per-node array on the given grid."""
        d_arr = np.asarray(self.d, dtype=np.float64)
        if d_arr.ndim == 0:
            return np.full(grid.n_cells, float(d_arr))
        if d_arr.shape != (grid.n_cells,):
            raise ConfigurationError(
                f"d field has length {d_arr.shape[0]}, grid has {grid.n_cells} cells"
            )
        return d_arr

    def d_bounds(self) -> tuple[float, float]:
        """(min, max) of the motility; min > 0 is the parabolicity constant."""
        d_arr = np.atleast_1d(np.asarray(self.d, dtype=np.float64))
        return float(d_arr.min()), float(d_arr.max())


# ---------------------------------------------------------------------------
# initial conditions

_IC_FORMS = ("bump_ramp", "constant", "tabulated")
_H0_FORMS = ("constant", "tabulated")


@dataclass(frozen=True)
class InitialCondition:
    """Initial cell density u0 and proton concentration h0.

    The default "bump_ramp" u0 is a Gaussian bump glued at x = 0 to a
    linear ramp that hits zero at x_r:

        u0(x) = exp(-(x - x_l)^2)          for x_l < x <= 0,
        u0(x) = exp(-x_l^2) (1 - x / x_r)  for 0 < x <= x_r,
        u0(x) = 0                          elsewhere.

    h0 defaults to the constant 0 (no initial acidity).
    """

    form: str = "bump_ramp"
    x_l: float = -5.0
    x_r: float = 5.0
    u0_value: float = 1.0
    u0_func: Callable[[np.ndarray], np.ndarray] | None = None
    h0_form: str = "constant"
    h0_value: float = 0.0
    h0_func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.form not in _IC_FORMS:
            raise ConfigurationError(
                f"unknown initial-condition form {self.form!r}, expected one of {_IC_FORMS}"
            )
        if self.h0_form not in _H0_FORMS:
            raise ConfigurationError(
                f"unknown h0 form {self.h0_form!r}, expected one of {_H0_FORMS}"
            )
        if self.form == "tabulated" and self.u0_func is None:
            raise ConfigurationError("tabulated u0 requires u0_func")
        if self.h0_form == "tabulated" and self.h0_func is None:
            raise ConfigurationError("tabulated h0 requires h0_func")


def eval_initial_u(ic: InitialCondition, grid: Grid1D) -> np.ndarray:
    """Sample u0 on the grid and check u0 >= 0, u0 not identically zero."""
    x = grid.x
    if ic.form == "bump_ramp":
        a = grid.half_length
        if not (-a <= ic.x_l < 0.0 < ic.x_r <= a):
            raise ConfigurationError(
                f"bump_ramp requires -a <= x_l < 0 < x_r <= a, "
                f"got x_l={ic.x_l}, x_r={ic.x_r}, a={a}"
            )
        u0 = np.zeros_like(x)
        left = (x > ic.x_l) & (x <= 0.0)
        right = (x > 0.0) & (x <= ic.x_r)
        u0[left] = np.exp(-((x[left] - ic.x_l) ** 2))
        u0[right] = np.exp(-ic.x_l**2) * (1.0 - x[right] / ic.x_r)
    elif ic.form == "constant":
        u0 = np.full_like(x, ic.u0_value)
    else:
        u0 = np.asarray(ic.u0_func(x), dtype=np.float64)
    if u0.min() < 0.0:
        raise ConfigurationError("initial u0 must be nonnegative")
    if u0.max() == 0.0:
        raise ConfigurationError("initial u0 must not be identically zero")
    return u0


def eval_initial_h(ic: InitialCondition, grid: Grid1D, H: float) -> np.ndarray:
    """Sample h0 on the grid and check 0 <= h0 <= H with h0 not identically H."""
    if ic.h0_form == "constant":
        h0 = np.full(grid.n_cells, float(ic.h0_value))
    else:
        h0 = np.asarray(ic.h0_func(grid.x), dtype=np.float64)
    if h0.min() < 0.0 or h0.max() > H:
        raise ConfigurationError(f"initial h0 must lie in [0, {H}]")
    if h0.min() >= H:
        raise ConfigurationError("initial h0 must not be identically the ceiling H")
    return h0
