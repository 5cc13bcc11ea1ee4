"""Finite-difference discretization and time integration of the u/h system.

Space: uniform cell-centered grid, centered differences for the myopic
diffusion (discretized on the product d*u, which preserves the divergence
structure and the discrete no-flux identity exactly), conservative upwind
for the repellent drift, and an interchangeable convolution engine for the
nonlocal competition term.  The total u-flux (diffusive + tactic) and the
h-gradient vanish at the walls, so with the reactions switched off both
discrete masses are conserved to rounding.

Time: explicit Euler, Heun's second-order rule (default), or an IMEX
variant that treats only the proton diffusion implicitly (tridiagonal
solve).  The step size follows a safety-scaled stability bound; negative
undershoots of u trigger step rejection with dt halving, and a collapsing
dt is reported as a blow-up event rather than an error.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .core import (
    ConfigurationError,
    Grid1D,
    InitialCondition,
    ModelParams,
    State,
    eval_g,
    eval_initial_h,
    eval_initial_u,
    eval_mu,
)
from .kernels import KernelStencil, SpectralConvolver, discretize

_SCHEMES = ("explicit-euler", "rk2-heun", "imex")

# Undershoot policy: entries of u in [-CLIP_TOL, 0) are rounding debris and
# are clipped; anything below forces rejection so scheme instability is not
# silently masked.
CLIP_TOL = 1e-12
MAX_REJECTIONS = 40
DEFAULT_BLOWUP_THRESHOLD = 1e3
DEFAULT_DT_FLOOR = 1e-9


class BlowUp(RuntimeError):
    """Finite-time loss of boundedness detected by the integrator."""

    def __init__(self, t: float, reason: str):
        super().__init__(f"blow-up at t={t:.6g}: {reason}")
        self.t = t
        self.reason = reason


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "rk2-heun"
    cfl_safety: float = 0.9
    dt_max: float = np.inf
    t_end: float = 50.0
    snapshot_every: float = 1.0

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ConfigurationError(
                f"unknown scheme {self.scheme!r}, expected one of {_SCHEMES}"
            )
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ConfigurationError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.t_end <= 0.0:
            raise ConfigurationError(f"t_end must be positive, got {self.t_end}")
        if self.snapshot_every <= 0.0:
            raise ConfigurationError(
                f"snapshot_every must be positive, got {self.snapshot_every}"
            )


@dataclass
class Event:
    kind: str  # "blow_up" | "dt_rejected" | "steady_state"
    t: float
    detail: str = ""


@dataclass
class Trajectory:
    snapshots: list[State] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    clip_count: int = 0
    reject_count: int = 0
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def final(self) -> State:
        return self.snapshots[-1]

    def blow_up_time(self) -> float | None:
        for ev in self.events:
            if ev.kind == "blow_up":
                return ev.t
        return None


# ---------------------------------------------------------------------------
# spatial operators


def _diffusive_flux(d: np.ndarray, u: np.ndarray, dx: float) -> np.ndarray:
    """Myopic flux (d u)_x on the n+1 interfaces; wall entries zero."""
    flux = np.zeros(len(u) + 1)
    np.subtract(d[1:] * u[1:], d[:-1] * u[:-1], out=flux[1:-1])
    flux[1:-1] /= dx
    return flux


def _tactic_flux(d: np.ndarray, u: np.ndarray, h: np.ndarray, dx: float) -> np.ndarray:
    """Upwind drift flux v * u_upw with v = -d h_x on interfaces; walls zero."""
    d_face = 0.5 * (d[:-1] + d[1:])
    v = -d_face * np.diff(h) / dx
    flux = np.zeros(len(u) + 1)
    flux[1:-1] = v * np.where(v >= 0.0, u[:-1], u[1:])
    return flux


def u_interface_fluxes(
    d: np.ndarray, u: np.ndarray, h: np.ndarray, grid: Grid1D
) -> tuple[np.ndarray, np.ndarray]:
    """Diffusive and tactic u-fluxes on the cell interfaces.

    Both arrays have length n_cells + 1 and zero wall entries, which is the
    discrete no-flux condition: summing either divergence over the grid
    telescopes to zero, so transport moves no mass in or out.
    """
    return _diffusive_flux(d, u, grid.dx), _tactic_flux(d, u, h, grid.dx)


def myopic_diffusion(d: np.ndarray, u: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Centered discretization of (d(x) u)_xx in conservative flux form."""
    return np.diff(_diffusive_flux(d, u, grid.dx)) / grid.dx


def taxis(d: np.ndarray, u: np.ndarray, h: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Conservative upwind discretization of the repellent drift (d u h_x)_x."""
    return -np.diff(_tactic_flux(d, u, h, grid.dx)) / grid.dx


def proton_diffusion(D_H: float, h: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Centered D_H h_xx with mirrored ghost values (zero wall gradient)."""
    flux = np.zeros(len(h) + 1)
    flux[1:-1] = np.diff(h) / grid.dx
    return D_H * np.diff(flux) / grid.dx


def reaction_u(params: ModelParams, u: np.ndarray, h: np.ndarray, conv: np.ndarray) -> np.ndarray:
    """Nonlocal competition term mu(h) u^alpha (1 - conv), conv = J conv u^beta."""
    # Fractional powers need u >= 0; stages may undershoot by rounding
    # before the rejection check runs.
    u_safe = np.maximum(u, 0.0)
    h_safe = np.maximum(h, 0.0)
    mu = eval_mu(params.growth, h_safe)
    return mu * u_safe**params.alpha * (1.0 - conv)


def reaction_h(params: ModelParams, u: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Acid source g(u, h) applied fieldwise."""
    return eval_g(params.source, np.maximum(u, 0.0), np.maximum(h, 0.0))


# ---------------------------------------------------------------------------
# time-step control


def stable_dt(
    params: ModelParams,
    grid: Grid1D,
    state: State,
    conv: np.ndarray | None = None,
    *,
    cfl_safety: float = 1.0,
    implicit_proton: bool = False,
    center_weight: float = 0.0,
) -> float:
    """Stability-bounded time step for the explicit part of the scheme.

    Takes the minimum of the diffusive, advective, and reaction-rate
    bounds.  The reaction rate is a pointwise bound on the reaction
    Jacobian diagonal, mu(h) u^(alpha-1) (alpha (1 + |conv|) + beta u^beta
    w0), where w0 = `center_weight` is the stencil's central weight times
    dx (1 for the local model).  The competition's own u-derivative term
    matters: at beta = 20, mu = 100 the local model's relaxation rate is
    beta mu(h*) = 1000-fold, and a bound built from the growth factor alone
    leaves the scheme outside its stability interval, which shows up as a
    persistent grid-scale oscillation instead of a rejection.  With
    `implicit_proton` the h-diffusion bound is dropped, which is the point
    of the IMEX scheme.
    """
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.h))):
        raise BlowUp(float(state.t), "state is no longer finite")
    dx = grid.dx
    d = params.d_field(grid)
    bounds = [dx * dx / (2.0 * float(d.max()))]
    if not implicit_proton:
        bounds.append(dx * dx / (2.0 * params.D_H))
    d_face = 0.5 * (d[:-1] + d[1:])
    drift = np.abs(d_face * np.diff(state.h)) / dx
    v_max = float(drift.max()) if len(drift) else 0.0
    bounds.append(dx / (v_max + 1e-300))
    u_safe = np.maximum(state.u, 0.0)
    if float(u_safe.max()) > 0.0:
        mu = np.asarray(eval_mu(params.growth, np.maximum(state.h, 0.0)))
        conv_amp = 1.0 + np.abs(conv) if conv is not None else 1.0
        rate_field = mu * u_safe ** (params.alpha - 1.0) * (
            params.alpha * conv_amp + params.beta * u_safe**params.beta * center_weight
        )
        rate = float(rate_field.max())
        if rate > 0.0:
            bounds.append(1.0 / rate)
    return float(cfl_safety * min(bounds))


# ---------------------------------------------------------------------------
# stepping


class _Engine:
    """Owns the buffers and precomputed pieces of one simulation loop."""

    def __init__(
        self,
        params: ModelParams,
        grid: Grid1D,
        integrator: IntegratorConfig,
        stencil: KernelStencil,
    ):
        self.params = params
        self.grid = grid
        self.integrator = integrator
        self.stencil = stencil
        self.convolve = SpectralConvolver(stencil, grid.n_cells)
        self.d = params.d_field(grid)
        self.center_weight = float(stencil.weights[stencil.half_width]) * grid.dx
        self.clip_h = validate_h_clipping(params)

    def conv_term(self, u: np.ndarray) -> np.ndarray:
        ub = np.maximum(u, 0.0) ** self.params.beta
        if self.stencil.half_width == 0:  # local model: convolution is the identity
            return self.center_weight * ub
        return self.convolve(ub)

    def rhs(self, u: np.ndarray, h: np.ndarray, conv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p, g = self.params, self.grid
        du = (
            myopic_diffusion(self.d, u, g)
            + taxis(self.d, u, h, g)
            + reaction_u(p, u, h, conv)
        )
        dh = proton_diffusion(p.D_H, h, g) + reaction_h(p, u, h)
        return du, dh

    def rhs_u_only(self, u: np.ndarray, h: np.ndarray, conv: np.ndarray) -> np.ndarray:
        p, g = self.params, self.grid
        return (
            myopic_diffusion(self.d, u, g)
            + taxis(self.d, u, h, g)
            + reaction_u(p, u, h, conv)
        )

    def _implicit_h(self, h: np.ndarray, dt: float, g_term: np.ndarray) -> np.ndarray:
        # (I - dt D_H A) h_new = h + dt g with A the Neumann Laplacian.
        n = len(h)
        r = dt * self.params.D_H / self.grid.dx**2
        ab = np.zeros((3, n))
        ab[0, 1:] = -r
        ab[2, :-1] = -r
        ab[1, :] = 1.0 + 2.0 * r
        ab[1, 0] = 1.0 + r
        ab[1, -1] = 1.0 + r
        return solve_banded((1, 1), ab, h + dt * g_term)

    def attempt(self, state: State, dt: float, k1=None):
        """One trial step of the configured scheme; returns (u_new, h_new, k1)."""
        u, h = state.u, state.h
        scheme = self.integrator.scheme
        if k1 is None:
            conv = self.conv_term(u)
            k1 = (conv, *self.rhs(u, h, conv))
        conv1, du1, dh1 = k1
        if scheme == "explicit-euler":
            return u + dt * du1, h + dt * dh1, k1
        if scheme == "rk2-heun":
            u_pred = u + dt * du1
            h_pred = h + dt * dh1
            conv2 = self.conv_term(u_pred)
            du2, dh2 = self.rhs(u_pred, h_pred, conv2)
            return u + 0.5 * dt * (du1 + du2), h + 0.5 * dt * (dh1 + dh2), k1
        # imex: u explicit Euler, proton diffusion implicit
        g_term = reaction_h(self.params, u, h)
        u_new = u + dt * du1
        h_new = self._implicit_h(h, dt, g_term)
        return u_new, h_new, k1


def validate_h_clipping(params: ModelParams) -> bool:
    """h is clipped to [0, H] only when the comparison principle applies."""
    return not params.source.instability_permitted


def step(
    state: State,
    params: ModelParams,
    grid: Grid1D,
    integrator: IntegratorConfig,
    stencil: KernelStencil,
    dt: float | None = None,
) -> State:
    """Advance one accepted step; standalone surface over the run-loop engine.

    dt defaults to the stability bound.  Undershoots below -1e-12 reject the
    step and halve dt; 40 consecutive rejections raise BlowUp.
    """
    engine = _Engine(params, grid, integrator, stencil)
    conv = engine.conv_term(state.u)
    if dt is None:
        dt = stable_dt(
            params,
            grid,
            state,
            conv,
            cfl_safety=integrator.cfl_safety,
            implicit_proton=integrator.scheme == "imex",
            center_weight=engine.center_weight,
        )
        dt = min(dt, integrator.dt_max)
    k1 = (conv, *engine.rhs(state.u, state.h, conv))
    for _ in range(MAX_REJECTIONS):
        u_new, h_new, k1 = engine.attempt(state, dt, k1)
        if float(u_new.min()) >= -CLIP_TOL:
            np.clip(u_new, 0.0, None, out=u_new)
            if engine.clip_h:
                np.clip(h_new, 0.0, params.source.H, out=h_new)
            return State(u=u_new, h=h_new, t=state.t + dt)
        dt *= 0.5
    raise BlowUp(state.t, f"dt underflow after {MAX_REJECTIONS} consecutive rejections")


def run(
    params: ModelParams,
    grid: Grid1D,
    ic: InitialCondition,
    integrator: IntegratorConfig,
    *,
    renormalize_kernel: bool = True,
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
    dt_floor: float = DEFAULT_DT_FLOOR,
    steady_tol: float = 1e-10,
) -> Trajectory:
    """Integrate the coupled system to t_end, blow-up, or steady state.

    Deterministic for a fixed configuration (the PDE path draws no random
    numbers).  A blow-up is a recorded result, not an exception: it fires
    when max(u) crosses `blowup_threshold`, when a step is rejected 40
    times in a row, or when the stability bound collapses below `dt_floor`
    (the practical signature of finite-time aggregation on a fixed grid,
    where pointwise values saturate near 2*rho/dx while the admissible step
    vanishes).
    """
    stencil = discretize(params.kernel, grid, renormalize=renormalize_kernel)
    engine = _Engine(params, grid, integrator, stencil)
    u0 = eval_initial_u(ic, grid)
    h0 = eval_initial_h(ic, grid, params.source.H)
    state = State(u=u0, h=h0, t=0.0)

    traj = Trajectory()
    traj.snapshots.append(state.copy())
    snap_every = integrator.snapshot_every
    next_snap = snap_every
    t_end = integrator.t_end
    umax_history: deque[tuple[float, float]] = deque(maxlen=50)
    tiny = 1e-12 * max(t_end, 1.0)

    def record_blow_up(t: float, reason: str):
        hist = ", ".join(f"({tt:.5g}, {mm:.5g})" for tt, mm in umax_history)
        traj.events.append(Event("blow_up", t, f"{reason}; recent (t, max u): [{hist}]"))

    while state.t < t_end - tiny:
        try:
            conv = engine.conv_term(state.u)
            dt = stable_dt(
                params,
                grid,
                state,
                conv,
                cfl_safety=integrator.cfl_safety,
                implicit_proton=integrator.scheme == "imex",
                center_weight=engine.center_weight,
            )
        except BlowUp as bu:
            record_blow_up(bu.t, bu.reason)
            break
        if dt < dt_floor:
            record_blow_up(state.t, f"stability-bounded dt {dt:.3g} fell below floor {dt_floor:.3g}")
            break
        dt = min(dt, integrator.dt_max, t_end - state.t, next_snap - state.t)
        k1 = (conv, *engine.rhs(state.u, state.h, conv))

        rejections = 0
        while True:
            u_new, h_new, k1 = engine.attempt(state, dt, k1)
            if float(u_new.min()) >= -CLIP_TOL:
                break
            rejections += 1
            traj.reject_count += 1
            traj.events.append(
                Event("dt_rejected", state.t, f"undershoot {float(u_new.min()):.3g}, dt -> {dt / 2:.3g}")
            )
            if rejections >= MAX_REJECTIONS:
                break
            dt *= 0.5
        if rejections >= MAX_REJECTIONS:
            record_blow_up(state.t, f"dt underflow after {MAX_REJECTIONS} consecutive rejections")
            break

        traj.clip_count += int(np.count_nonzero(u_new < 0.0))
        np.clip(u_new, 0.0, None, out=u_new)
        if engine.clip_h:
            np.clip(h_new, 0.0, params.source.H, out=h_new)

        drift_u = float(np.max(np.abs(u_new - state.u))) / dt
        drift_h = float(np.max(np.abs(h_new - state.h))) / dt
        state = State(u=u_new, h=h_new, t=state.t + dt)
        traj.steps += 1
        umax = float(u_new.max())
        umax_history.append((state.t, umax))

        if not np.isfinite(umax):
            record_blow_up(state.t, "state is no longer finite")
            traj.snapshots.append(state.copy())
            break
        if umax > blowup_threshold:
            record_blow_up(state.t, f"max(u) = {umax:.6g} exceeded threshold {blowup_threshold:.6g}")
            traj.snapshots.append(state.copy())
            break

        if state.t >= next_snap - tiny:
            traj.snapshots.append(state.copy())
            next_snap += snap_every

        scale = steady_tol * (1.0 + umax)
        if drift_u <= scale and drift_h <= scale:
            traj.events.append(
                Event("steady_state", state.t, f"field drift below {steady_tol:g} per unit time")
            )
            break

    if traj.snapshots[-1].t < state.t:
        traj.snapshots.append(state.copy())
    return traj
