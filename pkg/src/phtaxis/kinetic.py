"""Velocity-jump Monte Carlo and recovery of the macroscopic coefficients.

Particles carry a position in [-a, a] and a velocity in V = [-s2, -s1] u
[s1, s2].  Under parabolic scaling (macro time = eps^2 micro time, macro
space = eps micro space) a particle flies at speed v/eps and reorients at
Poisson rate lambda/eps^2, drawing the new velocity from the turning
kernel.  The acid bias splits per the kernel's structure: the part
proportional to the outgoing velocity modifies the turning *rate*
(implemented by thinning), the part proportional to the incoming velocity
tilts the post-turn density (implemented by inverse transform on the
two-branch piecewise-linear density).  As eps -> 0 the empirical density
approaches the solution of the macroscopic diffusion(-taxis) equation,
which is checked against the PDE solver of this package.

Validation runs freeze the acid profile h and switch the growth off, so
transport is isolated from reaction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .core import ConfigurationError, Grid1D


@dataclass(frozen=True)
class VelocitySpace1D:
    """Speeds in [s1, s2] with directions {-1, +1}; measure |V| = 2 (s2 - s1)."""

    s1: float = 0.0
    s2: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.s1 < self.s2):
            raise ConfigurationError(
                f"velocity space requires 0 <= s1 < s2, got s1={self.s1}, s2={self.s2}"
            )

    @property
    def measure(self) -> float:
        return 2.0 * (self.s2 - self.s1)


@dataclass(frozen=True)
class EquilibriumDist:
    """Post-turn equilibrium velocity distribution M(v).

    Must be a probability density on V with zero mean flow; both integral
    conditions are checked by quadrature in `validate`.
    """

    form: str = "uniform"
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.form not in ("uniform", "tabulated"):
            raise ConfigurationError(f"unknown distribution form {self.form!r}")
        if self.form == "tabulated" and self.func is None:
            raise ConfigurationError("tabulated distribution requires func")

    def density(self, v: np.ndarray, vspace: VelocitySpace1D) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        inside = (np.abs(v) >= vspace.s1) & (np.abs(v) <= vspace.s2)
        if self.form == "uniform":
            return np.where(inside, 1.0 / vspace.measure, 0.0)
        return np.where(inside, np.asarray(self.func(v), dtype=np.float64), 0.0)

    def validate(self, vspace: VelocitySpace1D, tol: float = 1e-10) -> None:
        mass = 0.0
        flow = 0.0
        for lo, hi in ((-vspace.s2, -vspace.s1), (vspace.s1, vspace.s2)):
            mass += quad(lambda v: float(self.density(v, vspace)), lo, hi, limit=200)[0]
            flow += quad(lambda v: v * float(self.density(v, vspace)), lo, hi, limit=200)[0]
        if abs(mass - 1.0) > tol:
            raise ConfigurationError(f"M(v) mass is {mass:.12g}, expected 1 within {tol:g}")
        if abs(flow) > tol:
            raise ConfigurationError(f"M(v) mean flow is {flow:.3g}, expected 0 within {tol:g}")

    def second_moment(self, vspace: VelocitySpace1D) -> float:
        """Integral of v^2 M(v) over V (the unscaled diffusion coefficient)."""
        if self.form == "uniform":
            return (vspace.s2**3 - vspace.s1**3) / (3.0 * (vspace.s2 - vspace.s1))
        total = 0.0
        for lo, hi in ((-vspace.s2, -vspace.s1), (vspace.s1, vspace.s2)):
            total += quad(lambda v: v * v * float(self.density(v, vspace)), lo, hi, limit=200)[0]
        return float(total)


@dataclass(frozen=True)
class TurningParams:
    """Base turning rate and the linear acid-bias coefficients.

    The turning kernel is lambda0 M(v) + eps (b v'/|V|^2 - a v) grad_h: the
    a-channel tilts the post-turn density, the b-channel modulates the
    outgoing rate.  The 1/|V|^2 normalization of the b-channel is what
    makes its macroscopic taxis contribution (b/|V|) integral(v^2 M), so
    that b = |V| pairs the taxis coefficient with the diffusion
    coefficient.  The bias must be weak enough that the kernel stays
    nonnegative at the largest simulated |grad h| (checked in
    `check_bias`).
    """

    lambda0: float = 1.0
    a_coef: float = 0.0
    b_coef: float = 0.0
    eps: float = 0.1

    def __post_init__(self):
        if self.lambda0 <= 0.0:
            raise ConfigurationError(f"lambda0 must be positive, got {self.lambda0}")
        if not (0.0 < self.eps < 1.0):
            raise ConfigurationError(f"eps must lie in (0, 1), got {self.eps}")
        if self.a_coef < 0.0 or self.b_coef < 0.0:
            raise ConfigurationError("bias coefficients must be nonnegative")

    @property
    def biased(self) -> bool:
        return self.a_coef != 0.0 or self.b_coef != 0.0

    def check_bias(self, grad_max: float, M: EquilibriumDist, vspace: VelocitySpace1D) -> None:
        """Kernel nonnegativity at the worst case of |grad h| and velocities."""
        if not self.biased:
            return
        m_min = float(np.min(M.density(np.array([vspace.s1, vspace.s2]), vspace)))
        worst = (
            self.eps
            * grad_max
            * (self.a_coef + self.b_coef / vspace.measure**2)
            * vspace.s2
        )
        if self.lambda0 * m_min - worst < 0.0:
            raise ConfigurationError(
                f"acid bias makes the turning kernel negative: "
                f"lambda0 * min M = {self.lambda0 * m_min:.3g} < bias amplitude {worst:.3g}"
            )


def macroscopic_coefficients(
    M: EquilibriumDist, tp: TurningParams, vspace: VelocitySpace1D
) -> tuple[float, float]:
    """Diffusion and taxis coefficients of the parabolic limit.

    D = (1/lambda0) integral v^2 M dv; the taxis coefficient combines the
    post-turn tilt (a) and rate-modulation (b) channels:
    chi = (1/lambda0) (a (s2^3 - s1^3) 2/3 + (b/|V|) integral v^2 M dv).
    The choice a = 0, b = |V|, lambda0 = 1 makes chi = D, which is the
    coefficient pairing the PDE solver integrates.
    """
    d_bar = M.second_moment(vspace)
    D = d_bar / tp.lambda0
    chi = (
        tp.a_coef * (vspace.s2**3 - vspace.s1**3) * (2.0 / 3.0)
        + tp.b_coef / vspace.measure * d_bar
    ) / tp.lambda0
    return D, chi


@dataclass
class ParticleEnsemble:
    """Particle positions/velocities plus the scaling parameter's bookkeeping."""

    x: np.ndarray
    v: np.ndarray
    t: float
    rng_seed: int

    @property
    def size(self) -> int:
        return len(self.x)


def point_cloud(
    n: int, x0: float, M: EquilibriumDist, vspace: VelocitySpace1D, seed: int
) -> ParticleEnsemble:
    """All particles at x0 with velocities drawn from M."""
    rng = np.random.default_rng(seed)
    v = sample_velocity(M, vspace, n, rng)
    return ParticleEnsemble(x=np.full(n, float(x0)), v=v, t=0.0, rng_seed=seed)


def from_profile(
    u: np.ndarray, grid: Grid1D, n: int, M: EquilibriumDist, vspace: VelocitySpace1D, seed: int
) -> ParticleEnsemble:
    """Sample positions from a nonnegative density profile on the grid."""
    rng = np.random.default_rng(seed)
    w = np.maximum(np.asarray(u, dtype=np.float64), 0.0)
    if w.sum() <= 0.0:
        raise ConfigurationError("profile has no mass to sample from")
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    cells = np.searchsorted(cdf, rng.random(n), side="right")
    x = grid.x[cells] + (rng.random(n) - 0.5) * grid.dx
    v = sample_velocity(M, vspace, n, rng)
    return ParticleEnsemble(x=x, v=v, t=0.0, rng_seed=seed)


def sample_velocity(
    M: EquilibriumDist,
    vspace: VelocitySpace1D,
    n: int,
    rng: np.random.Generator,
    tilt: np.ndarray | None = None,
    shift: np.ndarray | None = None,
) -> np.ndarray:
    """Draw n velocities from the (possibly biased) post-turn density.

    The density is lambda0 M(v) + shift + tilt * v per particle, i.e.
    piecewise linear on the two branches of V for uniform M; sampling is by
    exact inverse transform (branch choice, then a quadratic CDF solve).
    `tilt`/`shift` default to the unbiased draw from M itself.
    """
    s1, s2 = vspace.s1, vspace.s2
    if tilt is None and shift is None:
        if M.form == "uniform":
            speed = s1 + (s2 - s1) * rng.random(n)
            sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            return sign * speed
        # numerical inverse CDF on a fine speed grid, mirrored to both branches
        vg = np.linspace(s1, s2, 2049)
        dens = M.density(vg, vspace)
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(vg))))
        cdf /= cdf[-1]
        speed = np.interp(rng.random(n), cdf, vg)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return sign * speed
    if M.form != "uniform":
        raise ConfigurationError("biased sampling is implemented for uniform M only")
    c0 = np.broadcast_to(
        1.0 / vspace.measure if shift is None else 1.0 / vspace.measure + shift, (n,)
    ).astype(np.float64)
    c1 = np.zeros(n) if tilt is None else np.broadcast_to(tilt, (n,)).astype(np.float64)
    # branch masses of the linear density c0 + c1 v on [-s2,-s1] and [s1,s2]
    half_span = s2 - s1
    moment = 0.5 * (s2 * s2 - s1 * s1)
    m_minus = c0 * half_span - c1 * moment
    m_plus = c0 * half_span + c1 * moment
    if np.any(m_minus < 0.0) or np.any(m_plus < 0.0):
        raise ConfigurationError("biased turning density is negative on a branch")
    pick_minus = rng.random(n) * (m_minus + m_plus) < m_minus
    lo = np.where(pick_minus, -s2, s1)
    target = rng.random(n) * np.where(pick_minus, m_minus, m_plus)
    B = c0 + c1 * lo  # density at the branch start
    disc = np.maximum(B * B + 2.0 * c1 * target, 0.0)
    denom = B + np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(np.abs(c1) > 1e-14 * c0, 2.0 * target / denom, target / B)
    return np.clip(lo + y, lo, lo + half_span)


def simulate(
    ensemble: ParticleEnsemble,
    tp: TurningParams,
    M: EquilibriumDist,
    vspace: VelocitySpace1D,
    grid: Grid1D,
    t_macro: float,
    h_profile: np.ndarray | None = None,
) -> ParticleEnsemble:
    """Advance the ensemble by t_macro with reflective walls.

    h_profile, when given, is a frozen acid field on the grid; its nodal
    gradient drives the bias.  The event loop is vectorized across
    particles: each round advances every live particle to its next
    proposed turning (rate lambda_max/eps^2, thinned to the true
    velocity-dependent rate), which keeps the per-round work a handful of
    array operations.
    """
    rng = np.random.default_rng(ensemble.rng_seed)
    x = ensemble.x.copy()
    v = ensemble.v.copy()
    n = len(x)
    a = grid.half_length
    eps = tp.eps

    grad_h = None
    if h_profile is not None and tp.biased:
        grad_h = np.gradient(np.asarray(h_profile, dtype=np.float64), grid.dx)
        tp.check_bias(float(np.max(np.abs(grad_h))), M, vspace)
    lam_max = tp.lambda0
    if grad_h is not None:
        lam_max += eps * tp.b_coef * float(np.max(np.abs(grad_h))) * vspace.s2 / vspace.measure
    rate = lam_max / (eps * eps)

    t = np.zeros(n)
    while True:
        live = t < t_macro
        if not np.any(live):
            break
        dt = rng.exponential(1.0 / rate, size=n)
        remaining = np.maximum(t_macro - t, 0.0)
        turned = live & (dt <= remaining)
        dt_eff = np.where(live, np.minimum(dt, remaining), 0.0)
        x = x + (v / eps) * dt_eff
        # reflective walls; flights are short so one fold is the common case
        while True:
            over = x > a
            under = x < -a
            if not (np.any(over) or np.any(under)):
                break
            x[over] = 2.0 * a - x[over]
            v[over] = -v[over]
            x[under] = -2.0 * a - x[under]
            v[under] = -v[under]
        t = t + dt_eff

        if grad_h is None:
            idx = np.nonzero(turned)[0]
            if len(idx):
                v[idx] = sample_velocity(M, vspace, len(idx), rng)
        else:
            g = np.interp(x, grid.x, grad_h)
            # outgoing rate lambda(v') = lambda0 + eps b g v' / |V| (the
            # kernel's constant-in-v part integrated over V), via thinning
            lam = tp.lambda0 + eps * tp.b_coef * g * v / vspace.measure
            accept = turned & (rng.random(n) * lam_max <= lam)
            idx = np.nonzero(accept)[0]
            if len(idx):
                shift = eps * tp.b_coef * g[idx] * v[idx] / vspace.measure**2
                tilt = -eps * tp.a_coef * g[idx]
                v[idx] = sample_velocity(M, vspace, len(idx), rng, tilt=tilt, shift=shift)

    return replace(ensemble, x=x, v=v, t=ensemble.t + t_macro)


def histogram_density(ensemble: ParticleEnsemble, grid: Grid1D) -> np.ndarray:
    """Unit-mass particle density on the grid cells."""
    a = grid.half_length
    edges = np.linspace(-a, a, grid.n_cells + 1)
    counts, _ = np.histogram(ensemble.x, bins=edges)
    return counts / (ensemble.size * grid.dx)


def compare_to_pde(ensemble: ParticleEnsemble, pde_u: np.ndarray, grid: Grid1D) -> float:
    """L1 distance between the particle histogram and the PDE profile,
    both normalized to unit mass."""
    hist = histogram_density(ensemble, grid)
    p = np.asarray(pde_u, dtype=np.float64)
    mass = float(np.sum(p) * grid.dx)
    if mass <= 0.0:
        raise ConfigurationError("PDE profile has no mass to compare against")
    return float(np.sum(np.abs(hist - p / mass)) * grid.dx)
