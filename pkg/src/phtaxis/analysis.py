"""Long-time diagnostics: decay functional, convergence and pattern metrics.

The decay structure combines the entropy-like density a(u^beta), with
a(s) = (s - ln s - 1)/beta vanishing exactly at the carrying capacity,
and a weighted L2 distance of h from its equilibrium value h*.  The
weight and its admissibility window are derived from the model constants;
when the admissibility checks fail the functional is still computable
(with a unit fallback weight) but is flagged as outside the decay theory,
and monotonicity becomes an empirical observation rather than a theorem.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .core import Grid1D, ModelParams, SourceSpec, State, eval_g, sample_growth_bounds
from .kernels import kernel_inf
from .solver import Trajectory

U_FLOOR = 1e-30  # ln singularity guard; discrete solutions only approximate strict positivity
MIN_C_H = 1e-6


def a_of_s(s, beta: float):
    """Entropy density a(s) = (s - ln(s) - 1)/beta; >= 0 with equality iff s = 1."""
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr <= 0.0):
        raise ValueError("a(s) requires s > 0")
    out = (s_arr - np.log(s_arr) - 1.0) / beta
    return float(out) if np.ndim(s) == 0 else out


@dataclass(frozen=True)
class AssgFit:
    """Fitted constants of the structural sign condition on g.

    The condition g(u,h)(h-h*) <= -C_H (h-h*)^2 + C_U u^(alpha-1) (u^beta-1)^2
    is tested on a dense sample grid of (0, U] x [0, H]; `holds` reports
    whether some C_H >= 1e-6 with the smallest sufficient C_U >= 0 exists
    there.
    """

    holds: bool
    C_H: float
    C_U: float


def check_assg(
    source: SourceSpec,
    h_star: float,
    H: float,
    U: float,
    alpha: float,
    beta: float,
    n_u: int = 200,
    n_h: int = 201,
) -> AssgFit:
    """Fit (C_H, C_U): largest C_H and smallest C_U making the condition hold.

    For fixed C_U the largest admissible C_H is a pointwise minimum that is
    nondecreasing in C_U, so the smallest sufficient C_U is found by
    doubling and bisection.
    """
    us = np.linspace(U / n_u, U, n_u)
    hs = np.linspace(0.0, H, n_h)
    uu, hh = np.meshgrid(us, hs, indexing="ij")
    G = np.asarray(eval_g(source, uu, hh)) * (hh - h_star)
    A = (hh - h_star) ** 2
    B = uu ** (alpha - 1.0) * (uu**beta - 1.0) ** 2
    mask = A > 1e-300
    if np.any(G[~mask] > 1e-12):  # h = h* samples need g*(h-h*) <= C_U B; here it is 0
        return AssgFit(holds=False, C_H=np.nan, C_U=np.nan)

    def c_h_max(c_u: float) -> float:
        return float(np.min((c_u * B[mask] - G[mask]) / A[mask]))

    if c_h_max(0.0) >= MIN_C_H:
        return AssgFit(holds=True, C_H=c_h_max(0.0), C_U=0.0)
    hi = 1e-6
    while c_h_max(hi) < MIN_C_H and hi < 1e12:
        hi *= 2.0
    if c_h_max(hi) < MIN_C_H:
        return AssgFit(holds=False, C_H=np.nan, C_U=np.nan)
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if c_h_max(mid) >= MIN_C_H:
            hi = mid
        else:
            lo = mid
    return AssgFit(holds=True, C_H=c_h_max(hi), C_U=hi)


@dataclass
class LyapunovParams:
    """Constants of the composite decay functional and their admissibility.

    Built from the model by `lyapunov_params`.  When `applicable` is False
    the functional uses the unit fallback weight and `reasons` explains
    which admissibility check failed; evaluation remains well defined
    either way.
    """

    h_star: float
    C_H: float
    C_U: float
    U: float
    C_B: float
    C_A: float
    epsilon: float
    C_eqh: float
    applicable: bool
    reasons: list[str] = field(default_factory=list)
    clamp_count: int = 0


def lyapunov_params(params: ModelParams, grid: Grid1D, U: float) -> LyapunovParams:
    """Derive the functional's constants from the model on this domain.

    D1 and the motility bound are taken from the configured d(x) itself
    (the run integrates the limit problem directly, not an approximating
    sequence); the kernel lower bound eta is sampled over the domain
    diameter.  Failed checks mark the result "theory not applicable"
    instead of raising.
    """
    reasons: list[str] = []
    D1, C_bd = params.d_bounds()
    a = grid.half_length
    diam = 2.0 * a
    omega = 2.0 * a
    beta = params.beta
    H = params.source.H
    gb = sample_growth_bounds(params.growth, H)
    delta = params.growth.delta if params.growth.delta is not None else gb.mu_min
    eta = kernel_inf(params.kernel, diam)
    h_star_fit = _h_star_for_analysis(params.source)
    fit = check_assg(params.source, h_star_fit, H, U, params.alpha, beta)
    if not fit.holds:
        reasons.append("structural sign condition on g has no admissible (C_H, C_U) fit")

    C_B = (gb.lipschitz * H + gb.mu_at_zero) * (diam * beta * U**beta) ** 2 / (4.0 * D1)
    if delta > 0.0 and eta > 0.0 and fit.holds:
        C_A = (
            fit.C_U * C_bd * ((beta - 1.0) * U**beta + 1.0)
            / (4.0 * delta * eta * omega * params.D_H * D1)
            - 1.0
            - C_B
        )
    else:
        C_A = np.inf
        if delta <= 0.0:
            reasons.append("growth rate has no positive lower bound delta")
        if eta <= 0.0:
            reasons.append("kernel has no positive lower bound eta on the domain diameter")

    if not (0.0 < C_B < 1.0):
        reasons.append(f"C_B = {C_B:.3g} outside (0, 1)")
    if not (C_A < 0.0):
        reasons.append(f"C_A = {C_A:.3g} not negative")
    if not (C_A * C_A > 4.0 * C_B):
        reasons.append("C_A^2 <= 4 C_B: admissible weight interval is empty")

    epsilon = np.nan
    C_eqh = 1.0  # fallback weight keeps the functional evaluable
    if not reasons:
        root = np.sqrt(C_A * C_A / 4.0 - C_B)
        lo = max(-C_A / 2.0 - root, C_B)
        hi = min(-C_A / 2.0 + root, 1.0)
        if not C_B < -C_A / 2.0 + root:
            reasons.append("C_B exceeds the upper admissibility bound")
        elif lo >= hi:
            reasons.append("admissible weight interval is empty")
        else:
            epsilon = 0.5 * (lo + hi)  # membership is all the theory requires
            C_eqh = (
                epsilon
                * (C_bd * ((beta - 1.0) * U**beta + 1.0)) ** 2
                / (4.0 * D1 * params.D_H * (epsilon - C_B))
            )
            if not (1.0 - epsilon) * delta * eta * omega - fit.C_U * C_eqh > 0.0:
                reasons.append("competition damping does not dominate the coupling weight")

    return LyapunovParams(
        h_star=h_star_fit,
        C_H=fit.C_H,
        C_U=fit.C_U,
        U=U,
        C_B=C_B,
        C_A=C_A,
        epsilon=epsilon,
        C_eqh=C_eqh,
        applicable=not reasons,
        reasons=reasons,
    )


def _h_star_for_analysis(source: SourceSpec) -> float:
    from .stability import find_h_star  # local import avoids a cycle

    return find_h_star(source)


def lyapunov(state: State, lp: LyapunovParams, beta: float, grid: Grid1D) -> float:
    """Quadrature of a(u^beta) + (C_eqh/2)(h - h*)^2 over the domain.

    u is clamped at 1e-30 before the logarithm (counted on lp.clamp_count);
    a(u^beta) is computed as u^beta/beta - ln(u) - 1/beta, which is the
    same function but immune to underflow of u^beta for large beta.
    """
    u = state.u
    n_clamped = int(np.count_nonzero(u < U_FLOOR))
    if n_clamped:
        lp.clamp_count += n_clamped
        warnings.warn(
            f"lyapunov: clamped {n_clamped} cell(s) of u at the {U_FLOOR:g} floor",
            stacklevel=2,
        )
        u = np.maximum(u, U_FLOOR)
    a_vals = u**beta / beta - np.log(u) - 1.0 / beta
    h_part = 0.5 * lp.C_eqh * (state.h - lp.h_star) ** 2
    return float(np.sum(a_vals + h_part) * grid.dx)


def convergence_metrics(state: State, c: float, h_star: float) -> tuple[float, float]:
    """Max-norm distances (sup|u - c|, sup|h - h*|); c is 0 or 1."""
    return (
        float(np.max(np.abs(state.u - c))),
        float(np.max(np.abs(state.h - h_star))),
    )


@dataclass(frozen=True)
class PatternReport:
    """Scalar summaries of a density profile's spatial structure."""

    spatial_variance: float
    dominant_wavenumber: int | None  # cosine-mode index z (k = pi z / a)
    front_position: float | None  # rightmost node with u > 0.5


def pattern_metrics(u: np.ndarray, grid: Grid1D) -> PatternReport:
    """Variance, dominant cosine mode, and front position of a profile.

    The mode analysis projects u - mean(u) onto the wall-compatible cosine
    modes cos(pi z x / a); on the cell-centered grid these are exactly the
    even-index DCT-II modes, so the dominant z is read off the transform
    (valid up to the aliasing limit z < n_cells / 2).
    """
    u = np.asarray(u, dtype=np.float64)
    ubar = float(u.mean())
    dev = u - ubar
    variance = float(np.mean(dev**2))
    front_idx = np.nonzero(u > 0.5)[0]
    front = float(grid.x[front_idx[-1]]) if len(front_idx) else None
    if variance < 1e-28:
        return PatternReport(variance, None, front)
    coeffs = scipy.fft.dct(dev, type=2)
    z_hi = (grid.n_cells - 1) // 2
    energies = np.abs(coeffs[2 : 2 * z_hi + 1 : 2])  # modes z = 1..z_hi
    dominant = int(np.argmax(energies)) + 1
    return PatternReport(variance, dominant, front)


def detect_blowup(traj: Trajectory, threshold: float = 1e3) -> float | None:
    """Earliest snapshot time with max(u) > threshold, else the recorded
    blow-up event time, else None."""
    for snap in traj.snapshots:
        if float(snap.u.max()) > threshold:
            return snap.t
    return traj.blow_up_time()
