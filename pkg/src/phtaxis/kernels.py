"""Interaction kernels J, their discretization, and convolution engines.

The competition term samples the population through a convolution
J conv u^beta over the bounded domain (fields are extended by zero
outside).  Two interchangeable engines are provided: a direct
multiply-add (`convolve_direct`, the reference) and a zero-padded FFT
(`convolve_spectral`, the fast path); they agree to 1e-10.  The cosine
transform factor F(k) = integral of J(x) cos(kx) dx feeds the linear
stability analysis; storing this product directly avoids any 2*pi
placement ambiguity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.integrate import quad

from .core import ConfigurationError, Grid1D

_FAMILIES = ("uniform", "logistic", "gaussian", "mexican_hat", "cosine", "epanechnikov", "dirac")

# Truncation radius of the tail-less representation per family; chosen so
# the omitted tail mass is below 1e-10 (exact for compactly supported ones).
_GAUSS_RADIUS_SIGMAS = 8.0
_LOGISTIC_RADIUS = 40.0


@dataclass(frozen=True)
class KernelSpec:
    """Even interaction kernel J(x); `dirac` is the local-model limit."""

    family: str = "logistic"
    rho: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ConfigurationError(
                f"unknown kernel family {self.family!r}, expected one of {_FAMILIES}"
            )
        if self.family in ("uniform", "cosine", "epanechnikov") and self.rho <= 0.0:
            raise ConfigurationError(f"kernel radius rho must be positive, got {self.rho}")
        if self.family in ("gaussian", "mexican_hat") and self.sigma <= 0.0:
            raise ConfigurationError(f"kernel width sigma must be positive, got {self.sigma}")

    @property
    def truncation_radius(self) -> float:
        """Support radius beyond which the kernel is treated as zero."""
        if self.family in ("uniform", "cosine", "epanechnikov"):
            return self.rho
        if self.family in ("gaussian", "mexican_hat"):
            return _GAUSS_RADIUS_SIGMAS * self.sigma
        if self.family == "logistic":
            return _LOGISTIC_RADIUS
        raise ConfigurationError("dirac kernel has no pointwise support")

    @property
    def sign_changing(self) -> bool:
        """True for kernels taking negative values (outside the boundedness theory)."""
        return self.family == "mexican_hat"


def kernel_eval(spec: KernelSpec, x) -> np.ndarray | float:
    """Evaluate J(x); the dirac family is not pointwise evaluable."""
    if spec.family == "dirac":
        raise ConfigurationError("dirac kernel cannot be evaluated pointwise")
    x_arr = np.asarray(x, dtype=np.float64)
    if spec.family == "uniform":
        out = np.where(np.abs(x_arr) <= spec.rho, 1.0 / (2.0 * spec.rho), 0.0)
    elif spec.family == "logistic":
        # 1/(2 + e^x + e^-x) written through cosh so evaluation is exactly even
        out = 1.0 / (2.0 + 2.0 * np.cosh(x_arr))
    elif spec.family == "gaussian":
        s = spec.sigma
        out = np.exp(-(x_arr**2) / (2.0 * s * s)) / (s * np.sqrt(2.0 * np.pi))
    elif spec.family == "mexican_hat":
        # Ricker wavelet (L2-normalized); integrates to zero, so it cannot
        # be renormalized to unit mass.
        s = spec.sigma
        amp = 2.0 / (np.sqrt(3.0 * s) * np.pi**0.25)
        out = amp * (1.0 - (x_arr / s) ** 2) * np.exp(-(x_arr**2) / (2.0 * s * s))
    elif spec.family == "cosine":
        r = spec.rho
        out = np.where(
            np.abs(x_arr) <= r,
            (np.pi / (4.0 * r)) * np.cos(np.pi * x_arr / (2.0 * r)),
            0.0,
        )
    else:  # epanechnikov
        r = spec.rho
        out = np.where(np.abs(x_arr) <= r, (3.0 / (4.0 * r)) * (1.0 - (x_arr / r) ** 2), 0.0)
    return out if np.ndim(x) else float(out)


def kernel_mass(spec: KernelSpec) -> float:
    """Total mass of J by adaptive quadrature over the truncated support."""
    if spec.family == "dirac":
        return 1.0
    R = spec.truncation_radius
    val, _ = quad(lambda x: kernel_eval(spec, x), -R, R, limit=200)
    return float(val)


def kernel_inf(spec: KernelSpec, radius: float, n_samples: int = 4001) -> float:
    """Sampled infimum of J over [-radius, radius] (the eta of the decay theory)."""
    if spec.family == "dirac":
        return 0.0
    xs = np.linspace(-radius, radius, n_samples)
    return float(np.min(kernel_eval(spec, xs)))


@dataclass(frozen=True)
class KernelStencil:
    """Midpoint-rule quadrature weights of J on grid offsets.

    weights[j + half_width] = J(j dx) for offsets j in [-half_width,
    half_width]; midpoint sampling preserves evenness exactly.  When
    `renormalized`, the weights are scaled so that sum(w) * dx = 1, which
    restores the unit-mass normalization the decay theory assumes.
    """

    weights: np.ndarray
    dx: float
    renormalized: bool

    @property
    def half_width(self) -> int:
        return (len(self.weights) - 1) // 2

    @property
    def discrete_mass(self) -> float:
        return float(np.sum(self.weights) * self.dx)


def discretize(spec: KernelSpec, grid: Grid1D, renormalize: bool = False) -> KernelStencil:
    """Sample J at grid offsets within min(2a, truncation radius).

    The dirac family yields the single weight 1/dx at offset 0, so the
    convolution reduces to the identity and the solver runs the local model.
    """
    dx = grid.dx
    if spec.family == "dirac":
        return KernelStencil(weights=np.array([1.0 / dx]), dx=dx, renormalized=True)
    R = min(grid.domain.diameter, spec.truncation_radius)
    if R < dx * (1.0 - 1e-12):
        raise ConfigurationError(
            f"kernel support radius {R:.6g} is below the grid spacing {dx:.6g}; "
            f"refine the grid or widen the kernel"
        )
    m = int(np.floor(R / dx * (1.0 + 1e-12)))
    offsets = np.arange(-m, m + 1, dtype=np.float64) * dx
    weights = np.asarray(kernel_eval(spec, offsets), dtype=np.float64)
    if renormalize:
        mass = float(np.sum(weights) * dx)
        scale = float(np.max(np.abs(weights))) * dx * len(weights)
        if abs(mass) < 1e-8 * scale:
            raise ConfigurationError(
                f"cannot renormalize {spec.family!r}: discrete kernel mass "
                f"{mass:.3g} vanishes relative to the weight scale"
            )
        weights = weights / mass
    return KernelStencil(weights=weights, dx=dx, renormalized=renormalize)


def convolve_direct(stencil: KernelStencil, f: np.ndarray, grid: Grid1D) -> np.ndarray:
    """(J conv f)_i = sum_j w_j f_{i-j} dx with f extended by zero outside.

    Direct multiply-add; the reference engine the spectral path is checked
    against.
    """
    f = np.asarray(f, dtype=np.float64)
    m = stencil.half_width
    full = np.convolve(f, stencil.weights, mode="full")
    return full[m : m + len(f)] * stencil.dx


class SpectralConvolver:
    """Zero-padded FFT convolution bound to one stencil and field length.

    Precomputes the padded kernel transform; repeated application inside a
    time loop costs two real FFTs per call.
    """

    def __init__(self, stencil: KernelStencil, n_cells: int):
        m = stencil.half_width
        self.m = m
        self.n = n_cells
        self.dx = stencil.dx
        self.length = scipy.fft.next_fast_len(n_cells + 2 * m)
        kern = np.zeros(self.length)
        kern[: 2 * m + 1] = stencil.weights
        self._kernel_hat = scipy.fft.rfft(kern)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        f_hat = scipy.fft.rfft(f, self.length)
        full = scipy.fft.irfft(f_hat * self._kernel_hat, self.length)
        return full[self.m : self.m + self.n] * self.dx


def convolve_spectral(stencil: KernelStencil, f: np.ndarray, grid: Grid1D) -> np.ndarray:
    """FFT engine; identical to convolve_direct to 1e-10 in max norm."""
    f = np.asarray(f, dtype=np.float64)
    return SpectralConvolver(stencil, len(f))(f)


def fourier_factor(spec: KernelSpec, k: float) -> float:
    """Cosine-transform factor F(k) = integral of J(x) cos(kx) dx.

    F(0) equals the kernel mass; the uniform family has the closed form
    sin(k rho)/(k rho), the dirac family is identically 1, and every other
    family is integrated adaptively with an oscillatory rule.
    """
    if spec.family == "dirac":
        return 1.0
    if spec.family == "uniform":
        t = k * spec.rho
        return float(np.sinc(t / np.pi))  # sin(t)/t with the 0 limit handled
    if k == 0.0:
        return kernel_mass(spec)
    R = spec.truncation_radius
    val, _ = quad(
        lambda x: kernel_eval(spec, x),
        0.0,
        R,
        weight="cos",
        wvar=float(abs(k)),
        limit=400,
    )
    return float(2.0 * val)
