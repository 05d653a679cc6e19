"""Interaction kernels ``J``, their lattice (Kac) and grid discretizations, and
Fourier coefficients.

A :class:`DiscreteKernel` stores weights on integer offsets in a "stencil"
array whose index ``center`` is offset zero.  Periodic discretizations that
cover the whole period use offsets ``-N//2 .. N - N//2 - 1`` so every residue
appears exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .grid import Grid

TRUNCATION_RATIO = 1e-12
EFFECTIVE_RATIO = 1e-9
WRAP_TOLERANCE = 1e-8


class KernelError(ValueError):
    pass


class ResolutionError(KernelError):
    pass


@dataclass(frozen=True)
class Kernel:
    """Nonnegative symmetric profile with unit mass.

    ``profile`` is ``"gaussian"`` (``exp(-b|x|^2)``, radial in 2-D), ``"uniform"``
    (constant on the domain) or ``"ball"`` (indicator of radius ``R``).
    ``domain_length`` is the per-axis period/extent the kernel lives on.
    """

    profile: str
    dim: int = 1
    b: float = 1.0
    R: float = 1.0
    domain_length: float = 2 * np.pi
    truncation: float = TRUNCATION_RATIO

    def __post_init__(self):
        if self.profile not in ("gaussian", "uniform", "ball"):
            raise KernelError(f"unknown kernel profile {self.profile!r}")
        if self.dim not in (1, 2):
            raise KernelError("kernels are 1-D or 2-D")
        if self.profile == "gaussian" and not self.b > 0:
            raise KernelError("gaussian width parameter b must be positive")
        if self.profile == "ball" and not self.R > 0:
            raise KernelError("ball radius must be positive")

    @classmethod
    def gaussian(cls, b: float, dim: int = 1, domain_length: float = 2 * np.pi, **kw) -> "Kernel":
        return cls("gaussian", dim=dim, b=b, domain_length=domain_length, **kw)

    @classmethod
    def uniform(cls, dim: int = 1, domain_length: float = 2 * np.pi) -> "Kernel":
        return cls("uniform", dim=dim, domain_length=domain_length)

    @classmethod
    def ball(cls, R: float, dim: int = 1, domain_length: float = 2 * np.pi) -> "Kernel":
        return cls("ball", dim=dim, R=R, domain_length=domain_length)

    def __call__(self, r):
        """Evaluate ``J`` at distance(s) ``r`` (normalized over R^d, or over the domain if uniform)."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.profile == "gaussian":
            return np.exp(-self.b * r ** 2) * (self.b / np.pi) ** (self.dim / 2)
        if self.profile == "uniform":
            return np.full_like(r, self.domain_length ** -self.dim)
        vol = 2 * self.R if self.dim == 1 else np.pi * self.R ** 2
        return np.where(r < self.R, 1.0 / vol, 0.0)

    def cutoff(self, ratio: float | None = None) -> float:
        """Radius beyond which ``J < ratio * J(0)``."""
        ratio = self.truncation if ratio is None else ratio
        if self.profile == "gaussian":
            return float(np.sqrt(-np.log(ratio) / self.b))
        if self.profile == "ball":
            return self.R
        return np.inf

    def second_moment(self) -> float:
        """``J_2 = int |w|^2 J(w) dw`` by quadrature (over the domain for the uniform kernel)."""
        if self.profile == "uniform":
            half = self.domain_length / 2
            one = integrate.quad(lambda x: x * x / self.domain_length, -half, half)[0]
            # radial second moment of a product-uniform box: sum of per-axis moments
            return self.dim * one
        hi = self.cutoff(1e-16) if self.profile == "gaussian" else self.R
        if self.dim == 1:
            return 2 * integrate.quad(lambda x: x * x * self(x), 0.0, hi, points=[hi])[0]
        return integrate.quad(lambda r: 2 * np.pi * r ** 3 * self(r), 0.0, hi, points=[hi])[0]

    def transform(self, k) -> np.ndarray:
        """``hat J(k) = int J(u) exp(2 pi i k.u) du``.

        ``k`` counts cycles per unit length of ``u`` (scalar in 1-D, trailing axis of
        size 2 in 2-D); on a unit torus these are exactly the Fourier coefficients.
        Gaussian tails beyond the domain are included; the uniform kernel is the
        constant ``1/L^d`` on its box.
        """
        k = np.asarray(k, dtype=float)
        if self.dim == 2:
            if k.shape[-1:] != (2,):
                raise KernelError("2-D transforms need wave vectors with a trailing axis of 2")
            kk = np.sqrt((k ** 2).sum(axis=-1))
        else:
            kk = np.abs(k)
        if self.profile == "gaussian":
            return np.exp(-(np.pi * kk) ** 2 / self.b)
        if self.profile == "uniform":
            L = self.domain_length
            if self.dim == 1:
                return np.sinc(kk * L)
            return np.sinc(k[..., 0] * L) * np.sinc(k[..., 1] * L)
        if self.dim == 1:
            return np.sinc(2 * kk * self.R)
        w = 2 * np.pi * kk * self.R
        with np.errstate(invalid="ignore", divide="ignore"):
            out = 2 * special.j1(w) / w
        return np.where(kk == 0, 1.0, out)


@dataclass(frozen=True)
class DiscreteKernel:
    """Weights ``W(z)`` on integer offsets.

    ``weights[center + z] = W(z)``; ``raw_sum`` is the sum before renormalization,
    ``truncation_radius`` the physical radius kept, ``spacing`` the physical length
    of one lattice step, ``periodic`` whether offsets wrap on a torus of ``period``
    sites per axis.
    """

    weights: np.ndarray
    center: tuple
    spacing: float
    raw_sum: float
    truncation_radius: float
    periodic: bool
    period: tuple | None = None

    @property
    def support_radius(self) -> int:
        nz = np.argwhere(self.weights > 0) - np.asarray(self.center)
        return int(np.abs(nz).max()) if nz.size else 0

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def offsets(self):
        """Nonzero offsets ``(n_support, dim)`` and their weights."""
        idx = np.argwhere(self.weights > 0)
        return idx - np.asarray(self.center), self.weights[tuple(idx.T)]

    def circular(self, shape) -> np.ndarray:
        """Weights placed on a periodic array of ``shape`` (offset z at index z mod N)."""
        out = np.zeros(shape)
        z, w = self.offsets()
        np.add.at(out, tuple((z % np.asarray(shape)).T), w)
        return out

    def is_symmetric(self, tol: float = 1e-14) -> bool:
        if self.periodic and self.period is not None:
            c = self.circular(self.period)
            flipped = np.roll(np.flip(c, axis=tuple(range(c.ndim))), 1, axis=tuple(range(c.ndim)))
            return bool(np.abs(c - flipped).max() <= tol)
        return bool(np.abs(self.weights - np.flip(self.weights)).max() <= tol)


def _offset_grid(radius, dim: int):
    ax = [np.arange(-r, r + 1) for r in radius]
    return np.meshgrid(*ax, indexing="ij")


def _full_period_axes(period, dim: int):
    ax = [np.arange(-(n // 2), n - n // 2) for n in period]
    return np.meshgrid(*ax, indexing="ij")


def _sample(J: Kernel, offsets, step: float, radius_cut: float):
    """Sample ``J`` on integer offsets (times ``step``) inside ``radius_cut``."""
    r = np.sqrt(sum((step * z) ** 2 for z in offsets))
    return np.where(r <= radius_cut, J(r), 0.0)


def kac_discretize(J: Kernel, gamma: float, sites_per_axis: int | None = None,
                   periodic: bool = True) -> DiscreteKernel:
    """Kac weights ``W(z) = gamma^d J(gamma z)`` on the lattice, renormalized to sum 1.

    ``sites_per_axis`` is the torus size (periodic) or the box size (fixed boundary);
    a support wider than half the torus is rejected unless the clipped tail is below
    ``WRAP_TOLERANCE`` relative to the peak.
    """
    if not 0 < gamma <= 1:
        raise KernelError(f"gamma must lie in (0, 1], got {gamma}")
    d = J.dim
    step = float(gamma)
    if J.profile == "uniform":
        if sites_per_axis is None:
            raise KernelError("the uniform kernel needs the lattice size")
        period = (int(sites_per_axis),) * d
        z = _full_period_axes(period, d)
        w = np.full(z[0].shape, 1.0)
        raw = float(w.sum()) * gamma ** d * J(0.0)
        return DiscreteKernel(w / w.sum(), tuple(n // 2 for n in period), step, raw,
                              np.inf, True, period)
    rad_phys = J.cutoff()
    if J.profile == "ball":
        rad_phys = J.R
    rad = int(np.floor(rad_phys / step + 1e-12))
    period = None
    if periodic and sites_per_axis is not None:
        period = (int(sites_per_axis),) * d
        half = (int(sites_per_axis) - 1) // 2
        if rad > half:
            tail = float(J(step * (half + 1)) / J(0.0))
            if tail > WRAP_TOLERANCE or J.profile == "ball":
                raise KernelError(
                    f"kernel support ({rad} sites) exceeds half the torus ({half} sites)")
            rad = half
            rad_phys = step * half
    z = _offset_grid((rad,) * d, d)
    w = _sample(J, z, step, rad_phys + 1e-12) * gamma ** d
    raw = float(w.sum())
    if raw <= 0:
        raise ResolutionError("kernel has no lattice points in its support")
    return DiscreteKernel(w / raw, (rad,) * d, step, raw, rad_phys, periodic, period)


def effective_radius(J: Kernel) -> float:
    """Radius where ``J`` falls below ``EFFECTIVE_RATIO`` of its peak."""
    return J.cutoff(EFFECTIVE_RATIO)


def grid_discretize(J: Kernel, grid: Grid) -> DiscreteKernel:
    """Quadrature weights ``J(offset) h^d`` for the mesoscopic convolution, summing to 1.

    Periodic grids use minimum-image offsets over one full period.  Fixed-boundary
    grids get a symmetric stencil clipped to the grid extent.
    """
    if grid.ndim != J.dim:
        raise KernelError("kernel and grid dimensions differ")
    h = grid.spacing[0]
    if not np.allclose(grid.spacing, h):
        raise KernelError("grid spacing must be equal on all axes")
    if J.profile != "uniform":
        width = 2 * (effective_radius(J) if J.profile == "gaussian" else J.R)
        if width / h < 5:
            raise ResolutionError(
                f"grid spacing {h:.4g} resolves the kernel support ({width:.4g}) "
                f"with fewer than 5 samples")
    d = J.dim
    if grid.periodic_bc:
        z = _full_period_axes(grid.shape, d)
        w = _sample(J, z, h, np.inf) * h ** d
        center = tuple(n // 2 for n in grid.shape)
        raw = float(w.sum())
        return DiscreteKernel(w / raw, center, h, raw, np.inf, True, grid.shape)
    rad_phys = J.cutoff() if J.profile == "gaussian" else (J.R if J.profile == "ball" else np.inf)
    rad = min(int(np.floor(rad_phys / h)), max(grid.shape) - 1)
    z = _offset_grid((rad,) * d, d)
    w = _sample(J, z, h, np.inf) * h ** d
    raw = float(w.sum())
    return DiscreteKernel(w / raw, (rad,) * d, h, raw, rad * h, False, None)


@dataclass(frozen=True)
class FourierCoeffs:
    """``hat J(k)`` on the integer harmonics of a periodic grid.

    ``values`` is indexed like ``numpy.fft.fftfreq`` output (harmonic ``k`` means
    ``exp(2 pi i k x / L)``); use :meth:`at` for lookups by signed harmonic.
    """

    values: np.ndarray
    lengths: tuple

    def at(self, k) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=int))
        if self.values.ndim == 1:
            return self.values[k % self.values.shape[0]]
        k = np.asarray(k).reshape(-1, self.values.ndim)
        return self.values[tuple((k % np.asarray(self.values.shape)).T)]

    def harmonics(self) -> list:
        return [np.fft.fftfreq(n, 1.0 / n).astype(int) for n in self.values.shape]


def fourier_coeffs(Jd: DiscreteKernel, grid: Grid) -> FourierCoeffs:
    """DFT of the circular weight array; imaginary parts must vanish by symmetry."""
    if not grid.periodic_bc:
        raise KernelError("Fourier coefficients need a periodic grid")
    c = Jd.circular(grid.shape)
    spec = np.fft.fftn(c)
    imag = float(np.abs(spec.imag).max())
    if imag > 1e-10:
        raise KernelError(f"kernel is not symmetric (imaginary part {imag:.2e})")
    return FourierCoeffs(spec.real, grid.lengths)
