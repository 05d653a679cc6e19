"""Spatial grids and simplex-valued density fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SimplexError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a box.

    Periodic grids put nodes at ``lower + j*h`` (the FFT convention).  Fixed-boundary
    grids are cell centered, ``lower + (j + 1/2)*h``, and carry the active region
    ``Lambda`` as per-axis ``(lo, hi)`` bounds; nodes outside it are frozen.
    """

    shape: tuple
    lower: tuple
    upper: tuple
    bc: str = "periodic"
    active: tuple | None = None

    def __post_init__(self):
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if not (len(shape) == len(lower) == len(upper)) or len(shape) not in (1, 2):
            raise ValueError("grid must be 1-D or 2-D with matching bounds")
        if any(n < 1 for n in shape) or any(hi <= lo for lo, hi in zip(lower, upper)):
            raise ValueError("grid needs positive size and extent")
        if self.bc not in ("periodic", "fixed"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.active is not None:
            act = np.asarray(self.active, dtype=float).reshape(-1, 2)
            if act.shape[0] != len(shape):
                raise ValueError("active region needs one (lo, hi) pair per axis")
            object.__setattr__(self, "active", tuple(map(tuple, act.tolist())))

    @classmethod
    def periodic(cls, n, lower=-np.pi, upper=np.pi, dim: int = 1) -> "Grid":
        return cls((n,) * dim, (lower,) * dim, (upper,) * dim, "periodic")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def periodic_bc(self) -> bool:
        return self.bc == "periodic"

    @property
    def lengths(self) -> tuple:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def spacing(self) -> tuple:
        return tuple(L / n for L, n in zip(self.lengths, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list:
        out = []
        for n, lo, h in zip(self.shape, self.lower, self.spacing):
            shift = 0.0 if self.periodic_bc else 0.5
            out.append(lo + (np.arange(n) + shift) * h)
        return out

    def coords(self) -> list:
        return np.meshgrid(*self.axes(), indexing="ij")

    def active_mask(self) -> np.ndarray:
        """Nodes that evolve; everything for periodic grids."""
        if self.periodic_bc or self.active is None:
            return np.ones(self.shape, dtype=bool)
        mask = np.ones(self.shape, dtype=bool)
        for x, (lo, hi) in zip(self.coords(), self.active):
            mask &= (x > lo) & (x < hi)
        return mask


@dataclass
class DensityField:
    """Strategy profile ``f(u, i)``; ``values`` has shape ``(S, *grid.shape)``."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[1:] != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")

    @property
    def num_strategies(self) -> int:
        return self.values.shape[0]

    def simplex_defect(self) -> float:
        """Largest violation of ``0 <= f <= 1`` and ``sum_i f = 1`` over all nodes."""
        v = self.values
        return float(max(np.abs(v.sum(axis=0) - 1.0).max(),
                         max(0.0, -v.min()), max(0.0, v.max() - 1.0)))

    def check_simplex(self, tol: float = 1e-9) -> None:
        d = self.simplex_defect()
        if d > tol:
            raise SimplexError(f"field leaves the simplex by {d:.3e}")

    def spatial_average(self) -> np.ndarray:
        mask = self.grid.active_mask()
        return self.values[:, mask].mean(axis=1)

    def copy(self) -> "DensityField":
        return DensityField(self.grid, self.values.copy(), self.time)

    @classmethod
    def from_p(cls, grid: Grid, p, time: float = 0.0) -> "DensityField":
        """Two-strategy field from the strategy-1 density ``p``."""
        p = np.broadcast_to(np.asarray(p, dtype=float), grid.shape)
        return cls(grid, np.stack([p, 1.0 - p]), time)

    @classmethod
    def constant(cls, grid: Grid, rho) -> "DensityField":
        rho = np.asarray(rho, dtype=float)
        return cls(grid, np.broadcast_to(rho.reshape((-1,) + (1,) * grid.ndim),
                                         (rho.size,) + grid.shape).copy())

    @property
    def p(self) -> np.ndarray:
        return self.values[0]


def project_simplex(values: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Clip into ``[lo, hi]`` and renormalize each node to sum 1."""
    v = np.clip(values, lo, hi)
    return v / v.sum(axis=0, keepdims=True)
