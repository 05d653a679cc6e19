"""Turn a :class:`RunConfig` into library objects."""

from __future__ import annotations

import numpy as np

from ..game import RateFamily, RateRule, ResponseFunction, ResponseKind
from ..grid import DensityField, Grid
from ..ide import Dynamic, IdeSystem
from ..kernels import Kernel
from .config import BranchSpec, ConfigError, RunConfig


def make_kernel(cfg: RunConfig) -> Kernel:
    k = cfg.kernel
    length = cfg.domain.upper - cfg.domain.lower
    return Kernel(k.profile, dim=cfg.domain.dim, b=k.b, R=k.R, domain_length=length,
                  truncation=k.truncation)


def make_grid(cfg: RunConfig, n: int | None = None) -> Grid:
    d = cfg.domain
    n = d.n if n is None else n
    shape = (n,) * d.dim
    lower, upper = (d.lower,) * d.dim, (d.upper,) * d.dim
    if d.bc == "periodic":
        return Grid(shape, lower, upper, "periodic")
    return Grid(shape, lower, upper, "fixed", d.active)


def make_rule(branch: BranchSpec) -> RateRule:
    dyn = branch.dynamic
    if dyn in (Dynamic.LOGIT, Dynamic.REDUCED_LOGIT):
        return RateRule.logit()
    if dyn in (Dynamic.IMITATIVE_REPLICATOR, Dynamic.REDUCED_REPLICATOR, Dynamic.BIOLOGICAL_REPLICATOR):
        return RateRule.imitative(branch.kappa)
    try:
        kind = ResponseKind(branch.response)
        fam = RateFamily(branch.family)
    except ValueError as exc:
        raise ConfigError(f"branch:{branch.name}.family", str(exc)) from None
    F = ResponseFunction(kind, kappa=branch.kappa) if kind is ResponseKind.REGULARIZED else ResponseFunction(kind)
    return RateRule(fam, F)


def make_system(cfg: RunConfig, branch: BranchSpec, grid: Grid | None = None) -> IdeSystem:
    rule = make_rule(branch) if branch.dynamic is Dynamic.GENERAL else None
    return IdeSystem(cfg.game, make_kernel(cfg), grid or make_grid(cfg), branch.dynamic, rule,
                     branch.kappa)


def initial_profile(cfg: RunConfig):
    """Deterministic strategy-1 density ``p(*coords)`` for the configured initial datum."""
    ini = cfg.initial
    if ini.kind == "random_cos":
        raise ConfigError("initial.kind", "random initial data have no deterministic profile")

    def p(*x):
        if ini.kind == "constant":
            base = ini.rho[0] if ini.rho else ini.base
            return np.full(np.shape(x[0]), base, dtype=float)
        if ini.kind == "profile_cos":
            wave = np.prod([np.cos(ini.mode * xi) for xi in x], axis=0)
            return np.clip(ini.base + ini.amplitude * wave, 0.0, 1.0)
        inside = np.ones(np.shape(x[0]), dtype=bool)
        for xi in x:
            inside &= (xi > ini.lo) & (xi < ini.hi)
        return np.where(inside, ini.inside, ini.outside).astype(float)

    return p


def initial_field(cfg: RunConfig, grid: Grid, seed: int) -> DensityField:
    """Initial :class:`DensityField`; fixed-boundary frozen nodes take the boundary values."""
    ini = cfg.initial
    coords = grid.coords()
    if ini.kind == "constant" and len(ini.rho) > 2:
        f = DensityField.constant(grid, ini.rho)
    else:
        if ini.kind == "random_cos":
            rng = np.random.default_rng(seed)
            wave = np.prod([np.cos(ini.mode * x) for x in coords], axis=0)
            p = np.clip(ini.base + rng.random(grid.shape) * ini.amplitude * wave, 0.01, 0.99)
        else:
            p = initial_profile(cfg)(*coords)
        f = DensityField.from_p(grid, p)
    if not grid.periodic_bc:
        if f.num_strategies != 2:
            raise ConfigError("domain.bc", "fixed-boundary runs support two strategies")
        frozen = ~grid.active_mask()
        x0 = coords[0]
        lo, hi = grid.active[0]
        p = f.values[0].copy()
        p[frozen & (x0 <= lo)] = cfg.domain.boundary_left
        p[frozen & (x0 >= hi)] = cfg.domain.boundary_right
        f = DensityField.from_p(grid, p)
    return f

