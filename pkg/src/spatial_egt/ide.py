"""Mesoscopic integro-differential equations and their method-of-lines solver."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import signal
from scipy.special import expit

from .game import (ConfigurationError, CoordinationParams, Game, RateRule,
                   ResponseFunction, coordination_params, rate_matrix)
from .grid import DensityField, Grid, SimplexError, project_simplex
from .kernels import DiscreteKernel, Kernel, grid_discretize

log = logging.getLogger(__name__)


class InstabilityError(RuntimeError):
    pass


class Dynamic(str, Enum):
    GENERAL = "general"
    LOGIT = "logit"
    IMITATIVE_REPLICATOR = "imitative_replicator"
    BIOLOGICAL_REPLICATOR = "biological_replicator"
    REDUCED_REPLICATOR = "reduced_replicator"
    REDUCED_LOGIT = "reduced_logit"


@dataclass(frozen=True)
class IdeSystem:
    """Game, rule and kernel on a grid.

    ``dynamic`` selects the right-hand side.  ``GENERAL`` uses ``rule`` as given;
    ``LOGIT`` and ``IMITATIVE_REPLICATOR`` are shorthands for the corresponding
    rules (the latter with ``F_kappa``); the reduced forms evolve ``p = f(., 1)``
    of a two-strategy coordination game.
    """

    game: Game
    kernel: Kernel
    grid: Grid
    dynamic: Dynamic = Dynamic.GENERAL
    rule: RateRule | None = None
    kappa: float = np.inf
    convolution: str = "fft"

    def __post_init__(self):
        object.__setattr__(self, "dynamic", Dynamic(self.dynamic))
        dyn = self.dynamic
        if dyn is Dynamic.LOGIT:
            object.__setattr__(self, "rule", RateRule.logit())
        elif dyn is Dynamic.IMITATIVE_REPLICATOR:
            object.__setattr__(self, "rule", RateRule.imitative(self.kappa))
        elif dyn is Dynamic.GENERAL and self.rule is None:
            raise ConfigurationError("the general input-output dynamic needs a rate rule")
        if dyn in (Dynamic.REDUCED_REPLICATOR, Dynamic.REDUCED_LOGIT):
            coordination_params(self.game)
        if self.convolution not in ("fft", "direct"):
            raise ConfigurationError(f"unknown convolution method {self.convolution!r}")
        object.__setattr__(self, "_weights", grid_discretize(self.kernel, self.grid))
        if self.grid.periodic_bc:
            object.__setattr__(self, "_kfft", np.fft.rfftn(self._weights.circular(self.grid.shape)))

    @property
    def weights(self) -> DiscreteKernel:
        return self._weights

    @property
    def params(self) -> CoordinationParams:
        return coordination_params(self.game)

    @property
    def reduced(self) -> bool:
        return self.dynamic in (Dynamic.REDUCED_REPLICATOR, Dynamic.REDUCED_LOGIT)

    def convolve(self, values: np.ndarray, method: str | None = None) -> np.ndarray:
        """``J * f`` for each leading channel of ``values`` (shape ``(C, *grid)``)."""
        method = method or self.convolution
        g = self.grid
        axes = tuple(range(1, g.ndim + 1))
        if g.periodic_bc:
            if method == "fft":
                spec = np.fft.rfftn(values, axes=axes) * self._kfft[None]
                return np.fft.irfftn(spec, s=g.shape, axes=axes)
            out = np.zeros_like(values)
            z, w = self._weights.offsets()
            for zz, ww in zip(z, w):
                out += ww * np.roll(values, tuple(zz), axis=axes)
            return out
        # fixed boundary: quadrature over Gamma, no contribution from outside the box
        stencil = self._weights.weights
        if method == "fft":
            return np.stack([signal.fftconvolve(v, stencil, mode="same") for v in values])
        return np.stack([signal.convolve(v, stencil, mode="same", method="direct") for v in values])


def reduced_F(dynamic: Dynamic, r, s, params: CoordinationParams, kappa: float = np.inf):
    """Two-strategy reaction ``F(r, s)`` with ``r = J*p`` and ``s = p``.

    Replicator: ``(1-s) r F_k(beta(r-zeta)) - s(1-r) F_k(beta(zeta-r))``;
    logit: ``l(beta(r-zeta)) - s``.
    """
    dynamic = Dynamic(dynamic)
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    beta, zeta = params.beta, params.zeta
    if dynamic in (Dynamic.REDUCED_REPLICATOR, Dynamic.IMITATIVE_REPLICATOR):
        F = ResponseFunction.regularized(kappa)
        return (1 - s) * r * F(beta * (r - zeta)) - s * (1 - r) * F(beta * (zeta - r))
    if dynamic in (Dynamic.REDUCED_LOGIT, Dynamic.LOGIT):
        return expit(beta * (r - zeta)) - s
    raise ConfigurationError(f"no reduced form for {dynamic.value}")


def _input_output(c: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``sum_k c[k, i] f_k - f_i sum_k c[i, k]`` with the diagonal dropped."""
    S = f.shape[0]
    off = c.copy()
    off[np.arange(S), np.arange(S)] = 0.0
    gain = np.einsum("ki...,k...->i...", off, f)
    loss = f * off.sum(axis=1)
    return gain - loss


def rhs_values(system: IdeSystem, values: np.ndarray) -> np.ndarray:
    """Tendency array for raw field values (``(S, *grid)``, or ``(1, *grid)`` for reduced forms)."""
    dyn = system.dynamic
    mask = None if system.grid.periodic_bc else system.grid.active_mask()
    if system.reduced:
        p = values[0]
        r = system.convolve(values[:1])[0]
        out = reduced_F(dyn, r, p, system.params, system.kappa)[None]
    else:
        conv = system.convolve(values)
        A = system.game.payoff
        payoffs = np.tensordot(A, conv, axes=(1, 0))
        if dyn is Dynamic.BIOLOGICAL_REPLICATOR:
            mean_fit = (values * payoffs).sum(axis=0, keepdims=True)
            out = values * (payoffs - mean_fit)
        else:
            c = rate_matrix(system.rule, payoffs, conv)
            out = _input_output(c, values)
    if mask is not None:
        out[:, ~mask] = 0.0
    return out


def rhs(system: IdeSystem, f: DensityField) -> np.ndarray:
    """Tendency ``df/dt`` with the same shape as ``f.values``.

    Reduced dynamics act on ``p = f(., 0)`` and return the matching two-strategy
    tendency ``(dp, -dp)``.
    """
    if system.reduced:
        dp = rhs_values(system, f.values[:1])[0]
        return np.stack([dp, -dp])
    return rhs_values(system, f.values)


def _rk4(fun, y, dt):
    k1 = fun(y)
    k2 = fun(y + 0.5 * dt * k1)
    k3 = fun(y + 0.5 * dt * k2)
    k4 = fun(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def stable_dt(system: IdeSystem) -> float:
    """Default step ``0.5 / L_rhs`` with ``L_rhs`` a bound on the tendency's Lipschitz constant.

    Reduced forms use ``|dF/dr| + |dF/ds|``: at most ``beta/4 + 1`` for logit and
    ``2 (F(beta) + beta)`` for the replicator.  Full systems use a crude bound
    from the largest payoff.
    """
    if system.reduced:
        beta = system.params.beta
        if system.dynamic is Dynamic.REDUCED_LOGIT:
            L = beta / 4 + 1.0
        else:
            L = 2.0 * (float(ResponseFunction.regularized(system.kappa)(beta)) + beta)
        return 0.5 / L
    A = np.abs(system.game.payoff).max()
    S = system.game.num_strategies
    if system.dynamic is Dynamic.LOGIT:
        L = 1.0 + 2.0 * A * S
    else:
        L = 2.0 * S * (1.0 + 2.0 * A) * (1.0 + A)
    return 0.5 / L


@dataclass
class IntegrationLog:
    steps: int = 0
    projections: int = 0
    max_drift: float = 0.0
    max_defect: float = 0.0


def integrate(system: IdeSystem, f0: DensityField, t_end: float, dt: float | None = None,
              snapshot_times=(), log_out: IntegrationLog | None = None) -> list:
    """Classical RK4 on the method-of-lines system.

    Returns the fields at ``snapshot_times`` (``t_end`` is always included).  A
    snapshot whose node sums drift by more than ``1e-12`` is clipped and
    renormalized; any step leaving the simplex by more than ``1e-6`` raises
    :class:`InstabilityError`.
    """
    if f0.grid != system.grid:
        raise ConfigurationError("initial field lives on a different grid")
    f0.check_simplex(1e-9)
    dt = stable_dt(system) if dt is None else float(dt)
    if dt <= 0:
        raise ValueError("time step must be positive")
    stats = log_out if log_out is not None else IntegrationLog()
    reduced = system.reduced
    y = f0.values[:1].copy() if reduced else f0.values.copy()
    t = f0.time
    targets = sorted({float(s) for s in snapshot_times if f0.time <= s <= f0.time + t_end}
                     | {f0.time + float(t_end)})
    fun = lambda v: rhs_values(system, v)
    out = []
    for target in targets:
        while t < target - 1e-12:
            h = min(dt, target - t)
            y = _rk4(fun, y, h)
            t += h
            stats.steps += 1
            full = np.concatenate([y, 1.0 - y]) if reduced else y
            defect = max(float(-full.min()), float(full.max() - 1.0),
                         0.0 if reduced else float(np.abs(full.sum(axis=0) - 1.0).max()))
            stats.max_defect = max(stats.max_defect, defect)
            if not np.isfinite(defect) or defect > 1e-6:
                raise InstabilityError(
                    f"step {stats.steps} (t={t:.6g}) leaves the simplex by {defect:.3e}; reduce dt")
        full = np.concatenate([y, 1.0 - y]) if reduced else y
        drift = max(float(np.abs(full.sum(axis=0) - 1.0).max()),
                    float(-full.min()), float(full.max() - 1.0))
        stats.max_drift = max(stats.max_drift, drift)
        snap = full.copy()
        if drift > 1e-12:
            stats.projections += 1
            log.debug("projecting snapshot at t=%g (drift %.2e)", t, drift)
            snap = project_simplex(snap)
            if not system.grid.periodic_bc:
                frozen = ~system.grid.active_mask()
                snap[:, frozen] = f0.values[:, frozen]
        out.append(DensityField(system.grid, snap, t))
    return out


def glauber_rhs(system: IdeSystem, u: np.ndarray) -> np.ndarray:
    """``du/dt = tanh(beta J*u / 4) - u`` for the spin variable ``u = 2p - 1``."""
    ju = system.convolve(u[None])[0]
    return np.tanh(0.25 * system.params.beta * ju) - u


def integrate_glauber(system: IdeSystem, u0: np.ndarray, t_end: float, dt: float) -> np.ndarray:
    """RK4 for :func:`glauber_rhs` (periodic grids); returns ``u`` at ``t_end``."""
    u = np.asarray(u0, dtype=float).copy()
    t = 0.0
    while t < t_end - 1e-12:
        h = min(dt, t_end - t)
        u = _rk4(lambda v: glauber_rhs(system, v), u, h)
        t += h
    return u


def random_initial(grid: Grid, base, amplitude, seed, clip=(0.01, 0.99)) -> DensityField:
    """Two-strategy datum ``base + rand * amplitude`` with per-node uniform ``rand``.

    ``amplitude`` may be an array on the grid (e.g. ``cos x cos y``).  Values are
    clipped into ``clip`` to stay in the open simplex.
    """
    rng = np.random.default_rng(seed)
    p = base + rng.random(grid.shape) * np.asarray(amplitude, dtype=float)
    return DensityField.from_p(grid, np.clip(p, *clip))
