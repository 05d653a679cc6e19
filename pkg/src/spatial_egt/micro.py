"""Exact simulation of the lattice strategy-revision process.

The lattice is described by a :class:`~spatial_egt.grid.Grid` whose nodes are the
agents (spacing ``gamma`` in mesoscopic units).  Periodic lattices are discrete
tori; fixed-boundary lattices are boxes ``Gamma`` whose sites outside the active
region ``Lambda`` never revise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import _engine
from .game import (ConfigurationError, Game, RateFamily, RateRule, ResponseKind,
                   mean_rate, rate_bound, rate_matrix)
from .grid import DensityField, Grid, SimplexError
from .kernels import DiscreteKernel, Kernel, kac_discretize

log = logging.getLogger(__name__)

_FAMILY_CODES = {
    RateFamily.TARGETING_INNOVATIVE: _engine.FAM_TARGETING_INNOVATIVE,
    RateFamily.COMPARING_INNOVATIVE: _engine.FAM_COMPARING_INNOVATIVE,
    RateFamily.TARGETING_NON_INNOVATIVE: _engine.FAM_TARGETING_NON_INNOVATIVE,
    RateFamily.COMPARING_NON_INNOVATIVE: _engine.FAM_COMPARING_NON_INNOVATIVE,
    RateFamily.LOGIT: _engine.FAM_LOGIT,
}
_RESPONSE_CODES = {
    ResponseKind.POSITIVE_PART: _engine.RESP_POSITIVE_PART,
    ResponseKind.REGULARIZED: _engine.RESP_REGULARIZED,
    ResponseKind.EXPONENTIAL: _engine.RESP_EXPONENTIAL,
    ResponseKind.METROPOLIS: _engine.RESP_METROPOLIS,
    ResponseKind.AFFINE: _engine.RESP_AFFINE,
}


def rule_codes(rule: RateRule) -> tuple:
    F = rule.response
    kappa = F.kappa if np.isfinite(F.kappa) else 0.0
    return (_FAMILY_CODES[rule.family], _RESPONSE_CODES[F.kind], float(kappa),
            float(F.a), float(F.b))


def child_seed(seed: int, replica: int) -> np.random.SeedSequence:
    """Independent stream for replica ``replica`` of a run seeded with ``seed``."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replica),))


class RateBoundError(RuntimeError):
    pass


@dataclass(frozen=True)
class LatticeDomain:
    """Agents on the nodes of ``lattice`` interacting through Kac weights of ``kernel``.

    ``gamma`` is the lattice spacing.  For fixed boundaries the lattice grid's
    ``active`` box is ``Lambda``; the remaining sites form the frozen boundary and
    must cover the kernel support of every active site.
    """

    lattice: Grid
    kernel: Kernel

    def __post_init__(self):
        g = self.lattice
        if not np.allclose(g.spacing, g.spacing[0]):
            raise ConfigurationError("lattice spacing must be equal on all axes")
        if g.ndim != self.kernel.dim:
            raise ConfigurationError("kernel and lattice dimensions differ")
        if not g.periodic_bc:
            if g.active is None:
                raise ConfigurationError("fixed-boundary lattices need an active region")
            r = self.weights.truncation_radius
            for (lo, hi), (alo, ahi) in zip(zip(g.lower, g.upper), g.active):
                if alo - lo < r - 1e-12 or hi - ahi < r - 1e-12:
                    raise ConfigurationError(
                        f"frozen boundary is thinner than the kernel radius {r:.4g}")

    @classmethod
    def torus(cls, kernel: Kernel, n: int, lower: float = -np.pi, upper: float = np.pi) -> "LatticeDomain":
        return cls(Grid.periodic(n, lower, upper, dim=kernel.dim), kernel)

    @classmethod
    def fixed(cls, kernel: Kernel, active, sites_per_unit: float, margin: float | None = None) -> "LatticeDomain":
        """Box ``Gamma = Lambda + margin`` around the active interval(s) ``Lambda``.

        ``margin`` defaults to the kernel truncation radius (``Gamma`` is the union of
        balls of that radius around ``Lambda``, up to the box hull).
        """
        act = np.asarray(active, dtype=float).reshape(-1, 2)
        if margin is None:
            margin = kernel.cutoff()
        gamma = 1.0 / sites_per_unit
        margin = np.ceil(margin / gamma - 1e-9) * gamma
        lower = act[:, 0] - margin
        upper = act[:, 1] + margin
        shape = tuple(int(round((hi - lo) / gamma)) for lo, hi in zip(lower, upper))
        return cls(Grid(shape, tuple(lower), tuple(upper), "fixed", act), kernel)

    @property
    def gamma(self) -> float:
        return self.lattice.spacing[0]

    @property
    def periodic(self) -> bool:
        return self.lattice.periodic_bc

    @property
    def box(self) -> tuple:
        shape = self.lattice.shape
        return (shape[0], shape[1] if len(shape) > 1 else 1)

    @property
    def num_sites(self) -> int:
        return int(np.prod(self.lattice.shape))

    @property
    def weights(self) -> DiscreteKernel:
        return _kac_cached(self.kernel, self.gamma, self.lattice.shape[0], self.periodic)

    def active_sites(self) -> np.ndarray:
        return np.flatnonzero(self.lattice.active_mask().ravel())

    def frozen_sites(self) -> np.ndarray:
        return np.flatnonzero(~self.lattice.active_mask().ravel())

    def positions(self) -> np.ndarray:
        """Mesoscopic positions ``gamma x`` of all sites, shape ``(num_sites, d)``."""
        return np.stack([c.ravel() for c in self.lattice.coords()], axis=1)

    def engine_offsets(self):
        z, w = self.weights.offsets()
        dz1 = z[:, 0].astype(np.int64)
        dz2 = (z[:, 1] if z.shape[1] > 1 else np.zeros_like(z[:, 0])).astype(np.int64)
        return dz1, dz2, np.ascontiguousarray(w, dtype=float)


_KAC_CACHE: dict = {}


def _kac_cached(kernel, gamma, n, periodic):
    key = (kernel, round(gamma, 15), n, periodic)
    if key not in _KAC_CACHE:
        if len(_KAC_CACHE) > 64:
            _KAC_CACHE.clear()
        _KAC_CACHE[key] = kac_discretize(kernel, gamma, n, periodic)
    return _KAC_CACHE[key]


@dataclass
class LatticeState:
    """Configuration ``sigma`` plus the cached local fields ``w(x, sigma, l)``."""

    domain: LatticeDomain
    sigma: np.ndarray
    num_strategies: int
    field: np.ndarray = field(default=None, repr=False)
    time: float = 0.0

    def __post_init__(self):
        self.sigma = np.ascontiguousarray(self.sigma, dtype=np.int64).ravel()
        if self.sigma.size != self.domain.num_sites:
            raise ValueError("configuration size does not match the lattice")
        if self.sigma.min() < 0 or self.sigma.max() >= self.num_strategies:
            raise ValueError("strategy index out of range")
        if self.field is None:
            self.field = self.recompute_field()

    def recompute_field(self) -> np.ndarray:
        n1, n2 = self.domain.box
        dz1, dz2, w = self.domain.engine_offsets()
        return _engine.full_field(self.sigma, self.num_strategies, n1, n2,
                                  self.domain.periodic, dz1, dz2, w)

    def field_drift(self) -> float:
        """Max deviation between the incremental cache and a full recomputation."""
        return float(np.abs(self.field - self.recompute_field()).max())

    def eta(self) -> np.ndarray:
        """Global strategy histogram over the active sites."""
        act = self.domain.active_sites()
        return np.bincount(self.sigma[act], minlength=self.num_strategies) / act.size

    def copy(self) -> "LatticeState":
        return LatticeState(self.domain, self.sigma.copy(), self.num_strategies,
                            self.field.copy(), self.time)

    def flip(self, x: int, k: int) -> None:
        n1, n2 = self.domain.box
        dz1, dz2, w = self.domain.engine_offsets()
        _engine.flip(self.sigma, self.field, int(x), int(k), n1, n2,
                     self.domain.periodic, dz1, dz2, w)


def _profile_at_sites(profile, domain: LatticeDomain) -> np.ndarray:
    """Per-site probability vectors ``(num_sites, S)`` from a profile."""
    if isinstance(profile, DensityField):
        cells = site_cells(domain, profile.grid)
        vals = profile.values.reshape(profile.num_strategies, -1)
        return vals[:, cells].T
    if callable(profile):
        pos = domain.positions()
        return np.asarray(profile(*pos.T), dtype=float).reshape(-1, pos.shape[0]).T
    rho = np.asarray(profile, dtype=float)
    return np.broadcast_to(rho, (domain.num_sites, rho.size))


def sample_initial(profile, domain: LatticeDomain, seed) -> LatticeState:
    """Product measure with slowly varying parameter: site ``x`` is ``i`` w.p. ``f(gamma x, i)``.

    ``profile`` is a :class:`DensityField` (piecewise constant on its cells), a
    callable of the coordinates returning ``(S, n)`` probabilities, or a constant
    probability vector.
    """
    probs = _profile_at_sites(profile, domain)
    if probs.min() < -1e-12 or np.abs(probs.sum(axis=1) - 1.0).max() > 1e-9:
        raise SimplexError("initial profile is not simplex valued")
    rng = np.random.default_rng(seed)
    cum = np.cumsum(np.clip(probs, 0.0, None), axis=1)
    u = rng.random(probs.shape[0]) * cum[:, -1]
    sigma = (u[:, None] >= cum).sum(axis=1)
    return LatticeState(domain, sigma, probs.shape[1])


def site_rate(state: LatticeState, x: int, k: int, rule: RateRule, game: Game) -> float:
    """Microscopic rate ``c(x, sigma, k)`` from the cached local field."""
    m = state.field[x]
    return mean_rate(rule, int(state.sigma[x]), k, game.payoffs(m), m)


@dataclass
class Trajectory:
    times: np.ndarray
    sites: np.ndarray
    strategies: np.ndarray
    final: LatticeState
    candidates: int = 0
    accepted: int = 0
    bound: float = 0.0
    snapshots: list = field(default_factory=list)

    @property
    def acceptance(self) -> float:
        return self.accepted / self.candidates if self.candidates else 0.0


def run(state: LatticeState, rule: RateRule, game: Game, t_end: float, seed,
        M: float | None = None, snapshot_times=(), snapshot_grid: Grid | None = None,
        buffer: int = 1 << 16) -> Trajectory:
    """Advance ``state`` in place by ``t_end`` time units with exact thinning.

    ``M`` defaults to :func:`~spatial_egt.game.rate_bound`.  When
    ``snapshot_grid`` is given, the empirical measure is recorded at each
    ``snapshot_times`` entry (relative to the start).
    """
    if t_end < 0:
        raise ValueError(f"t_end must be nonnegative, got {t_end}")
    if state.num_strategies != game.num_strategies:
        raise ConfigurationError("state and game strategy counts differ")
    if M is None:
        M = rate_bound(rule, game)
    rng = np.random.default_rng(seed)
    n1, n2 = state.domain.box
    dz1, dz2, w = state.domain.engine_offsets()
    active = state.domain.active_sites().astype(np.int64)
    codes = rule_codes(rule)
    A = np.ascontiguousarray(game.payoff)
    stats = np.zeros(3, dtype=np.int64)

    wanted = {float(s) for s in snapshot_times if 0 <= s <= t_end}
    stops = sorted(wanted)
    if not stops or stops[-1] < t_end:
        stops.append(float(t_end))
    times, sites, strats, snaps = [], [], [], []
    t = 0.0
    for stop in stops:
        while True:
            ev_t = np.empty(buffer)
            ev_x = np.empty(buffer, dtype=np.int64)
            ev_k = np.empty(buffer, dtype=np.int64)
            status, t, n_ev, bad = _engine.run_thinning(
                state.sigma, state.field, active, n1, n2, state.domain.periodic,
                dz1, dz2, w, A, *codes, float(M), t, stop, rng, ev_t, ev_x, ev_k, stats)
            times.append(ev_t[:n_ev] + state.time)
            sites.append(ev_x[:n_ev])
            strats.append(ev_k[:n_ev])
            if status == _engine.STATUS_BOUND_VIOLATED:
                raise RateBoundError(f"rate {bad:.6g} exceeds the thinning bound M={M:.6g}")
            if status == _engine.STATUS_DONE:
                break
        if snapshot_grid is not None and stop in wanted:
            snaps.append((state.time + stop, empirical(state, snapshot_grid)))
    state.time += t_end
    if stats[0]:
        log.debug("thinning: %d candidates, %d accepted (%.1f%%), %d null",
                  stats[0], stats[1], 100.0 * stats[1] / stats[0], stats[2])
    return Trajectory(np.concatenate(times), np.concatenate(sites), np.concatenate(strats),
                      state, int(stats[0]), int(stats[1]), float(M), snaps)


def cell_map(fine: Grid, coarse: Grid) -> np.ndarray:
    """Flat index of the ``coarse`` cell containing each node of ``fine``.

    Both grids must cover the same box with the same boundary type.  Periodic
    cells are centered on the coarse nodes; fixed-boundary cells are the
    coarse grid's own cells.
    """
    if fine.bc != coarse.bc or not np.allclose(fine.lower, coarse.lower) or not np.allclose(fine.upper, coarse.upper):
        raise ValueError("coarse grid must cover the same box as the fine grid")
    idx = []
    for n, N in zip(fine.shape, coarse.shape):
        j = np.arange(n)
        if n % N == 0:
            m = n // N
            c = (j + m // 2) // m if coarse.periodic_bc else j // m
        else:
            ratio = N / n
            c = np.floor(j * ratio + 0.5).astype(int) if coarse.periodic_bc else np.floor((j + 0.5) * ratio).astype(int)
        idx.append(c % N)
    mesh = np.meshgrid(*idx, indexing="ij")
    return np.ravel_multi_index(tuple(m.ravel() for m in mesh), coarse.shape)


def site_cells(domain: LatticeDomain, grid: Grid) -> np.ndarray:
    """Index (flattened) of the coarse cell of ``grid`` containing each lattice site."""
    return cell_map(domain.lattice, grid)


def coarsen(field_: DensityField, grid: Grid) -> DensityField:
    """Block averages of a fine field over the cells of ``grid``."""
    cells = cell_map(field_.grid, grid)
    S = field_.num_strategies
    ncell = int(np.prod(grid.shape))
    sums = np.zeros((S, ncell))
    for i in range(S):
        sums[i] = np.bincount(cells, weights=field_.values[i].ravel(), minlength=ncell)
    occ = np.bincount(cells, minlength=ncell).astype(float)
    return DensityField(grid, (sums / np.where(occ > 0, occ, 1.0)).reshape((S,) + grid.shape), field_.time)


@dataclass
class EmpiricalMeasure:
    """Cell densities of the configuration on a coarse grid plus the global histogram.

    ``density`` is a :class:`DensityField` of block averages.  ``normalization`` is
    the mass the measure assigns to the whole box (``1`` on the torus; ``1/|Gamma|``
    per unit area for fixed boundaries, matching the limit ``f/|Gamma|``).
    """

    density: DensityField
    eta: np.ndarray
    normalization: float


def empirical(state: LatticeState, grid: Grid) -> EmpiricalMeasure:
    cells = site_cells(state.domain, grid)
    S = state.num_strategies
    ncell = int(np.prod(grid.shape))
    counts = np.zeros((S, ncell))
    np.add.at(counts, (state.sigma, cells), 1.0)
    occupancy = counts.sum(axis=0)
    dens = counts / np.where(occupancy > 0, occupancy, 1.0)
    field_ = DensityField(grid, dens.reshape((S,) + grid.shape), state.time)
    norm = 1.0 if state.domain.periodic else 1.0 / float(np.prod(grid.lengths))
    return EmpiricalMeasure(field_, state.eta(), norm)


@dataclass
class RateLimitReport:
    """Sup discrepancies between lattice rates and their limiting expressions.

    ``sup_empirical[j]`` compares against ``c(gamma x, sigma(x), k, pi)`` with the
    continuous kernel convolved against the empirical measure (the exact C1
    quantity); ``sup_profile[j]`` compares against the rate on the sampling profile
    ``f`` itself, which also contains the local-field fluctuations.
    """

    gammas: list
    sup_empirical: list
    sup_profile: list


def rate_limit_check(rule: RateRule, game: Game, domains, profile, seed: int = 0,
                     n_configs: int = 4, n_sites: int = 2000) -> RateLimitReport:
    """Measure how fast lattice rates approach their mesoscopic limit.

    ``domains`` is a sequence of :class:`LatticeDomain` with decreasing ``gamma``;
    ``profile`` is a callable ``f(*coords) -> (S, n)`` used for sampling and for the
    limiting rate on the profile.
    """
    gammas, sup_emp, sup_prof = [], [], []
    ss = np.random.SeedSequence(seed)
    for dom, child in zip(domains, ss.spawn(len(domains))):
        rng = np.random.default_rng(child)
        pos = dom.positions()
        act = dom.active_sites()
        # J convolved with the empirical measure is the un-normalized Kac sum
        raw_scale = dom.weights.raw_sum
        prof = np.asarray(profile(*pos.T), dtype=float).reshape(-1, pos.shape[0])
        jf = _profile_convolution(dom, prof)
        e_sup, p_sup = 0.0, 0.0
        for c in range(n_configs):
            st = sample_initial(profile, dom, rng.integers(2 ** 63))
            xs = rng.choice(act, size=min(n_sites, act.size), replace=False)
            m_micro = st.field[xs].T
            m_emp = m_micro * raw_scale
            i = st.sigma[xs]
            c_micro = rate_matrix(rule, game.payoffs(m_micro), m_micro)
            c_emp = rate_matrix(rule, game.payoffs(m_emp), m_emp)
            c_prof = rate_matrix(rule, game.payoffs(jf[:, xs]), jf[:, xs])
            cols = np.arange(xs.size)
            e_sup = max(e_sup, float(np.abs(c_micro[i, :, cols] - c_emp[i, :, cols]).max()))
            p_sup = max(p_sup, float(np.abs(c_micro[i, :, cols] - c_prof[i, :, cols]).max()))
        gammas.append(dom.gamma)
        sup_emp.append(e_sup)
        sup_prof.append(p_sup)
    return RateLimitReport(gammas, sup_emp, sup_prof)


def _profile_convolution(dom: LatticeDomain, prof: np.ndarray) -> np.ndarray:
    """``J * f`` at every site, using the lattice weights as quadrature."""
    shape = dom.lattice.shape
    vals = prof.reshape((prof.shape[0],) + shape)
    Wd = dom.weights
    axes = tuple(range(1, len(shape) + 1))
    if dom.periodic:
        kern = np.fft.fftn(Wd.circular(shape))
        out = np.fft.ifftn(np.fft.fftn(vals, axes=axes) * kern[None], axes=axes).real
    else:
        out = np.stack([signal.fftconvolve(v, Wd.weights, mode="same") for v in vals])
    return out.reshape(prof.shape)
