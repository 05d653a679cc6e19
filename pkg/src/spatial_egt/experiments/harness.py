"""Replica harnesses comparing tiers: lattice vs IDE, lattice vs lumped chain."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .. import micro
from ..game import Game, RateRule
from ..grid import DensityField, Grid
from ..ide import IdeSystem, integrate
from ..kernels import Kernel
from ..meanfield import AggregateState, simulate_lumped


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class ConvergenceRow:
    gamma: float
    sites: int
    mean_l1: float
    std_l1: float
    replicas: int


def micro_meso_convergence(game: Game, rule: RateRule, system: IdeSystem, profile, gammas,
                           coarse_cells: int, t_end: float, replicas: int, seed: int,
                           threads: int = 1) -> list:
    """Ensemble-mean L1 distance between coarse-grained lattice densities and the IDE.

    ``system`` is the IDE on a fine periodic grid; ``profile(*coords)`` the
    strategy-1 initial density used for both tiers.  For each ``gamma`` the torus
    has ``round(L / gamma)`` sites per axis, so the lattice spacing is the
    closest value to ``gamma`` that tiles the box.  Both tiers are averaged over
    the cells of a ``coarse_cells`` grid; the distance is the
    domain-normalized ``mean_cells sum_i |pi - f|``, which lies in ``[0, 2]``.
    """
    fine = system.grid
    prof2 = lambda *x: np.stack([profile(*x), 1.0 - profile(*x)])
    f0 = DensityField(fine, prof2(*fine.coords()))
    ref_fine = integrate(system, f0, t_end)[-1]
    coarse = Grid((coarse_cells,) * fine.ndim, fine.lower, fine.upper, "periodic")
    ref = micro.coarsen(ref_fine, coarse).values
    rows = []
    for gi, gamma in enumerate(gammas):
        n = int(round(fine.lengths[0] / gamma))
        lattice = Grid((n,) * fine.ndim, fine.lower, fine.upper, "periodic")
        dom = micro.LatticeDomain(lattice, system.kernel)

        def one(r, dom=dom, gi=gi):
            ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(gi, r))
            s_init, s_run = ss.spawn(2)
            st = micro.sample_initial(prof2, dom, s_init)
            micro.run(st, rule, game, t_end, s_run)
            emp = micro.empirical(st, coarse).density.values
            return float(np.abs(emp - ref).sum(axis=0).mean())

        l1 = np.asarray(_map(one, range(replicas), threads))
        rows.append(ConvergenceRow(float(dom.gamma), n, float(l1.mean()), float(l1.std(ddof=1)) if replicas > 1 else 0.0,
                                   replicas))
    return rows


@dataclass
class LumpabilityResult:
    micro_eta: np.ndarray
    lumped_eta: np.ndarray
    statistic: float
    pvalue: float


def lumpability_test(game: Game, rule: RateRule, sites: int, rho0, t_end: float, replicas: int,
                     seed: int, threads: int = 1) -> LumpabilityResult:
    """Two-sample KS test of ``eta(1)`` at ``t_end``: uniform-kernel lattice vs lumped chain.

    Both start from the same counts (lattice agents placed by a random
    permutation, which is irrelevant under uniform interaction).
    """
    kernel = Kernel.uniform(1)
    dom = micro.LatticeDomain.torus(kernel, sites)
    start = AggregateState.from_density(rho0, sites)

    def lattice(r):
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(0, r))
        s_perm, s_run = ss.spawn(2)
        sigma = np.repeat(np.arange(start.counts.size), start.counts)
        sigma = np.random.default_rng(s_perm).permutation(sigma)
        st = micro.LatticeState(dom, sigma, game.num_strategies)
        micro.run(st, rule, game, t_end, s_run)
        return st.eta()[0]

    def lumped(r):
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(1, r))
        path = simulate_lumped(start, rule, game, t_end, ss)
        return path.eta[-1, 0]

    a = np.asarray(_map(lattice, range(replicas), threads))
    b = np.asarray(_map(lumped, range(replicas), threads))
    res = stats.ks_2samp(a, b)
    return LumpabilityResult(a, b, float(res.statistic), float(res.pvalue))
