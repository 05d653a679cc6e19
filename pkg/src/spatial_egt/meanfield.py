"""Mean-field tier: the lumped aggregate chain and the mean-field ODE."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import _engine
from .game import Game, RateRule, rate_matrix
from .grid import SimplexError
from .ide import _rk4
from .micro import rule_codes


@dataclass
class AggregateState:
    """Strategy counts of ``num_agents`` agents; ``eta = counts / num_agents``."""

    counts: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.counts)
        if not np.issubdtype(c.dtype, np.integer):
            if not np.allclose(c, np.round(c)):
                raise ValueError("aggregate counts must be integers")
            c = np.round(c)
        self.counts = c.astype(np.int64)
        if self.counts.min() < 0 or self.counts.sum() == 0:
            raise ValueError("counts must be nonnegative with a positive total")

    @classmethod
    def from_density(cls, rho, num_agents: int) -> "AggregateState":
        """Nearest point of the discrete simplex to ``rho`` (largest-remainder rounding)."""
        rho = np.asarray(rho, dtype=float)
        raw = rho * num_agents
        counts = np.floor(raw).astype(np.int64)
        short = num_agents - counts.sum()
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
        return cls(counts)

    @property
    def num_agents(self) -> int:
        return int(self.counts.sum())

    @property
    def eta(self) -> np.ndarray:
        return self.counts / self.num_agents


def jump_rates(state: AggregateState, rule: RateRule, game: Game) -> np.ndarray:
    """Matrix of jump rates ``n eta(j) c(j, k, eta)``; the diagonal is zero."""
    eta = state.eta
    c = rate_matrix(rule, game.payoffs(eta), eta)
    r = state.counts[:, None] * c
    np.fill_diagonal(r, 0.0)
    return r


def lumped_step(state: AggregateState, rule: RateRule, game: Game, rng) -> tuple:
    """Sample the next jump of the lumped chain.

    Returns ``(next_state, waiting_time, (j, k))``; an absorbing state returns
    ``(state, inf, None)``.
    """
    rng = np.random.default_rng(rng)
    r = jump_rates(state, rule, game)
    total = r.sum()
    if total <= 0.0:
        return state, np.inf, None
    dt = rng.exponential(1.0 / total)
    q = rng.choice(r.size, p=(r / total).ravel())
    j, k = divmod(int(q), r.shape[0])
    counts = state.counts.copy()
    counts[j] -= 1
    counts[k] += 1
    return AggregateState(counts, state.time + dt), dt, (j, k)


@dataclass
class LumpedPath:
    """Jump times and the counts just after each jump (``counts[0]`` is the start)."""

    times: np.ndarray
    counts: np.ndarray

    @property
    def eta(self) -> np.ndarray:
        return self.counts / self.counts[0].sum()

    def at(self, t) -> np.ndarray:
        """Piecewise-constant (right-continuous) value at times ``t``."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        return self.eta[np.clip(idx, 0, None)]


def simulate_lumped(state: AggregateState, rule: RateRule, game: Game, t_end: float,
                    seed, buffer: int = 1 << 16) -> LumpedPath:
    """Exact (Gillespie) path of the aggregate chain on ``[0, t_end]``."""
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    rng = np.random.default_rng(seed)
    counts = state.counts.copy()
    codes = rule_codes(rule)
    A = np.ascontiguousarray(game.payoff)
    times, js, ks = [], [], []
    t = 0.0
    while True:
        ev_t = np.empty(buffer)
        ev_j = np.empty(buffer, dtype=np.int64)
        ev_k = np.empty(buffer, dtype=np.int64)
        status, t, n_ev = _engine.run_lumped(counts, A, *codes, t, float(t_end), rng, ev_t, ev_j, ev_k)
        times.append(ev_t[:n_ev])
        js.append(ev_j[:n_ev])
        ks.append(ev_k[:n_ev])
        if status == _engine.STATUS_DONE:
            break
    j = np.concatenate(js)
    k = np.concatenate(ks)
    steps = np.zeros((j.size + 1, counts.size), dtype=np.int64)
    steps[0] = state.counts
    np.add.at(steps, (np.arange(1, j.size + 1), j), -1)
    np.add.at(steps, (np.arange(1, j.size + 1), k), 1)
    path_counts = np.cumsum(steps, axis=0)
    return LumpedPath(np.concatenate([[0.0], *times]) + state.time, path_counts)


def ode_rhs(rho, rule: RateRule, game: Game) -> np.ndarray:
    """Mean-field tendency ``sum_k c(k, i, rho) rho_k - rho_i sum_k c(i, k, rho)``."""
    rho = np.asarray(rho, dtype=float)
    c = rate_matrix(rule, game.payoffs(rho), rho)
    np.fill_diagonal(c, 0.0)
    return c.T @ rho - rho * c.sum(axis=1)


def replicator_field(rho, game: Game) -> np.ndarray:
    """``rho_i [(A rho)_i - rho . A rho]``."""
    rho = np.asarray(rho, dtype=float)
    u = game.payoff @ rho
    return rho * (u - rho @ u)


@dataclass
class OdeSolution:
    t: np.ndarray
    rho: np.ndarray
    _dense: object

    def __call__(self, t) -> np.ndarray:
        """Dense output; shape ``(S,)`` for scalar ``t`` and ``(S, len(t))`` otherwise."""
        return self._dense(t)


def solve_ode(rho0, rule: RateRule, game: Game, t_end: float, method: str = "dop853",
              dt: float = 1e-3, rtol: float = 1e-12, atol: float = 1e-13) -> OdeSolution:
    """Integrate the mean-field ODE on ``[0, t_end]``.

    ``method="dop853"`` uses an adaptive 8th-order Runge-Kutta pair with dense
    output; ``method="rk4"`` takes fixed classical Runge-Kutta steps (the same
    stepper as the spatial solver) and interpolates linearly.
    """
    rho0 = np.asarray(rho0, dtype=float)
    if rho0.min() < -1e-12 or abs(rho0.sum() - 1.0) > 1e-9:
        raise SimplexError("initial density is not in the simplex")
    fun = lambda t, y: ode_rhs(y, rule, game)
    if method == "dop853":
        sol = solve_ivp(fun, (0.0, t_end), rho0, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True)
        if not sol.success:
            raise RuntimeError(sol.message)
        return OdeSolution(sol.t, sol.y, sol.sol)
    if method != "rk4":
        raise ValueError(f"unknown ODE method {method!r}")
    n = max(1, int(np.ceil(t_end / dt - 1e-9)))
    ts = np.linspace(0.0, t_end, n + 1)
    ys = np.empty((rho0.size, n + 1))
    ys[:, 0] = rho0
    y = rho0
    for j in range(n):
        y = _rk4(lambda v: fun(0.0, v), y, ts[j + 1] - ts[j])
        ys[:, j + 1] = y

    def dense(t):
        t = np.asarray(t, dtype=float)
        out = np.stack([np.interp(t, ts, row) for row in ys])
        return out

    return OdeSolution(ts, ys, dense)


@dataclass
class DeviationRow:
    n: int
    exceedance: float
    mean_sup_deviation: float
    replicas: int


@dataclass
class DeviationTable:
    rows: list
    eps: float
    T: float
    slope: float
    intercept: float
    tail_slope: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "exceedance_fraction", "mean_sup_deviation", "replicas"])
            for r in self.rows:
                w.writerow([r.n, repr(r.exceedance), repr(r.mean_sup_deviation), r.replicas])


def sup_deviation(path: LumpedPath, ode: OdeSolution, T: float) -> float:
    """``sup_{t <= T} max_i |eta_t(i) - rho_t(i)|`` for a piecewise-constant path.

    On each holding interval the ODE side is evaluated at both ends (and at the
    midpoint as a guard against non-monotone components).
    """
    t = path.times
    keep = t <= T
    starts = t[keep]
    ends = np.append(starts[1:], T)
    eta = path.eta[keep]
    dev = 0.0
    for pts in (starts, ends, 0.5 * (starts + ends)):
        dev = max(dev, float(np.abs(eta - ode(pts).T).max()))
    return dev


def deviation_harness(rule: RateRule, game: Game, rho0, n_list, T: float, eps: float,
                      replicas: int, seed: int, dim: int = 1) -> DeviationTable:
    """Empirical ``P{sup_t ||eta^n - rho_t|| >= eps}`` for each system size.

    ``n_list`` are linear sizes; the chain has ``n**dim`` agents and starts from
    the discrete-simplex point nearest ``rho0``.  The ODE starts from the same
    point.  ``slope`` is the least-squares slope of ``log(fraction)`` against
    ``n**dim`` over all sizes with a nonzero fraction; ``tail_slope`` restricts
    the fit to fractions below one half.  Either is NaN when fewer than two sizes
    qualify.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    rows = []
    for idx, n in enumerate(n_list):
        agents = int(n) ** dim
        start = AggregateState.from_density(rho0, agents)
        ode = solve_ode(start.eta, rule, game, T)
        devs = np.empty(replicas)
        for r in range(replicas):
            rs = np.random.SeedSequence(entropy=int(seed), spawn_key=(idx, r))
            path = simulate_lumped(start, rule, game, T, rs)
            devs[r] = sup_deviation(path, ode, T)
        rows.append(DeviationRow(int(n), float(np.mean(devs >= eps)), float(devs.mean()), replicas))
    sizes = np.array([r.n ** dim for r in rows], dtype=float)
    frac = np.array([r.exceedance for r in rows])
    slope, intercept = _log_fit(sizes, frac, frac > 0)
    tail, _ = _log_fit(sizes, frac, (frac > 0) & (frac < 0.5))
    return DeviationTable(rows, eps, T, slope, intercept, tail)


def _log_fit(x, frac, ok) -> tuple:
    if ok.sum() < 2:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(x[ok], np.log(frac[ok]), 1)
    return float(slope), float(intercept)

