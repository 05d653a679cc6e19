"""Normal-form games, response functions and strategy-revision rate rules.

Everything here is shared by the three tiers (lattice process, integro-differential
equations, mean-field ODEs).  Rates are evaluated in vectorized form: payoff and
neighbor-weight arrays carry the strategy index on axis 0 and any number of
trailing spatial axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import expit


class ConfigurationError(ValueError):
    """Raised for inconsistent game / rule / dynamic combinations."""


class NotCoordinationGame(ConfigurationError):
    pass


@dataclass(frozen=True)
class Game:
    """Symmetric normal-form game with payoff ``a(i, j)`` for ``i`` against ``j``."""

    payoff: np.ndarray

    def __post_init__(self):
        a = np.array(self.payoff, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigurationError(f"payoff must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise ConfigurationError("a game needs at least two strategies")
        if not np.all(np.isfinite(a)):
            raise ConfigurationError("payoff entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "payoff", a)

    @property
    def num_strategies(self) -> int:
        return self.payoff.shape[0]

    @classmethod
    def coordination(cls, a11: float, a22: float) -> "Game":
        return cls(np.array([[a11, 0.0], [0.0, a22]]))

    def payoffs(self, field: np.ndarray) -> np.ndarray:
        """Payoff vector ``sum_l a(k, l) m(l)`` for a local field ``m`` (strategy axis first)."""
        return np.tensordot(self.payoff, field, axes=(1, 0))


@dataclass(frozen=True)
class CoordinationParams:
    zeta: float
    beta: float


def coordination_params(g: Game) -> CoordinationParams:
    """Mixed equilibrium ``zeta = a22/(a11+a22)`` and payoff scale ``beta = a11+a22``."""
    a = g.payoff
    if g.num_strategies != 2:
        raise NotCoordinationGame("coordination parameters need exactly two strategies")
    if a[0, 1] != 0.0 or a[1, 0] != 0.0:
        raise NotCoordinationGame("off-diagonal payoffs must be zero (normalized form)")
    if a[0, 0] <= 0.0 or a[1, 1] <= 0.0:
        raise NotCoordinationGame("diagonal payoffs must be positive")
    beta = a[0, 0] + a[1, 1]
    return CoordinationParams(zeta=a[1, 1] / beta, beta=beta)


class ResponseKind(str, Enum):
    POSITIVE_PART = "positive_part"
    REGULARIZED = "regularized"
    EXPONENTIAL = "exponential"
    METROPOLIS = "metropolis"
    AFFINE = "affine"


_EXP_CAP = 700.0


@dataclass(frozen=True)
class ResponseFunction:
    """Nonnegative response ``F`` applied to a payoff (or payoff difference).

    ``kappa`` is used by the regularized variant ``F(s) = log(exp(kappa s) + 1)/kappa``;
    ``kappa = inf`` is accepted and means the positive part.  The affine variant is
    ``max(a + b s, 0)``.
    """

    kind: ResponseKind = ResponseKind.POSITIVE_PART
    kappa: float = np.inf
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ResponseKind(self.kind))
        if self.kind is ResponseKind.REGULARIZED and not self.kappa > 0:
            raise ConfigurationError(f"kappa must be positive, got {self.kappa}")

    @classmethod
    def regularized(cls, kappa: float) -> "ResponseFunction":
        if np.isinf(kappa):
            return cls(ResponseKind.POSITIVE_PART)
        return cls(ResponseKind.REGULARIZED, kappa=float(kappa))

    def __call__(self, s):
        return eval_response(self, s)

    def derivative(self, s):
        """Derivative ``F'(s)``; the positive part uses 1/2 at the kink (the kappa limit)."""
        s = np.asarray(s, dtype=float)
        if self.kind is ResponseKind.REGULARIZED:
            return expit(self.kappa * s)
        if self.kind is ResponseKind.POSITIVE_PART:
            return np.heaviside(s, 0.5)
        if self.kind is ResponseKind.EXPONENTIAL:
            return np.exp(np.minimum(s, _EXP_CAP))
        if self.kind is ResponseKind.METROPOLIS:
            return np.where(s < 0, np.exp(np.minimum(s, 0.0)), 0.0)
        return np.where(self.a + self.b * s > 0, self.b, 0.0)


def eval_response(F: ResponseFunction, s):
    """Evaluate ``F(s)``; exponentials never overflow for finite ``s``."""
    s = np.asarray(s, dtype=float)
    kind = F.kind
    if kind is ResponseKind.POSITIVE_PART:
        out = np.maximum(s, 0.0)
    elif kind is ResponseKind.REGULARIZED:
        # max(s,0) + log1p(exp(-kappa|s|))/kappa: exact rewrite of the softplus,
        # and the symmetric log term cancels in F(s) - F(-s).
        out = np.maximum(s, 0.0) + np.log1p(np.exp(-F.kappa * np.abs(s))) / F.kappa
    elif kind is ResponseKind.EXPONENTIAL:
        out = np.exp(np.minimum(s, _EXP_CAP))
    elif kind is ResponseKind.METROPOLIS:
        out = np.exp(np.minimum(s, 0.0))
    else:
        out = np.maximum(F.a + F.b * s, 0.0)
    return out[()] if out.ndim == 0 else out


class RateFamily(str, Enum):
    TARGETING_INNOVATIVE = "targeting_innovative"
    COMPARING_INNOVATIVE = "comparing_innovative"
    TARGETING_NON_INNOVATIVE = "targeting_non_innovative"
    COMPARING_NON_INNOVATIVE = "comparing_non_innovative"
    LOGIT = "logit"


@dataclass(frozen=True)
class RateRule:
    family: RateFamily
    response: ResponseFunction = field(default_factory=ResponseFunction)

    def __post_init__(self):
        try:
            object.__setattr__(self, "family", RateFamily(self.family))
        except ValueError:
            raise ConfigurationError(f"unknown rate family {self.family!r}") from None

    @classmethod
    def logit(cls) -> "RateRule":
        return cls(RateFamily.LOGIT)

    @classmethod
    def imitative(cls, kappa: float = np.inf) -> "RateRule":
        """Comparing, non-innovative imitation ``w_k F_kappa(u_k - u_i)``."""
        return cls(RateFamily.COMPARING_NON_INNOVATIVE, ResponseFunction.regularized(kappa))

    @classmethod
    def metropolis(cls) -> "RateRule":
        return cls(RateFamily.COMPARING_INNOVATIVE, ResponseFunction(ResponseKind.METROPOLIS))

    @property
    def innovative(self) -> bool:
        return self.family in (RateFamily.TARGETING_INNOVATIVE,
                               RateFamily.COMPARING_INNOVATIVE,
                               RateFamily.LOGIT)


def softmax(u: np.ndarray) -> np.ndarray:
    """Softmax over axis 0 with max-subtraction."""
    z = u - u.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def rate_matrix(rule: RateRule, payoffs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """All switching rates ``c[i, k, ...]`` from strategy ``i`` to ``k``.

    ``payoffs[k, ...]`` is the payoff of strategy ``k`` against the local field and
    ``weights[k, ...]`` the probability of sampling a ``k``-neighbor.  Diagonal
    entries are the formula's value at ``k = i``; they are null events and cancel
    in every input-output balance.
    """
    payoffs = np.asarray(payoffs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    fam = rule.family
    F = rule.response
    if fam is RateFamily.LOGIT:
        p = softmax(payoffs)
        return np.broadcast_to(p[None], (p.shape[0],) + p.shape).copy()
    if fam in (RateFamily.TARGETING_INNOVATIVE, RateFamily.TARGETING_NON_INNOVATIVE):
        r = eval_response(F, payoffs)
        c = np.broadcast_to(np.asarray(r)[None], (payoffs.shape[0],) + payoffs.shape).copy()
    else:
        diff = payoffs[None, :] - payoffs[:, None]
        c = np.asarray(eval_response(F, diff))
    if fam in (RateFamily.TARGETING_NON_INNOVATIVE, RateFamily.COMPARING_NON_INNOVATIVE):
        c = c * weights[None, :]
    return c


def mean_rate(rule: RateRule, i: int, k: int, payoff_vector, neighbor_weights) -> float:
    """Limiting rate ``c(u, i, k, .)`` for one pair of strategies."""
    payoff_vector = np.asarray(payoff_vector, dtype=float)
    neighbor_weights = np.asarray(neighbor_weights, dtype=float)
    fam = rule.family
    if fam is RateFamily.LOGIT:
        return float(softmax(payoff_vector)[k])
    if fam in (RateFamily.TARGETING_INNOVATIVE, RateFamily.TARGETING_NON_INNOVATIVE):
        r = float(eval_response(rule.response, payoff_vector[k]))
    else:
        r = float(eval_response(rule.response, payoff_vector[k] - payoff_vector[i]))
    if fam in (RateFamily.TARGETING_NON_INNOVATIVE, RateFamily.COMPARING_NON_INNOVATIVE):
        r *= neighbor_weights[k]
    return r


def _simplex_samples(num_strategies: int, n_random: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    S = num_strategies
    pts = [np.eye(S)]
    if S == 2:
        t = np.linspace(0.0, 1.0, 2001)
        pts.append(np.stack([t, 1 - t], axis=1))
    else:
        t = np.linspace(0.0, 1.0, 101)
        for i in range(S):
            for j in range(i + 1, S):
                e = np.zeros((t.size, S))
                e[:, i] = t
                e[:, j] = 1 - t
                pts.append(e)
    pts.append(rng.dirichlet(np.ones(S), size=n_random))
    pts.append(rng.dirichlet(0.2 * np.ones(S), size=n_random))
    return np.concatenate(pts, axis=0)


def rate_bound(rule: RateRule, game: Game, safety: float = 1.05,
               n_random: int = 4000, seed: int = 0) -> float:
    """Uniform bound ``M`` on all rates: sampled supremum over local fields times ``safety``."""
    m = _simplex_samples(game.num_strategies, n_random, seed).T
    c = rate_matrix(rule, game.payoffs(m), m)
    sup = float(c.max())
    if sup <= 0.0:
        return 1.0
    return safety * sup


def lipschitz_estimate(rule: RateRule, game: Game, n_pairs: int = 4000,
                       delta: float = 1e-3, seed: int = 0) -> float:
    """Finite-difference estimate of the Lipschitz constant of the rates in the field (L1)."""
    rng = np.random.default_rng(seed)
    S = game.num_strategies
    m1 = rng.dirichlet(np.ones(S), size=n_pairs).T
    step = rng.dirichlet(np.ones(S), size=n_pairs).T - m1
    m2 = m1 + delta * step
    c1 = rate_matrix(rule, game.payoffs(m1), m1)
    c2 = rate_matrix(rule, game.payoffs(m2), m2)
    dist = np.abs(m1 - m2).sum(axis=0)
    ratio = np.abs(c1 - c2).max(axis=(0, 1)) / dist
    return float(ratio.max())
