# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Games, revision rates and interaction kernels
#
# A two-strategy coordination game is summarized by two numbers: the mixed
# equilibrium `zeta` and the payoff scale `beta`.

# %%
import numpy as np
import matplotlib.pyplot as plt

from spatial_egt.game import Game, RateRule, ResponseFunction, coordination_params, rate_bound, rate_matrix
from spatial_egt.kernels import Kernel, kac_discretize

game = Game.coordination(2.0, 1.0)
params = coordination_params(game)
params

# %% [markdown]
# The regularized response `F_kappa` tends to `max(s, 0)` as `kappa` grows and
# satisfies `F(s) - F(-s) = s` for every `kappa`.

# %%
s = np.linspace(-2, 2, 401)
for kappa in (1, 5, 20):
    plt.plot(s, ResponseFunction.regularized(kappa)(s), label=f"kappa={kappa}")
plt.plot(s, np.maximum(s, 0), "k--", lw=0.8)
plt.legend();

# %% [markdown]
# Switching rates at one site.  The logit rows are a softmax of the payoffs;
# the imitative rule only moves toward strategies that are present nearby.

# %%
u = game.payoffs(np.array([0.4, 0.6]))
w = np.array([0.4, 0.6])
print(rate_matrix(RateRule.logit(), u, w))
print(rate_matrix(RateRule.imitative(20.0), u, w))
print("rate bound M:", rate_bound(RateRule.imitative(20.0), game))

# %% [markdown]
# Kac weights `gamma^d J(gamma z)` keep total mass one while the range grows
# like `1/gamma`.

# %%
J = Kernel.gaussian(2.0)
for gamma in (1 / 16, 1 / 64):
    Wd = kac_discretize(J, gamma)
    z = (np.arange(Wd.weights.size) - Wd.center[0]) * gamma
    plt.plot(z, Wd.weights / gamma, label=f"gamma=1/{round(1 / gamma)}, mass {Wd.total:.6f}")
plt.legend();
