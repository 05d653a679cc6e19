# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Mean-field ODE and the lumped chain
#
# With a uniform kernel the strategy histogram is itself a Markov chain.  Its
# paths concentrate on the ODE as the number of agents grows.

# %%
import numpy as np
import matplotlib.pyplot as plt

from spatial_egt.game import Game, RateRule
from spatial_egt.meanfield import AggregateState, deviation_harness, simulate_lumped, solve_ode

game = Game.coordination(5.0, 5.0)
rule = RateRule.logit()
ode = solve_ode([0.9, 0.1], rule, game, 2.0)
t = np.linspace(0, 2, 200)
plt.plot(t, ode(t)[0], "k", lw=2, label="ODE")
for n in (16, 256):
    path = simulate_lumped(AggregateState.from_density([0.9, 0.1], n), rule, game, 2.0,
                           np.random.SeedSequence(n))
    plt.step(path.times, path.eta[:, 0], where="post", label=f"{n} agents")
plt.legend();

# %% [markdown]
# Fraction of paths leaving an `eps`-tube around the ODE.

# %%
tab = deviation_harness(rule, game, [0.9, 0.1], [16, 32, 64], T=2.0, eps=0.05, replicas=200, seed=7)
for row in tab.rows:
    print(row.n, row.exceedance)
print("log-fit slope", tab.slope)
