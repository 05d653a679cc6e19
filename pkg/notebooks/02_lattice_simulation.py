# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Lattice process
#
# Exact simulation of the agent-based chain by thinning, then coarse-graining
# to compare with the deterministic density.

# %%
import numpy as np
import matplotlib.pyplot as plt

from spatial_egt import micro
from spatial_egt.game import Game, RateRule
from spatial_egt.grid import DensityField, Grid
from spatial_egt.ide import Dynamic, IdeSystem, integrate
from spatial_egt.kernels import Kernel

game = Game.coordination(2.0, 1.0)
rule = RateRule.logit()
J = Kernel.gaussian(2.0)
profile = lambda x: np.stack([0.5 + 0.3 * np.cos(x), 0.5 - 0.3 * np.cos(x)])

# %%
dom = micro.LatticeDomain.torus(J, 804)
state = micro.sample_initial(profile, dom, micro.child_seed(1, 0))
traj = micro.run(state, rule, game, 1.0, micro.child_seed(1, 1))
print(f"gamma={dom.gamma:.5f}, events={traj.accepted}, acceptance={traj.acceptance:.3f}")

# %%
grid = Grid.periodic(512)
ide = IdeSystem(game, J, grid, Dynamic.LOGIT, rule)
f1 = integrate(ide, DensityField(grid, profile(grid.coords()[0])), 1.0)[-1]

coarse = Grid.periodic(32)
emp = micro.empirical(state, coarse).density
ref = micro.coarsen(f1, coarse)
xc = coarse.axes()[0]
plt.step(xc, emp.p, where="mid", label="lattice, coarse-grained")
plt.plot(grid.axes()[0], f1.p, label="IDE")
plt.legend();
print("L1 distance:", np.abs(emp.values - ref.values).sum(axis=0).mean())
