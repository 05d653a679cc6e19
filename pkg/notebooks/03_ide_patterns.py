# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Nonlocal equations: islands, interfaces and patterns
#
# The reduced scalar forms of the replicator and logit equations on a
# periodic grid, convolution by FFT, RK4 in time.

# %%
import numpy as np
import matplotlib.pyplot as plt

from spatial_egt.experiments import interface_metrics
from spatial_egt.game import Game
from spatial_egt.grid import DensityField, Grid
from spatial_egt.ide import Dynamic, IdeSystem, integrate, random_initial
from spatial_egt.kernels import Kernel

# %% [markdown]
# A small island of strategy 1.  With large payoffs the logit equation
# spreads it over the whole domain, the replicator equation keeps it.

# %%
game = Game.coordination(20 / 3, 10 / 3)
grid = Grid.periodic(256)
x = grid.axes()[0]
f0 = DensityField.from_p(grid, (np.abs(x) < np.pi / 6).astype(float))
for dyn in (Dynamic.REDUCED_LOGIT, Dynamic.REDUCED_REPLICATOR):
    sys_ = IdeSystem(game, Kernel.gaussian(2.0), grid, dyn, kappa=20.0)
    snaps = integrate(sys_, f0, 10.0, snapshot_times=[2.5, 5.0])
    for s in snaps:
        plt.plot(x, s.p, label=f"{dyn.value} t={s.time:g}")
plt.legend(fontsize=7);

# %% [markdown]
# Standing interfaces for a symmetric game: the replicator front is one cell
# wide while the logit front is smooth.

# %%
game = Game.coordination(5.0, 5.0)
f0 = DensityField.from_p(grid, (np.abs(x) < np.pi / 2).astype(float))
for dyn in (Dynamic.REDUCED_REPLICATOR, Dynamic.REDUCED_LOGIT):
    f = integrate(IdeSystem(game, Kernel.gaussian(2.0), grid, dyn), f0, 4.0)[-1]
    print(dyn.value, interface_metrics(f, window=(0.0, np.pi)))

# %% [markdown]
# Two-dimensional pattern from a random cosine seed.

# %%
game = Game.coordination(2 / 3, 1 / 3)
g2 = Grid.periodic(48, dim=2)
f0 = random_initial(g2, 1 / 3, np.cos(g2.coords()[0]) * np.cos(g2.coords()[1]), seed=2)
sys_ = IdeSystem(game, Kernel.gaussian(15.0, dim=2), g2, Dynamic.REDUCED_REPLICATOR, kappa=20.0)
f = integrate(sys_, f0, 11.0, dt=0.0175)[-1]
plt.imshow(f.p, origin="lower", extent=(-np.pi, np.pi, -np.pi, np.pi))
plt.colorbar();
