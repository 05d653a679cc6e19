# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Linear stability of homogeneous states
#
# Growth rate of the mode `k` is `lambda(k) = M hatJ(k) + N`, with `M`, `N` the
# partial derivatives of the reduced right-hand side at the rest point.

# %%
import numpy as np
import matplotlib.pyplot as plt

from spatial_egt import stability
from spatial_egt.game import CoordinationParams, Game, coordination_params
from spatial_egt.ide import Dynamic
from spatial_egt.kernels import Kernel

params = coordination_params(Game.coordination(2.0, 1.0))
tab = stability.dispersion(Dynamic.REDUCED_REPLICATOR, params.zeta, params, 20.0, Kernel.gaussian(20.0), K=20)
plt.axhline(0, color="k", lw=0.5)
plt.plot(tab.modes[:, 0], tab.lam, "o")
plt.xlabel("k")
print("unstable modes:", tab.unstable_modes.ravel())

# %% [markdown]
# The logit rest-point count jumps from one to three at `beta_C(zeta)`.

# %%
for zeta in (1 / 2, 1 / 3):
    print(f"zeta={zeta:.4f}  beta_C={stability.critical_beta(zeta):.5f}")
betas = np.linspace(1, 15, 57)
zetas = np.linspace(0.05, 0.95, 37)
count = np.array([[stability.stationary_homogeneous(Dynamic.REDUCED_LOGIT, CoordinationParams(z, b)).roots.size
                   for z in zetas] for b in betas])
plt.figure()
plt.contourf(zetas, betas, count)
plt.plot(zetas, [stability.critical_beta(z) for z in zetas], "w--")
plt.xlabel("zeta"); plt.ylabel("beta");
