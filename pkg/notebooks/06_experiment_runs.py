# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Bundled experiment configurations
#
# Each run writes snapshots, CSV summaries, plots and a manifest with file
# hashes into its own directory.

# %%
import json
import tempfile
from pathlib import Path

from spatial_egt.experiments import bundled, load_config, run_experiment

out = Path(tempfile.mkdtemp())
cfg = load_config(bundled("fig8"), {"domain.n": "128"})
man = run_experiment(cfg, out / "fig8")
print(json.dumps({b: {k: s[k] for k in ("front_speed", "front_residual")} for b, s in man.summary.items()}, indent=1))

# %%
sorted(man.files)[:10]

# %% [markdown]
# The same runs from the shell:
#
# ```
# python -m spatial_egt run fig8.cfg --out out/fig8
# python -m spatial_egt sweep fig2.cfg --param initial.mode=1,2
# ```
