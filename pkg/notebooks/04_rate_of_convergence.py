# %% [markdown]
# # Rate of convergence
#
# With exactly integrated paths the only error is the window approximation.
# Its RMSE should shrink like the square root of the window width K delta.

# %%
from tsqc.experiments import run_rate_experiment
from tsqc.simulate import ModelParams

table, fit = run_rate_experiment(ModelParams.desk(), reps=60, K=64, seed=2)
print(table.to_string(index=False))
print(f"slope {fit['slope']:.3f} +/- {fit['boot_se']:.3f} (bootstrap)")

# %% [markdown]
# Holding K Delta fixed and changing K gives the same errors, so the count of
# blocks inside the window is not a source of bias here.

# %%
_, fit16 = run_rate_experiment(ModelParams.desk(), reps=60, K=16, seed=2)
print(f"K=16 slope {fit16['slope']:.3f}")
