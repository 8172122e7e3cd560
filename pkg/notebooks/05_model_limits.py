# %% [markdown]
# # Large-n limits of the model
#
# Scaled by 1/n, the covariation of variance and intensity converges to
# rho * gamma * nu * sqrt(xi) * int sigma ds. The daily trade count is close
# to n * xi * T.

# %%
from tsqc.experiments import limit_ratios
from tsqc.simulate import ModelParams

params = ModelParams.paper()
ratios = limit_ratios(params, reps=10, seed=4)
print(ratios.describe().loc[["mean", "std", "min", "max"], ["qcv_ratio", "count_ratio"]])
print(f"n xi T = {params.n * params.xi * params.T:.0f} expected trades per day")
