# %% [markdown]
# # Simulating one trading day
#
# Spot variance and trade intensity are square-root diffusions whose drivers
# are correlated. Trades arrive as a Cox process with that intensity, and each
# observed log-price is the efficient price plus Gaussian noise.

# %%
import numpy as np

from tsqc.oracle import latent_truth
from tsqc.simulate import ModelParams, simulate_day

params = ModelParams.desk()
print(params)

# %%
paths, ticks = simulate_day(params, seed=7)
print(f"{len(ticks)} ticks, expected about {params.n * params.xi * params.T:.0f}")
print(f"sigma^2 ranges over [{paths.sigma2.min():.3f}, {paths.sigma2.max():.3f}]")
print(f"intensity / n ranges over [{paths.lambda_n.min() / params.n:.2f}, "
      f"{paths.lambda_n.max() / params.n:.2f}]")

# %% [markdown]
# The targets of estimation are covariations of the latent paths. They are
# random, and they change from day to day.

# %%
truth = latent_truth(paths)
print(f"[sigma2, lambda] = {truth.qcv_sl:.1f}")
print(f"rho = {truth.rho_true:.3f}, beta = {truth.beta_true:.2e}")

# %% [markdown]
# The seed is split into independent sub-streams, so turning the noise off
# leaves the trade times exactly where they were.

# %%
_, quiet = simulate_day(params.with_(noise_sd=0.0), seed=7)
print("same arrival times:", np.array_equal(quiet.times, ticks.times))
