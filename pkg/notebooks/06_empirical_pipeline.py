# %% [markdown]
# # From a raw tick file to a daily estimate table
#
# Raw files carry epoch-nanosecond timestamps. Cleaning keeps the session
# window, drops nonpositive prices, collapses equal timestamps to their median
# and rescales time onto the unit interval. Estimation runs on log-prices.

# %%
import tempfile
from pathlib import Path

import numpy as np

from tsqc.experiments import run_empirical
from tsqc.ingest import SessionWindow, clean_days, parse_offset, parse_ticks, write_cleaned
from tsqc.simulate import ModelParams, TickSeries, simulate_day

# %% [markdown]
# Build a two-day raw file from simulated ticks stamped in New York time.

# %%
params = ModelParams.desk().with_(rho=0.5, sim_steps=2**18)
tmp = Path(tempfile.mkdtemp())
raw = tmp / "raw.csv"
session_ns = 6 * 3600 * 10**9
with raw.open("w") as fh:
    fh.write("timestamp_ns,price\n")
    for day, start in ((0, 1_704_465_900), (1, 1_704_552_300)):  # 2024-01-05/06 09:45 EST
        _, ticks = simulate_day(params, seed=100 + day)
        stamps = start * 10**9 + (ticks.times * session_ns).astype(np.int64)
        for t, p in zip(stamps, 100 * np.exp(ticks.prices)):
            fh.write(f"{t},{p:.4f}\n")

# %%
parsed = parse_ticks(raw)
days = clean_days(parsed, SessionWindow.parse("09:45-15:45"), parse_offset("-05:00"))
write_cleaned(days, tmp / "clean.csv")
print({d: len(t) for d, t in days.items()}, "skipped", parsed.skipped)

# %%
logged = [(d, TickSeries(t.times, np.log(t.prices))) for d, t in sorted(days.items())]
print(run_empirical(logged, B=3900, k1=80).to_string(index=False))
