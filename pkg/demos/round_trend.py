# %% [markdown]
# # How rounds grow with n
#
# Total simulated rounds against log2 n on a log-log scale. A slope s means
# rounds grow roughly like (log n)^s over the measured range. Two exponent
# profiles are compared: the defaults, whose log-power thresholds are mostly
# vacuous at these sizes, and a small-exponent profile that keeps the
# marking regimes active.

# %%
import math

import numpy as np

from hypermis.config import SolverConfig
from hypermis.pipeline import bench

N_VALUES = [64, 128, 256, 512, 1024]
SEEDS = range(4)
profiles = {
    "default": SolverConfig(),
    "small exponents": SolverConfig(band_exponent=1, mark_cap_exponent=2),
}

# %%
summaries = {name: bench(N_VALUES, SEEDS, "mis", cfg) for name, cfg in profiles.items()}
for name, s in summaries.items():
    print(f"{name:>16}: slope {s.slope:.2f}, budget ok: {s.max_bits_ok}")

# %% [markdown]
# Median rounds per n, and the mean number of outer iterations summed over
# all clusters of a run:

# %%
for name, s in summaries.items():
    print(name)
    for n in N_VALUES:
        rows = [r for r in s.records if r["n"] == n]
        rounds = np.median([r["rounds"] for r in rows])
        iters = np.mean([r["iterations"] for r in rows])
        print(f"  n={n:5d} log2n={math.log2(n):4.1f} rounds={rounds:8.0f} iterations={iters:5.1f}")

# %% [markdown]
# ## Decided nodes per iteration
#
# The fraction of still-undecided nodes settled in each outer iteration is
# the empirical side of the constant-progress argument.

# %%
rec = summaries["small exponents"].records[-1]
decided = rec["decided_per_iteration"]
print(decided[:20])
print(f"{sum(decided)} of {rec['n']} nodes decided over {len(decided)} cluster iterations")
