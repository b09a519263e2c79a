"""SPAD array transfer curve.

The mean photocount of a dead-time limited array grows linearly at low
photon rates, peaks at lambda * Td = 1 and then falls (paralysis). The
variance drops below the mean as the array approaches saturation.
"""

import numpy as np

from spadowc.linkmodel import SpadArrayParams
from spadowc.spad import array_moments, dead_time_oracle, single_pixel_mean, single_pixel_variance

spad = SpadArrayParams(2048, 10e-9, 0.18)
ts = 5e-9

lam_td = np.geomspace(1e-3, 10, 13)
m = array_moments(lam_td / spad.dead_time, spad, ts)
print(f"{'lambda*Td':>10} {'mean':>10} {'variance':>10} {'var/mean':>9}")
for x, mu, v in zip(lam_td, m.mean, m.variance):
    print(f"{x:10.3g} {mu:10.2f} {v:10.2f} {v / mu:9.3f}")

# event-level check of the single-pixel moments at the peak
rng = np.random.default_rng(0)
lam = 1.0 / spad.dead_time
mean, var = dead_time_oracle(lam, ts, spad.dead_time, 200_000, rng)
print(f"\nsimulated pixel at lambda*Td = 1: mean {mean:.4f}, variance {var:.4f}")
print(f"closed form:                      mean {single_pixel_mean(lam, ts, spad.dead_time):.4f}, "
      f"variance {single_pixel_variance(lam, ts, spad.dead_time):.4f}")
