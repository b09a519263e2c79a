"""BER against the average power limit for the four schemes.

Analytical values come from the Gaussian model; a Monte Carlo run checks one
point per scheme.
"""

import numpy as np

from spadowc import sim
from spadowc.constellation import Scheme, design
from spadowc.linkmodel import LinkBudget, ModulationConfig, SpadArrayParams

spad = SpadArrayParams(2048, 10e-9, 0.18)
mod = ModulationConfig(4, 5e-9)

powers = np.geomspace(10e-6, 1e-3, 11)
print(f"{'P (uW)':>8}" + "".join(f"{s.value:>15}" for s in Scheme))
for p in powers:
    link = LinkBudget(1e-3, 10e-9, p, 785e-9)
    row = [sim.analytical_ber(design(s, link, spad, mod)) for s in Scheme]
    print(f"{p * 1e6:8.1f}" + "".join(f"{b:15.3e}" for b in row))

link = LinkBudget(1e-3, 10e-9, 100e-6, 785e-9)
print("\nMonte Carlo at 100 uW (1e6 symbols):")
for s in (Scheme.UNIFORM, Scheme.SQRT, Scheme.PRE_DISTORTION):
    d = design(s, link, spad, mod)
    r = sim.run_ber_mc(d, n_symbols=1_000_000, seed=3)
    print(f"  {s.value:15} MC {r.ber:.3e} +- {r.half_width_95:.1e}, analytical {sim.analytical_ber(d):.3e}")
