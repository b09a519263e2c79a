"""Constellation designs at 60 uW average power and 30 dB loss.

Uniform spacing at the transmitter gives shrinking gaps at the receiver;
pre-distortion equalizes the received gaps; the joint design equalizes gaps
after the variance-normalizing transform.
"""

import numpy as np

from spadowc.constellation import Scheme, design, vnt_means
from spadowc.linkmodel import LinkBudget, ModulationConfig, SpadArrayParams

link = LinkBudget(1e-3, 10e-9, 60e-6, 785e-9)
spad = SpadArrayParams(2048, 10e-9, 0.18)
mod = ModulationConfig(4, 5e-9)

np.set_printoptions(precision=2, suppress=True)
for scheme in Scheme:
    d = design(scheme, link, spad, mod)
    print(f"{scheme.value}: separation {d.separation:.4g}")
    print("  tx rates (1/s):", d.tx_rates)
    print("  rx means:      ", d.rx_moments.mean)
    print("  rx variances:  ", d.rx_moments.variance)
    if scheme is Scheme.JOINT:
        print("  VNT means:     ", vnt_means(d))
