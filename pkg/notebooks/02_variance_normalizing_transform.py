"""Variance-normalizing transform.

The arcsine map turns the signal-dependent SPAD noise into approximately
unit-variance noise once the mean count is moderately large.
"""

import numpy as np

from spadowc.linkmodel import SpadArrayParams
from spadowc.spad import array_moments, sample_output
from spadowc.vnt import VntParams, vnt_forward, vnt_inverse

spad = SpadArrayParams(2048, 10e-9, 0.18)
ts = 20e-9
vp = VntParams.for_link(spad.n_pixels, ts, spad.dead_time)
rng = np.random.default_rng(1)

print(f"{'lambda*Td':>10} {'mean':>9} {'raw var':>9} {'VNT var':>8}")
for x in np.geomspace(1e-3, 10, 9):
    m = array_moments(np.array([x / spad.dead_time]), spad, ts)
    r = sample_output(m, rng, 100_000).ravel()
    print(f"{x:10.3g} {m.mean[0]:9.1f} {r.var():9.1f} {vnt_forward(r, vp).var():8.3f}")

x = np.linspace(0, vp.upper, 5)
print("\nround trip error:", np.max(np.abs(vnt_inverse(vnt_forward(x, vp), vp) - x)))
