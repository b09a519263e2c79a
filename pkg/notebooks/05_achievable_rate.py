"""Highest symbol rate meeting a BER target at 200 uW average power."""

from spadowc import sim
from spadowc.constellation import Scheme
from spadowc.linkmodel import LinkBudget, SpadArrayParams

spad = SpadArrayParams(2048, 10e-9, 0.18)
link = LinkBudget(1e-3, 10e-9, 200e-6, 785e-9)

for s in Scheme:
    r = sim.search_max_rate(s, link, spad, ber_target=1e-3)
    print(f"{s.value:15} {r.rate / 1e6:8.1f} Mbps  (BER {r.ber:.2e}, target met: {r.met_target})")
