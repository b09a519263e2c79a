"""Running experiments from configuration files.

Equivalent shell usage::

    spadowc configs/ber_vs_power.ini --set mc.symbols=0
    python -m spadowc configs/rate_vs_power.ini -q
"""

import tempfile
from pathlib import Path

from spadowc import cli

out = Path(tempfile.mkdtemp())
cfg = cli.parse_config(
    Path(__file__).resolve().parents[1].joinpath("configs", "ber_vs_power.ini").read_text(),
    [f"output.path={out}", "mc.symbols=0", "sweep.points=5"],
)
print(cli.serialize(cfg))
for path in cli.run_experiment(cfg, log=lambda m: None):
    print(f"--- {path.name}")
    print(path.read_text())
