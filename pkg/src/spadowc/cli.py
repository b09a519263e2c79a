"""Experiment runner: INI-style config in, CSV files out.

Usage::

    python -m spadowc [config.ini] [--set section.key=value ...]

Exit status is 0 on success, 2 for configuration errors, 3 when background
light saturates the link and 4 for numerical failures.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import decoder as dec
from . import sim
from .channel import TurbulenceParams
from .constellation import Scheme, design
from .errors import ConfigError, InfeasibleLinkError, SpadOwcError
from .linkmodel import LinkBudget, ModulationConfig, SpadArrayParams, db_to_linear_loss
from .spad import GaussianMoments, array_moments, dead_time_theta
from .vnt import VntParams, vnt_forward

EXPERIMENTS = (
    "transfer_curve",
    "vnt_check",
    "constellation_pdf",
    "ber_vs_power",
    "rate_vs_power",
    "fso_avg_ber",
    "custom",
)
BER_AXES = ("avg_power_uw", "loss_db", "background_nw", "symbol_ns", "rate_mbps")
DECODING = ("auto", "ml", "sqrt", "vnt", "vnt_exact")
CSV_HEADER = "sweep_value,scheme,ber_analytical,ber_mc,ber_mc_ci95,d_star,xi,rate_bps,seed"

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _unit(x):
    return 0 < x <= 1


def _pow2(x):
    return x >= 2 and x & (x - 1) == 0


def _min_symbols(x):
    return x == 0 or x >= 10_000


# section -> key -> (type, default, range check, description of the range)
SCHEMA: dict[str, dict[str, tuple]] = {
    "link": {
        "wavelength_nm": (float, 785.0, _positive, "> 0"),
        "loss_db": (float, 30.0, _nonneg, ">= 0"),
        "background_nw": (float, 10.0, _nonneg, ">= 0"),
        "avg_power_limit_uw": (float, 100.0, _positive, "> 0"),
    },
    "spad": {
        "pixels": (int, 2048, _positive, "> 0"),
        "dead_time_ns": (float, 10.0, _positive, "> 0"),
        "pde": (float, 0.18, _unit, "in (0, 1]"),
    },
    "modulation": {
        "order": (int, 4, _pow2, "a power of two >= 2"),
        "symbol_ns": (float, 5.0, _positive, "> 0"),
    },
    "channel": {
        "cn2": (float, 1e-15, _positive, "> 0"),
        "distance_m": (float, 1500.0, _positive, "> 0"),
        "aperture_cm": (float, 10.0, _positive, "> 0"),
        "divergence_mrad": (float, 2.0, _positive, "> 0"),
    },
    "mc": {
        "symbols": (int, 1_000_000, _min_symbols, "0 or >= 10000"),
        "realizations": (int, 10_000, lambda x: x >= 100, ">= 100"),
        "seed": (int, 0, _nonneg, ">= 0"),
        "workers": (int, 0, _nonneg, ">= 0"),
    },
    "sweep": {
        "experiment": (str, "ber_vs_power", lambda x: x in EXPERIMENTS, "one of " + ", ".join(EXPERIMENTS)),
        "schemes": (str, "uniform,sqrt,predistortion,joint", None, "comma-separated scheme names"),
        "axis": (str, None, None, "a sweep axis"),
        "min": (float, None, _positive, "> 0"),
        "max": (float, None, _positive, "> 0"),
        "points": (int, None, _positive, "> 0"),
        "scale": (str, None, lambda x: x in ("lin", "log"), "lin or log"),
        "ber_target": (float, 1e-3, lambda x: 0 < x <= 1, "in (0, 1]"),
        "decoding": (str, "auto", lambda x: x in DECODING, "one of " + ", ".join(DECODING)),
    },
    "output": {
        "path": (str, "results", None, "a directory"),
    },
}

# sweep defaults that depend on the experiment: axis, min, max, points, scale
SWEEP_PRESETS = {
    "transfer_curve": ("lambda_td", 1e-3, 10.0, 41, "log"),
    "vnt_check": ("lambda_td", 1e-2, 10.0, 31, "log"),
    "constellation_pdf": ("avg_power_uw", 60.0, 60.0, 1, "lin"),
    "ber_vs_power": ("avg_power_uw", 10.0, 1000.0, 21, "log"),
    "rate_vs_power": ("avg_power_uw", 10.0, 1000.0, 21, "log"),
    "fso_avg_ber": ("avg_power_uw", 10.0, 1000.0, 21, "log"),
    "custom": ("avg_power_uw", 10.0, 1000.0, 21, "log"),
}
AXES = {
    "transfer_curve": ("lambda_td",),
    "vnt_check": ("lambda_td",),
    "constellation_pdf": BER_AXES,
    "ber_vs_power": ("avg_power_uw",),
    "rate_vs_power": ("avg_power_uw", "loss_db", "background_nw"),
    "fso_avg_ber": ("avg_power_uw", "cn2"),
    "custom": BER_AXES,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment settings, keyed by ``(section, key)``."""

    values: tuple

    def __getitem__(self, item: str):
        section, key = item.split(".")
        return dict(self.values)[(section, key)]

    def as_dict(self) -> dict:
        return dict(self.values)

    @property
    def schemes(self) -> list[Scheme]:
        return [Scheme.parse(s) for s in self["sweep.schemes"].split(",") if s.strip()]

    @property
    def sweep_values(self) -> np.ndarray:
        lo, hi, n = self["sweep.min"], self["sweep.max"], self["sweep.points"]
        if n == 1:
            return np.array([lo])
        if self["sweep.scale"] == "log":
            return np.geomspace(lo, hi, n)
        return np.linspace(lo, hi, n)

    def link(self) -> LinkBudget:
        return LinkBudget(
            db_to_linear_loss(self["link.loss_db"]),
            self["link.background_nw"] * 1e-9,
            self["link.avg_power_limit_uw"] * 1e-6,
            self["link.wavelength_nm"] * 1e-9,
        )

    def spad(self) -> SpadArrayParams:
        return SpadArrayParams(self["spad.pixels"], self["spad.dead_time_ns"] * 1e-9, self["spad.pde"])

    def modulation(self) -> ModulationConfig:
        return ModulationConfig(self["modulation.order"], self["modulation.symbol_ns"] * 1e-9)

    def turbulence(self) -> TurbulenceParams:
        return TurbulenceParams(
            self["channel.cn2"],
            self["channel.distance_m"],
            self["channel.aperture_cm"] * 1e-2,
            self["channel.divergence_mrad"] * 1e-3,
            self["link.wavelength_nm"] * 1e-9,
        )

    def with_value(self, section: str, key: str, value) -> "ExperimentConfig":
        d = self.as_dict()
        d[(section, key)] = value
        return ExperimentConfig(tuple(d.items()))


def _convert(typ, raw: str, section: str, key: str, line):
    try:
        if typ is int:
            x = float(raw)
            if not x.is_integer():
                raise ValueError
            return int(x)
        if typ is float:
            x = float(raw)
            if not math.isfinite(x):
                raise ValueError
            return x
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected {typ.__name__}, got {raw!r}", line) from None


def _assign(values: dict, lines: dict, section: str, key: str, raw: str, line):
    if section not in SCHEMA:
        raise ConfigError(f"unknown section [{section}]", line)
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown key {key!r} in [{section}]", line)
    typ, _, check, desc = SCHEMA[section][key]
    value = _convert(typ, raw, section, key, line)
    if check is not None and not check(value):
        raise ConfigError(f"{section}.{key} = {raw.strip()} out of range (must be {desc})", line)
    values[(section, key)] = value
    lines[(section, key)] = line


def _tokenize(text: str):
    """Yield ``(line_number, section, key, raw_value)`` for each assignment."""
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(f"malformed section header {s!r}", n)
            section = s[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", n)
            continue
        if "=" not in s:
            raise ConfigError(f"expected 'key = value', got {s!r}", n)
        if section is None:
            raise ConfigError("assignment before any section header", n)
        key, value = s.split("=", 1)
        yield n, section, key.strip(), value.strip()


def parse_config(text: str, overrides=()) -> ExperimentConfig:
    """Parse and validate a config; omitted keys take their defaults.

    ``overrides`` holds ``"section.key=value"`` strings applied after the
    file (they win over it).
    """
    values: dict = {}
    lines: dict = {}
    for n, section, key, raw in _tokenize(text):
        if (section, key) in values:
            raise ConfigError(f"duplicate key {section}.{key}", n)
        _assign(values, lines, section, key, raw, n)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        name, raw = item.split("=", 1)
        section, key = name.strip().split(".", 1)
        _assign(values, lines, section, key, raw, None)

    experiment = values.get(("sweep", "experiment"), SCHEMA["sweep"]["experiment"][1])
    preset = dict(zip(("axis", "min", "max", "points", "scale"), SWEEP_PRESETS[experiment]))
    for section, keys in SCHEMA.items():
        for key, (_, default, _, _) in keys.items():
            if (section, key) not in values:
                values[(section, key)] = preset[key] if default is None else default

    axis = values[("sweep", "axis")]
    if axis not in AXES[experiment]:
        raise ConfigError(
            f"sweep.axis {axis!r} not available for {experiment} (choose from {', '.join(AXES[experiment])})",
            lines.get(("sweep", "axis")),
        )
    if values[("sweep", "min")] > values[("sweep", "max")]:
        raise ConfigError("sweep.min exceeds sweep.max", lines.get(("sweep", "max")))
    try:
        names = [s for s in values[("sweep", "schemes")].split(",") if s.strip()]
        if not names:
            raise ValueError("empty scheme list")
        canonical = ",".join(Scheme.parse(s).value for s in names)
    except ValueError as exc:
        raise ConfigError(f"sweep.schemes: {exc}", lines.get(("sweep", "schemes"))) from None
    values[("sweep", "schemes")] = canonical

    ordered = tuple(((s, k), values[(s, k)]) for s, keys in SCHEMA.items() for k in keys)
    return ExperimentConfig(ordered)


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: ExperimentConfig) -> str:
    """Config text that parses back to ``cfg``."""
    out = []
    current = None
    for (section, key), value in cfg.values:
        if section != current:
            if current is not None:
                out.append("")
            out.append(f"[{section}]")
            current = section
        out.append(f"{key} = {_fmt_value(value)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# running

def fmt(x) -> str:
    """CSV number: 9 significant digits in scientific notation; empty for None."""
    if x is None:
        return ""
    return f"{float(x):.8e}"


def _provenance(cfg: ExperimentConfig) -> list[str]:
    return ["# " + line if line else "#" for line in serialize(cfg).splitlines()]


def _write(path: Path, header: str, rows: list[list[str]], cfg: ExperimentConfig):
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "\n".join(_provenance(cfg) + [header] + [",".join(r) for r in rows]) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _point_config(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    axis = cfg["sweep.axis"]
    if axis == "rate_mbps":
        bits = int(math.log2(cfg["modulation.order"]))
        return cfg.with_value("modulation", "symbol_ns", bits / (value * 1e6) * 1e9)
    section = {
        "avg_power_uw": "link",
        "loss_db": "link",
        "background_nw": "link",
        "symbol_ns": "modulation",
        "cn2": "channel",
    }[axis]
    key = "avg_power_limit_uw" if axis == "avg_power_uw" else axis
    return cfg.with_value(section, key, float(value))


def _mode(cfg: ExperimentConfig, scheme: Scheme):
    mode = cfg["sweep.decoding"]
    return None if mode == "auto" else mode


def _ber_rows(cfg: ExperimentConfig, scheme: Scheme, log) -> list[list[str]]:
    rows = []
    seed = cfg["mc.seed"]
    workers = cfg["mc.workers"] or None
    for v in cfg.sweep_values:
        pc = _point_config(cfg, v)
        mod = pc.modulation()
        dsg = design(scheme, pc.link(), pc.spad(), mod)
        mode = _mode(pc, scheme)
        ber_a = sim.analytical_ber(dsg, mode)
        ber_mc = ci = None
        if pc["mc.symbols"]:
            rx = sim.make_receiver(dsg, None if mode in (None, "vnt_exact") else mode)
            res = sim.run_ber_mc(dsg, rx, pc["mc.symbols"], seed, workers)
            ber_mc, ci = res.ber, res.half_width_95
        xi = dsg.offset if scheme in (Scheme.PRE_DISTORTION, Scheme.JOINT) else None
        rows.append([fmt(v), scheme.value, fmt(ber_a), fmt(ber_mc), fmt(ci), fmt(dsg.separation), fmt(xi),
                     fmt(mod.bit_rate), str(seed)])
        log(f"{cfg['sweep.axis']}={v:.4g} {scheme.value}: ber_analytical={ber_a:.3e}"
            + (f" ber_mc={ber_mc:.3e}" if ber_mc is not None else ""))
    return rows


def _rate_rows(cfg: ExperimentConfig, scheme: Scheme, log) -> list[list[str]]:
    rows = []
    seed = cfg["mc.seed"]
    for v in cfg.sweep_values:
        pc = _point_config(cfg, v)
        res = sim.search_max_rate(
            scheme, pc.link(), pc.spad(), pc["sweep.ber_target"], order=pc["modulation.order"], seed=seed,
            mode=_mode(pc, scheme),
        )
        rate = res.rate if res.met_target else None
        ber = res.ber if res.met_target else None
        rows.append([fmt(v), scheme.value, fmt(ber), "", "", "", "", fmt(rate), str(seed)])
        log(f"{cfg['sweep.axis']}={v:.4g} {scheme.value}: rate="
            + (f"{res.rate / 1e6:.1f} Mbps" if res.met_target else "target not met"))
    return rows


def _fso_rows(cfg: ExperimentConfig, scheme: Scheme, log) -> list[list[str]]:
    rows = []
    seed = cfg["mc.seed"]
    for v in cfg.sweep_values:
        pc = _point_config(cfg, v)
        turb = pc.turbulence()
        link, spad, mod = pc.link(), pc.spad(), pc.modulation()
        mode = _mode(pc, scheme)
        res = sim.run_ber_fading(turb, scheme, link, spad, mod, pc["mc.realizations"], seed, mode)
        # reference without scintillation: fixed loss h_g
        static = sim.instantaneous_ber_many(scheme, np.array([turb.geometric_loss]), link, spad, mod, mode)[0]
        rows.append([fmt(v), scheme.value, fmt(static), fmt(res.ber), fmt(res.half_width_95), "", "",
                     fmt(mod.bit_rate), str(seed)])
        log(f"{cfg['sweep.axis']}={v:.4g} {scheme.value}: avg_ber={res.ber:.3e}")
    return rows


def _transfer_curve(cfg: ExperimentConfig, log) -> Path:
    spad, mod = cfg.spad(), cfg.modulation()
    ts, td = mod.symbol_duration, spad.dead_time
    x = cfg.sweep_values
    lam = x / td
    m = array_moments(lam, spad, ts)
    mu1 = m.mean / spad.n_pixels
    var1 = m.variance / spad.n_pixels
    rows = [[fmt(a), fmt(b), fmt(c), fmt(d), fmt(e), fmt(f)] for a, b, c, d, e, f in
            zip(x, lam, mu1, var1, m.mean, m.variance)]
    path = Path(cfg["output.path"]) / "transfer_curve.csv"
    _write(path, "sweep_value,lambda,pixel_mean,pixel_variance,array_mean,array_variance", rows, cfg)
    log(f"transfer_curve: {len(rows)} points, theta={dead_time_theta(ts, td):.4g}")
    return path


def _vnt_check(cfg: ExperimentConfig, log) -> Path:
    spad, mod = cfg.spad(), cfg.modulation()
    ts, td = mod.symbol_duration, spad.dead_time
    vp = VntParams.for_link(spad.n_pixels, ts, td)
    n = max(cfg["mc.symbols"], 10_000)
    rng = np.random.default_rng(cfg["mc.seed"])
    rows = []
    for x in cfg.sweep_values:
        m = array_moments(np.array([x / td]), spad, ts)
        r = rng.normal(m.mean[0], m.std[0], n)
        y = vnt_forward(r, vp)
        rows.append([fmt(x), fmt(x / td), fmt(m.mean[0]), fmt(m.variance[0]), fmt(np.var(y, ddof=1)),
                     str(cfg["mc.seed"])])
    path = Path(cfg["output.path"]) / "vnt_check.csv"
    _write(path, "sweep_value,lambda,array_mean,array_variance,vnt_variance,seed", rows, cfg)
    log(f"vnt_check: {len(rows)} points, {n} samples each")
    return path


def _constellation(cfg: ExperimentConfig, scheme: Scheme, log) -> list[list[str]]:
    rows = []
    for v in cfg.sweep_values:
        pc = _point_config(cfg, v)
        dsg = design(scheme, pc.link(), pc.spad(), pc.modulation())
        m = dsg.rx_moments
        if scheme is Scheme.JOINT:
            tm = dsg.transformed_means
            tv = m.variance / (m.mean - dsg.vnt_params.theta * m.mean**2 / dsg.spad.n_pixels)
        elif scheme is Scheme.SQRT:
            sm = dec.sqrt_domain_moments(m, dsg.transformed_means)
            tm, tv = sm.mean, sm.variance
        else:
            tm, tv = m.mean, m.variance
        for k in range(dsg.order):
            rows.append([fmt(v), scheme.value, str(k), fmt(dsg.tx_rates[k]), fmt(m.mean[k]), fmt(m.variance[k]),
                         fmt(tm[k]), fmt(tv[k]), fmt(dsg.separation)])
        log(f"{cfg['sweep.axis']}={v:.4g} {scheme.value}: d*={dsg.separation:.4g}")
    return rows


def run_experiment(cfg: ExperimentConfig, log=print) -> list[Path]:
    """Run the configured experiment and return the CSV paths written."""
    exp = cfg["sweep.experiment"]
    if exp == "transfer_curve":
        return [_transfer_curve(cfg, log)]
    if exp == "vnt_check":
        return [_vnt_check(cfg, log)]
    out = Path(cfg["output.path"])
    paths = []
    for scheme in cfg.schemes:
        path = out / f"{exp}_{scheme.value}.csv"
        if exp == "constellation_pdf":
            header = ("sweep_value,scheme,level,tx_rate,rx_mean,rx_variance,"
                      "transformed_mean,transformed_variance,d_star")
            rows = _constellation(cfg, scheme, log)
        else:
            header = CSV_HEADER
            runner = {"rate_vs_power": _rate_rows, "fso_avg_ber": _fso_rows}.get(exp, _ber_rows)
            rows = runner(cfg, scheme, log)
        _write(path, header, rows, cfg)
        paths.append(path)
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="spadowc", description="SPAD optical link experiments")
    parser.add_argument("config", nargs="?", help="config file (defaults used when omitted)")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config key; may be repeated")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress per-point summaries")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, args.set)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log = (lambda msg: None) if args.quiet else print
    try:
        run_experiment(cfg, log)
    except InfeasibleLinkError as exc:
        print(f"infeasible link: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SpadOwcError, ArithmeticError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


__all__ = ["ExperimentConfig", "parse_config", "serialize", "run_experiment", "main", "CSV_HEADER"]
