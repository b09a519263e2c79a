import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spadowc import cli
from spadowc.errors import ConfigError


def _csv_body(path):
    lines = path.read_text().splitlines()
    body = [l for l in lines if not l.startswith("#")]
    return body[0], [r.split(",") for r in body[1:]]


def test_empty_config_defaults():
    cfg = cli.parse_config("")
    assert cfg["sweep.experiment"] == "ber_vs_power"
    assert cfg["sweep.schemes"] == "uniform,sqrt,predistortion,joint"
    assert cfg["link.wavelength_nm"] == 785.0
    assert cfg["spad.pixels"] == 2048 and cfg["spad.dead_time_ns"] == 10.0 and cfg["spad.pde"] == 0.18
    assert cfg["channel.cn2"] == 1e-15 and cfg["channel.distance_m"] == 1500.0
    assert cfg["mc.realizations"] == 10000
    assert (cfg["sweep.axis"], cfg["sweep.min"], cfg["sweep.max"], cfg["sweep.points"]) == ("avg_power_uw", 10.0, 1000.0, 21)


def test_range_error_names_key_and_line():
    with pytest.raises(ConfigError, match=r"line 3: .*dead_time_ns"):
        cli.parse_config("[spad]\npixels = 10\ndead_time_ns = -1\n")


@pytest.mark.parametrize(
    "text, pattern",
    [
        ("[spad]\nfoo = 1\n", r"line 2: unknown key 'foo'"),
        ("[nope]\n", r"line 1: unknown section"),
        ("[spad]\npixels = 2.5\n", r"line 2: spad.pixels: expected int"),
        ("[mc]\nsymbols = 100\n", r"line 2: .*symbols"),
        ("pixels = 3\n", r"line 1: assignment before"),
        ("[sweep]\naxis = lambda_td\n", r"line 2: sweep.axis"),
        ("[sweep]\nschemes = uniform,qam\n", r"line 2: sweep.schemes"),
        ("[modulation]\norder = 6\n", r"line 2: .*order"),
        ("[spad]\npde = 0.1\npde = 0.2\n", r"line 3: duplicate"),
    ],
)
def test_config_errors(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        cli.parse_config(text)


def test_override_wins():
    cfg = cli.parse_config("[spad]\npixels = 1024\n", ["spad.pixels=4096"])
    assert cfg["spad.pixels"] == 4096
    with pytest.raises(ConfigError):
        cli.parse_config("", ["pixels=3"])


def test_round_trip_defaults():
    cfg = cli.parse_config("")
    assert cli.parse_config(cli.serialize(cfg)) == cfg


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.0, 60.0),
    st.floats(1e-3, 1e3),
    st.integers(1, 10**5),
    st.sampled_from([2, 4, 8, 16]),
    st.integers(0, 2**31),
    st.sampled_from(["ber_vs_power", "rate_vs_power", "custom", "fso_avg_ber"]),
    st.lists(st.sampled_from(["uniform", "sqrt", "predistortion", "joint"]), min_size=1, max_size=4),
)
def test_round_trip_property(loss, pb, pixels, order, seed, exp, schemes):
    text = (
        f"[link]\nloss_db = {loss!r}\nbackground_nw = {pb!r}\n[spad]\npixels = {pixels}\n"
        f"[modulation]\norder = {order}\n[mc]\nseed = {seed}\n[sweep]\nexperiment = {exp}\nschemes = {','.join(schemes)}\n"
    )
    cfg = cli.parse_config(text)
    assert cli.parse_config(cli.serialize(cfg)) == cfg


def test_ber_vs_power_csv(tmp_path):
    cfg = cli.parse_config("", [f"output.path={tmp_path}", "mc.symbols=0", "sweep.min=100", "sweep.max=100",
                               "sweep.points=1"])
    paths = cli.run_experiment(cfg, log=lambda m: None)
    assert [p.name for p in paths] == [f"ber_vs_power_{s}.csv" for s in ("uniform", "sqrt", "predistortion", "joint")]
    header, rows = _csv_body(tmp_path / "ber_vs_power_joint.csv")
    assert header == cli.CSV_HEADER
    row = rows[0]
    assert float(row[0]) == 100.0
    assert float(row[2]) == pytest.approx(8e-7, rel=0.2)
    assert row[3] == "" and row[4] == ""
    assert row[5] != "" and row[6] != ""
    _, urows = _csv_body(tmp_path / "ber_vs_power_uniform.csv")
    assert urows[0][6] == ""
    text = (tmp_path / "ber_vs_power_joint.csv").read_bytes()
    assert b"\r" not in text
    assert text.startswith(b"# [link]")
    assert row[2] == f"{float(row[2]):.8e}"


def test_csv_provenance_round_trip(tmp_path):
    cfg = cli.parse_config("", [f"output.path={tmp_path}", "mc.symbols=0", "sweep.points=2"])
    path = cli.run_experiment(cfg, log=lambda m: None)[0]
    comments = [l[2:] if l.startswith("# ") else "" for l in path.read_text().splitlines() if l.startswith("#")]
    assert cli.parse_config("\n".join(comments)) == cfg


def test_deterministic_csv(tmp_path):
    outs = []
    for k in range(2):
        cfg = cli.parse_config("", [f"output.path={tmp_path}", "mc.symbols=20000", "sweep.points=3",
                                   "mc.seed=5", "sweep.schemes=uniform,joint"])
        outs.append([p.read_bytes() for p in cli.run_experiment(cfg, log=lambda m: None)])
    assert outs[0] == outs[1]


def test_transfer_curve_matches_moments(tmp_path):
    from spadowc.spad import single_pixel_mean, single_pixel_variance

    cfg = cli.parse_config("[sweep]\nexperiment = transfer_curve\npoints = 7\n", [f"output.path={tmp_path}"])
    path = cli.run_experiment(cfg, log=lambda m: None)[0]
    header, rows = _csv_body(path)
    a = np.array(rows, dtype=float)
    lam = a[:, 1]
    assert np.allclose(a[:, 2], single_pixel_mean(lam, 5e-9, 10e-9), rtol=1e-8)
    assert np.allclose(a[:, 3], single_pixel_variance(lam, 5e-9, 10e-9), rtol=1e-8)


@pytest.mark.parametrize("exp", ["vnt_check", "constellation_pdf", "rate_vs_power", "fso_avg_ber", "custom"])
def test_presets_run(tmp_path, exp):
    cfg = cli.parse_config(
        f"[sweep]\nexperiment = {exp}\npoints = 2\nschemes = joint\n[mc]\nsymbols = 10000\nrealizations = 100\n",
        [f"output.path={tmp_path}"],
    )
    paths = cli.run_experiment(cfg, log=lambda m: None)
    assert paths and all(p.exists() for p in paths)


def test_main_exit_codes(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[spad]\ndead_time_ns = -1\n")
    assert cli.main([str(bad), "-q"]) == cli.EXIT_CONFIG
    assert cli.main(["-q", "--set", f"output.path={tmp_path}", "--set", "mc.symbols=0",
                     "--set", "link.background_nw=1e9"]) == cli.EXIT_INFEASIBLE
    assert cli.main(["-q", "--set", f"output.path={tmp_path}", "--set", "mc.symbols=0",
                     "--set", "sweep.points=2"]) == cli.EXIT_OK
    assert cli.main([str(tmp_path / "missing.ini")]) == cli.EXIT_CONFIG


def test_numeric_failure_exit(tmp_path, monkeypatch):
    from spadowc.errors import DesignError

    def boom(*a, **k):
        raise DesignError("root search failed")

    monkeypatch.setattr(cli, "design", boom)
    assert cli.main(["-q", "--set", f"output.path={tmp_path}", "--set", "mc.symbols=0"]) == cli.EXIT_NUMERIC


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "spadowc", "--set", "sweep.points=1", "--set", "mc.symbols=0",
         "--set", f"output.path={tmp_path}", "--set", "sweep.schemes=joint"],
        capture_output=True, text=True,
    )
    assert r.returncode == 0
    assert "joint" in r.stdout
