import subprocess
import sys

import numpy as np
import pytest

from magnon_echo import cli
from magnon_echo.config import ConfigError, PRESET_NAMES, RunConfig, parse_config, parse_grid, preset
from magnon_echo.csvio import MAGIC, fmt, read_csv, render, write_csv
from magnon_echo.runner import RunResult, run_scenario, worker_count
from magnon_echo.series import EchoSeries

BASIC = ["--scenario", "echo-single", "--N", "inf", "--channel", "project-z", "--m", "1",
         "--beta2", "0.5", "--t0", "0:5:0.25"]


def _run(argv, capsys):
    code = cli.main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_basic_config_is_valid():
    cfg = parse_config(BASIC)
    assert cfg.size is None
    assert cfg.axis == "t0"
    assert len(cfg.grid) == 21 and cfg.grid[-1] == 5.0
    assert abs(cfg.beta) ** 2 == pytest.approx(0.5)


def test_missing_scenario_exit_2(capsys):
    code, out, err = _run(["--N", "10", "--t0", "0:1:0.5"], capsys)
    assert code == 2
    assert "missing --scenario" in err
    assert out == ""


def test_p_out_of_range_names_field(capsys):
    code, _, err = _run(BASIC + ["--channel", "phase-flip", "--p", "1.5"], capsys)
    assert code == 2
    assert "p: value 1.5" in err


def test_distinct_error_messages():
    msgs = []
    for argv in (["--t0", "0:1:1"], BASIC + ["--p", "2"], BASIC + ["--bogus", "1"]):
        with pytest.raises(ConfigError) as info:
            parse_config(argv)
        msgs.append(str(info.value))
    assert len(set(msgs)) == 3


def test_unknown_key_in_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("scenario = echo-single\nflavour = up\n")
    with pytest.raises(ConfigError, match="unknown key 'flavour'"):
        parse_config(["--config", str(path)])


def test_file_then_flags(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\n# comment line\nscenario = echo-single\nN = 10  # ring\n"
                    "channel = phase-flip\np = 0.2\nt0 = 0:1:0.5\n")
    cfg = parse_config(["--config", str(path)])
    assert (cfg.size, cfg.channel, cfg.p) == (10, "phase-flip", 0.2)
    cfg = parse_config(["--config", str(path), "--p", "0.7", "--m", "1:3:1"])
    assert cfg.p == 0.7
    assert cfg.axis == "m"
    bad = tmp_path / "bad.ini"
    bad.write_text("[other]\nscenario = echo-single\n")
    with pytest.raises(ConfigError, match="section"):
        parse_config(["--config", str(bad)])
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(["--config", str(tmp_path / "absent.ini")])


def test_grid_parsing():
    assert parse_grid("0:1:0.1")[-1] == 1.0
    assert len(parse_grid("0:1:0.1")) == 11
    assert parse_grid("2:2:1") == (2.0,)
    for bad in ("0:1", "1:0:0.1", "0:1:0", "a:b:c", "0:inf:1"):
        with pytest.raises(ConfigError):
            parse_grid(bad)
    with pytest.raises(ConfigError, match="more than one sweep axis"):
        parse_config(BASIC + ["--m", "1:3:1"])
    with pytest.raises(ConfigError, match="no sweep axis"):
        parse_config(BASIC[:-2] + ["--t0", "1.0"])


def test_site_validation():
    with pytest.raises(ConfigError, match="outside"):
        parse_config(["--scenario", "echo-multi", "--N", "10", "--sites", "1,12", "--n", "1:2:1"])
    cfg = parse_config(["--scenario", "echo-multi", "--N", "10", "--sites", "random:1:9", "--n", "1:2:1"])
    assert cfg.random_sites == (1, 9)


def test_presets():
    d = preset("fig1d")
    assert d.gamma == pytest.approx((1 + 1j) / np.sqrt(3))
    assert d.delta == pytest.approx(1 / np.sqrt(3))
    pairs = {(c.tau, c.g) for _, c in preset("fig2").expand()}
    assert pairs == {(t, g) for t in (0.1, 0.9) for g in (0.1, 1.0, 5.0)}
    fig1a = preset("fig1a").expand()
    assert len(fig1a) == 4
    assert {(c.channel, c.state) for _, c in fig1a} == {(ch, st) for ch in ("project-z", "project-x")
                                                        for st in ("unentangled", "entangled")}
    fig3 = {(c.tau, c.g) for _, c in preset("fig3").expand()}
    assert fig3 == {(t, g) for t in (0.1, 0.3, 0.8) for g in (0.1, 1.0)}
    assert {c.spacing for _, c in preset("fig1c").expand()} == {0.1, 0.5, 1.0, 5.0}
    for name in PRESET_NAMES:
        cfg = preset(name)
        assert cfg.eta == 1 and cfg.anisotropy == 1.0
    with pytest.raises(ConfigError, match="unknown preset"):
        preset("nope")


def test_fig5_equal_periods_give_ones():
    cfg = parse_config(["--preset", "fig5", "--tau", "0.3", "--tau2", "0.3", "--t-max", "30"])
    res = run_scenario(cfg)
    assert len(res.curves) == 5
    for _, ser in res.curves:
        assert len(ser) == 100
        assert np.allclose(ser.values, 1.0, atol=1e-12)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_every_preset_runs(name, tmp_path):
    out = tmp_path / f"{name}.csv"
    assert cli.main(["--preset", name, "--out", str(out)]) == 0
    data = read_csv(str(out))
    assert data["config"]["preset"] == name
    assert data["rows"]


def test_deterministic_output(tmp_path, monkeypatch):
    argv = ["--preset", "fig1c", "--out", str(tmp_path / "a.csv")]
    assert cli.main(argv) == 0
    first = (tmp_path / "a.csv").read_bytes()
    monkeypatch.setenv("MAGNON_ECHO_THREADS", "1")
    assert worker_count() == 1
    assert cli.main(argv) == 0
    assert (tmp_path / "a.csv").read_bytes() == first


def test_csv_round_trip(tmp_path):
    cfg = parse_config(BASIC)
    res = run_scenario(cfg)
    path = tmp_path / "out.csv"
    text = write_csv(res, path=str(path))
    assert text.endswith("\n")
    assert text.splitlines()[0] == MAGIC
    data = read_csv(str(path))
    assert data["columns"] == ["t0", "L"]
    ser = res.curves[0][1]
    got = np.array([r[1] for r in data["rows"]])
    assert np.array_equal(got, [float(fmt(v)) for v in ser.values])
    assert np.max(np.abs(got - ser.values)) <= 1e-12
    assert [r[0] for r in data["rows"]] == list(ser.params)


def test_fmt():
    assert fmt(0.0) == "0"
    assert fmt(0.5) == "0.5"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(2.0) == "2"
    assert len(fmt(np.pi).replace(".", "")) == 12


def test_empty_series_rejected():
    empty = EchoSeries("t0", [])
    with pytest.raises(ValueError, match="empty"):
        render(RunResult(parse_config(BASIC), [("", empty)]))
    cfg = parse_config(["--scenario", "harper-reverse", "--N", "50", "--tau", "1", "--tau2", "3.14159",
                        "--t-max", "2"])
    assert cli.main(["--scenario", "harper-reverse", "--N", "50", "--tau", "1", "--tau2", "3.14159",
                     "--t-max", "2"]) == 1
    assert cfg.tau2 == 3.14159


def test_config_line_lists_non_default_flags(capsys):
    argv = ["--scenario", "echo-single", "--N", "40", "--channel", "phase-flip", "--p", "0.3",
            "--Delta", "0.5", "--gamma-im", "0.25", "--m", "2", "--t0", "0:1:0.5"]
    code, out, _ = _run(argv, capsys)
    assert code == 0
    conf = read_csv(out, is_text=True)["config"]
    assert conf["size"] == 40 and conf["channel"] == "phase-flip" and conf["p"] == 0.3
    assert conf["anisotropy"] == 0.5 and conf["m"] == 2 and conf["gamma"][1] == 0.25
    assert conf["axis"] == "t0" and conf["grid"] == [0.0, 0.5, 1.0]
    defaults = RunConfig("echo-single").as_dict()
    assert set(conf) == set(defaults)


def test_light_cone_and_amplitude_columns(capsys):
    code, out, _ = _run(["--scenario", "harper-green", "--N", "12", "--kicks", "0:2:1"], capsys)
    assert code == 0
    data = read_csv(out, is_text=True)
    assert data["columns"] == ["x", "n", "re", "im", "abs2"]
    assert len(data["rows"]) == 36
    code, out, _ = _run(["--scenario", "echo-multi", "--quantity", "amplitude", "--sites", "1,2",
                         "--N", "20", "--t0", "0:1:0.5"], capsys)
    assert code == 0
    assert read_csv(out, is_text=True)["columns"] == ["t0", "re", "im"]


def test_oracle_subcommand_matches_analytic(capsys):
    common = ["--N", "8", "--channel", "project-x", "--m", "3", "--t0", "0:2:0.5"]
    _, ana, _ = _run(["--scenario", "echo-single"] + common, capsys)
    _, ora, _ = _run(["--scenario", "oracle"] + common, capsys)
    a = np.array(read_csv(ana, is_text=True)["rows"])
    o = np.array(read_csv(ora, is_text=True)["rows"])
    assert np.max(np.abs(a - o)) <= 1e-10


def test_exit_codes(capsys, tmp_path):
    assert _run(BASIC, capsys)[0] == 0
    assert _run(["--help"], capsys)[0] == 0
    assert _run(["--scenario", "nope", "--t0", "0:1:1"], capsys)[0] == 2
    # oracle refuses rings beyond its size limit at run time
    assert _run(["--scenario", "oracle", "--N", "20", "--t0", "0:1:1"], capsys)[0] == 1
    assert _run(BASIC + ["--out", str(tmp_path / "missing" / "x.csv")], capsys)[0] == 1


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "magnon_echo.cli"] + BASIC,
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith(MAGIC)
    proc = subprocess.run([sys.executable, "-m", "magnon_echo.cli", "--t0", "0:1:1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2


def test_harper_oracle_matches_analytic(capsys):
    common = ["--N", "8", "--tau", "0.3", "--channel", "project-x", "--m", "3", "--kicks", "0:6:1"]
    _, ana, _ = _run(["--scenario", "harper-echo-qdp"] + common, capsys)
    _, ora, _ = _run(["--scenario", "oracle", "--model", "harper"] + common, capsys)
    a = read_csv(ana, is_text=True)
    o = read_csv(ora, is_text=True)
    assert a["columns"] == o["columns"] == ["t0", "L"]
    assert np.max(np.abs(np.array(a["rows"]) - np.array(o["rows"]))) <= 1e-10


def test_coherent_scenario_ignores_channel(capsys):
    base = ["--scenario", "echo-coherent", "--N", "50", "--t0", "0:2:1"]
    _, plain, _ = _run(base, capsys)
    _, tagged, _ = _run(base + ["--channel", "coherent"], capsys)
    assert read_csv(plain, is_text=True)["rows"] == read_csv(tagged, is_text=True)["rows"]
    assert _run(["--scenario", "echo-single", "--channel", "coherent", "--N", "50", "--t0", "0:2:1"], capsys)[0] == 1
