import json

import numpy as np
import pytest

from keybuf.cli import FADING_COLUMNS, SESSION_COLUMNS, emit_report, fmt_float, run
from keybuf.power_control import FadingConfig, FadingDistribution, simulate_fading_session
from keybuf.scheme import SchemeConfig, SessionReport, run_session

SIM = {"n": 8, "M": 3, "Rs": 0.25, "Rr": 0.5, "C": 1.0, "channel": {"kind": "erasure", "eps1": 0.1, "eps2": 0.5}}
FADE = {"dist": {"kind": "rayleigh", "meanH": 1.0, "meanG": 1.0}, "M": 9, "n": 1000}
AUDIT = {"slots": 3, "N1": 1, "code": {"n": 4, "Rs": 0.25, "Rr": 0.25, "seed": 1},
         "channel": {"kind": "erasure", "eps1": 0.1, "eps2": 0.6}, "keyed_bits": [0, 1, 1], "prefill": 1}


@pytest.fixture
def configs(tmp_path):
    paths = {}
    for name, data in (("sim", SIM), ("fade", FADE), ("audit", AUDIT)):
        paths[name] = tmp_path / f"{name}.json"
        paths[name].write_text(json.dumps(data))
    return paths


def test_capacity_output(capsys):
    assert run(["capacity", "--channel", "erasure", "--eps1", "0.1", "--eps2", "0.5"]) == 0
    assert capsys.readouterr().out.strip() == '{"C":0.9,"Cs":0.4}'


def test_capacity_bad_channel(capsys):
    assert run(["capacity", "--channel", "erasure", "--eps1", "0.5", "--eps2", "0.1"]) == 1


def test_simulate_is_byte_identical(configs, tmp_path):
    for out in ("a", "b"):
        assert run(["simulate", "--config", str(configs["sim"]), "--slots", "1000", "--seed", "7",
                    "--out", str(tmp_path / out)]) == 0
    a = (tmp_path / "a" / "simulate_seed7.csv").read_bytes()
    assert a == (tmp_path / "b" / "simulate_seed7.csv").read_bytes()
    assert a.decode().splitlines()[0] == ",".join(SESSION_COLUMNS)


def test_parallel_seeds_match_serial(configs, tmp_path):
    args = ["simulate", "--config", str(configs["sim"]), "--slots", "50", "--seed", "1", "--seed", "2"]
    assert run(args + ["--out", str(tmp_path / "serial")]) == 0
    assert run(args + ["--jobs", "2", "--out", str(tmp_path / "par")]) == 0
    for seed in (1, 2):
        name = f"simulate_seed{seed}.csv"
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "par" / name).read_bytes()


def test_seed_is_mandatory(configs):
    assert run(["simulate", "--config", str(configs["sim"]), "--slots", "5"]) == 1


def test_unknown_flag_and_bad_config(tmp_path):
    assert run(["simulate", "--bogus"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["simulate", "--config", str(bad), "--slots", "3", "--seed", "1"]) == 1
    bad.write_text(json.dumps({"n": 8, "M": 3, "Rs": 0.375}))
    assert run(["simulate", "--config", str(bad), "--slots", "3", "--seed", "1"]) == 1


def test_fading_csv_columns(configs, capsys):
    assert run(["fading", "--config", str(configs["fade"]), "--slots", "5", "--seed", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(FADING_COLUMNS)
    assert len(lines) == 6


def test_json_format(configs, capsys):
    assert run(["simulate", "--config", str(configs["sim"]), "--slots", "20", "--seed", "1",
                "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["summary"]["slots"] == 20
    assert set(data["records"][0]) == set(SESSION_COLUMNS)


def test_audit_report(configs, capsys):
    assert run(["audit", "--scenario", str(configs["audit"])]) == 0
    good = json.loads(capsys.readouterr().out)
    for key in ("i_joint", "i_wiretap_part", "i_keyed_part", "single_slot_eps"):
        assert key in good
    assert good["i_joint"] == 0.768
    assert run(["audit", "--scenario", str(configs["audit"]), "--negative-control"]) == 0
    bad = json.loads(capsys.readouterr().out)
    assert bad["otp_leakage"] > 0 and not bad["schedule_compliant"]


def test_audit_budget_refusal(tmp_path):
    big = dict(AUDIT, slots=4, code={"n": 8, "Rs": 0.25, "Rr": 0.5, "seed": 1}, keyed_bits=[0, 4, 4, 4],
               prefill=12)
    path = tmp_path / "big.json"
    path.write_text(json.dumps(big))
    assert run(["audit", "--scenario", str(path)]) == 2


def test_waterfill_fields(capsys):
    assert run(["waterfill", "--dist", "rayleigh", "--mean-h", "1", "--mean-g", "1"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert set(data) >= {"lambda", "avg_power", "ergodic_rate", "no_csi_rate"}
    assert data["avg_power"] == pytest.approx(1.0)


@pytest.mark.parametrize("command", ["capacity", "simulate", "fading", "audit", "waterfill"])
def test_help_lists_flags(command, capsys):
    with pytest.raises(SystemExit) as exc:
        run([command, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "--config" in text and "--out" in text and "default" in text


def test_emit_report_schema(tmp_path):
    empty = SessionReport([], 32, 0.0, None, 13)
    path = tmp_path / "deep" / "empty.csv"
    emit_report(empty, "csv", path)
    assert path.read_text() == ",".join(SESSION_COLUMNS) + "\n"
    rep = run_session(SchemeConfig(**{k: v for k, v in SIM.items() if k != "channel"}), 3, np.random.default_rng(0))
    assert emit_report(rep, "csv").splitlines()[1] == "1,0.0625,2,0,0,2,0,0,-1"
    fading = simulate_fading_session(FadingConfig(FadingDistribution.rayleigh()), 2, np.random.default_rng(0))
    assert emit_report(fading, "csv").splitlines()[0].endswith(",H,G,P")


def test_twelve_significant_digits():
    assert fmt_float(1 / 3) == "0.333333333333"
    assert fmt_float(0.9000000000000002) == "0.9"
