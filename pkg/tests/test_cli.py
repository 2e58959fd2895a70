import json
from pathlib import Path

import pytest

from macregions.cli import EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, REGION_HEADER, SIM_HEADER, csv_body, main

ROOT = Path(__file__).resolve().parents[1]
SWITCH = str(ROOT / "channels" / "switch.json")


def _region(tmp_path, name):
    out = tmp_path / name
    code = main(["region", "--channel", SWITCH, "--bound", "prop1", "--mode", "decoupled", "--seed", "7",
                 "--lambda-points", "9", "--out", str(out)])
    assert code == EXIT_OK
    return out


def test_region_smoke_and_reproducible(tmp_path):
    a = _region(tmp_path, "a.csv")
    b = _region(tmp_path, "b.csv")
    text = a.read_text()
    assert text.startswith("# manifest ")
    manifest = json.loads(text.splitlines()[0][len("# manifest "):])
    assert manifest["subcommand"] == "region" and manifest["seed"] == 7
    assert manifest["inputs"][SWITCH].startswith("sha256:")
    body = csv_body(text)
    assert body.splitlines()[0] == ",".join(REGION_HEADER)
    assert body == csv_body(b.read_text())
    side = json.loads(Path(str(a) + ".json").read_text())
    assert side["max_r1"] == pytest.approx(0.5, abs=1e-3)
    assert side["max_sum"] == pytest.approx(1.0, abs=1e-3)


def test_gaussian_json(capsys):
    assert main(["gaussian", "--model", "example4", "--P1", "0.5", "--P2", "0.5", "--N", "0.5", "--Q", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) >= {"value", "rho_star"}
    assert 0.0 <= out["rho_star"] <= 1.0


def test_fme_byte_stable(capsys):
    assert main(["fme", "--system", "appendixE"]) == 0
    first = capsys.readouterr().out
    assert main(["fme", "--system", "appendixE"]) == 0
    assert capsys.readouterr().out == first
    assert json.loads(first)["golden_match"] is True


def test_usage_error_exit_code(capsys):
    assert main(["region", "--bogus"]) == EXIT_USAGE
    assert main(["region", "--chan", SWITCH, "--bound", "prop1"]) == EXIT_USAGE  # no abbreviations


def test_validation_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"sizes": {"S": 1, "X1": 2, "X2": 2, "Y": 2}, "Q_S": [1.0], "W": [[[[0.7, 0.7]]]]}))
    assert main(["channel", "validate", str(bad)]) == EXIT_VALIDATION
    assert main(["channel", "validate", str(tmp_path / "missing.json")]) == EXIT_VALIDATION
    assert main(["gaussian", "--model", "remark7", "--P1", "-1", "--P2", "1", "--N", "1", "--Q", "1"]) == EXIT_VALIDATION


def test_channel_export_round_trip(tmp_path, capsys):
    out = tmp_path / "helper.json"
    assert main(["channel", "export", "additive-binary-helper", "--param", "p=0.1", "--out", str(out)]) == 0
    assert main(["channel", "validate", str(out)]) == 0
    assert main(["channel", "validate", SWITCH]) == 0


def test_simulate_csv(tmp_path, capsys):
    csv_path = tmp_path / "sim.csv"
    code = main(["simulate", "--channel", "builtin:additive-binary-helper", "--param", "p=0.1", "--rc", "0",
                 "--r1", "0", "--n", "4,6", "--trials", "5", "--seed", "3", "--csv", str(csv_path)])
    assert code == 0
    body = csv_body(csv_path.read_text()).splitlines()
    assert body[0] == ",".join(SIM_HEADER)
    assert len(body) == 3
    assert all(float(line.split(",")[3]) == 0.0 for line in body[1:])


def test_sum_capacity(capsys):
    assert main(["sum-capacity", "--channel", "builtin:switch"]) == 0
    assert "1.0" in capsys.readouterr().out
