import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from removability.cli import EXIT_ERROR, EXIT_NOT_CONCLUDED, EXIT_REMOVABLE, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def run(*argv):
    return main([str(a) for a in argv])


# -- check ----------------------------------------------------------------


def test_check_removable_exit_code(tmp_path):
    assert run("check", "--config", CONFIGS / "koch_logpower.json", "--out", tmp_path) == EXIT_REMOVABLE
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    assert verdict["overall"] == "Removable"
    assert verdict["spec"]["theorem"] == "T2.1"
    assert {c["label"] for c in verdict["conditions"]} >= {"keller_osserman", "weight_integral", "decay_limit"}


def test_check_not_concluded_exit_code(tmp_path):
    code = run("check", "--config", CONFIGS / "koch_logpower_boundary.json", "--out", tmp_path)
    assert code == EXIT_NOT_CONCLUDED
    assert json.loads((tmp_path / "verdict.json").read_text())["overall"] == "NotConcluded"


def test_check_closed_form(tmp_path):
    assert run("check", "--config", CONFIGS / "brezis_veron.json", "--out", tmp_path) == EXIT_REMOVABLE
    assert json.loads((tmp_path / "verdict.json").read_text())["path"] == "ClosedForm"


@pytest.mark.parametrize(
    "patch",
    [
        {"sigma": None},  # missing field
        {"theorem": "T3.1"},
        {"schema": 2},
        {"surprise": 1},  # unknown field
        {"g": {"family": "power", "lam": 0.5}},
        {"set": {"kind": "koch", "n": 3}},
        {"theorem": "C2.1"},  # corollary with a non power-law g
    ],
    ids=["missing", "theorem", "schema", "extra", "lam", "koch3d", "corollary"],
)
def test_invalid_configs_exit_2(tmp_path, patch, capsys):
    cfg = json.loads((CONFIGS / "koch_logpower.json").read_text())
    for key, value in patch.items():
        if value is None:
            cfg.pop(key)
        else:
            cfg[key] = value
    path = write(tmp_path, "bad.json", cfg)
    assert run("check", "--config", path, "--out", tmp_path) == EXIT_ERROR
    assert "error:" in capsys.readouterr().err
    assert not (tmp_path / "verdict.json").exists()


def test_missing_and_malformed_files_exit_2(tmp_path):
    assert run("check", "--config", tmp_path / "nope.json") == EXIT_ERROR
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("check", "--config", bad) == EXIT_ERROR
    bad.write_text("[1, 2]")
    assert run("check", "--config", bad) == EXIT_ERROR


def test_seed_override_is_recorded(tmp_path):
    run("check", "--config", CONFIGS / "koch_logpower.json", "--seed", 7, "--samples", 5000, "--out", tmp_path)
    spec = json.loads((tmp_path / "verdict.json").read_text())["spec"]
    assert (spec["seed"], spec["samples"]) == (7, 5000)


def test_check_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run("check", "--config", CONFIGS / "koch_logpower.json", "--seed", 3, "--out", out)
    assert (a / "verdict.json").read_bytes() == (b / "verdict.json").read_bytes()


# -- dimension ------------------------------------------------------------


def test_dimension_outputs(tmp_path):
    assert run("dimension", "--config", CONFIGS / "koch_dimension.json", "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["dimension"] == pytest.approx(1.2619, abs=0.05)
    assert summary["lower"] <= summary["upper"]
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert len(rows) == 5
    assert set(rows[0]) == {"r", "value", "log_r", "log_value", "local_slope"}


def test_sausage_dimension_command(tmp_path):
    cfg = write(tmp_path, "d.json", {"schema": 1, "set": {"kind": "ball", "n": 2}, "method": "sausage", "i_min": 2, "i_max": 7})
    assert run("dimension", "--config", cfg, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "summary.json").read_text())["dimension"] == pytest.approx(1.0, abs=0.05)


def test_dimension_scale_error_exits_2(tmp_path):
    cfg = write(tmp_path, "d.json", {"schema": 1, "set": {"kind": "koch", "depth": 3}, "i_min": 2, "i_max": 8})
    assert run("dimension", "--config", cfg, "--out", tmp_path) == EXIT_ERROR


# -- cover ----------------------------------------------------------------


def test_cover_outputs(tmp_path):
    assert run("cover", "--config", CONFIGS / "segment_cover.json", "--out", tmp_path) == 0
    result = json.loads((tmp_path / "cover.json").read_text())
    assert result["max_multiplicity"] <= result["multiplicity_bound"] == 25
    assert result["psi_min_on_omega"] == 1.0
    assert result["psi_max_outside"] == 0.0
    assert result["cm_bound"]["ratio"] < 2.0
    assert (tmp_path / "probes.csv").read_text().startswith("r,alpha,order")


def test_cover_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run("cover", "--config", CONFIGS / "square_cover.json", "--out", out)
    for name in ("cover.json", "probes.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# -- examples and entry point ---------------------------------------------


@pytest.mark.slow
def test_examples_report(tmp_path):
    assert run("examples", "--samples", 5000, "--out", tmp_path) == 0
    text = (tmp_path / "report.md").read_text()
    assert "λ(2 − 1.26185950714 − m) − 2 + 1.26185950714 − σ > 0" in text


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "removability", "check", "--config", str(CONFIGS / "brezis_veron.json"),
         "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == EXIT_REMOVABLE
    assert proc.stdout.strip() == "Removable"


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
