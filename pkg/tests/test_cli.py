import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest

from talbot import cli, pairings
from talbot.carpet import read_pgm
from talbot.testfns import QuadratureError


def run_json(capsys, *argv):
    status = cli.main(list(argv))
    out = capsys.readouterr().out
    return status, (json.loads(out) if out else None)


def test_gauss_gamma(capsys):
    status, out = run_json(capsys, "gauss", "--gamma", "1", "3", "0")
    assert status == 0
    assert set(out) == {"p", "q", "m", "value_re", "value_im", "modulus", "sqrt_q", "via_cases_re", "via_cases_im"}
    assert out["modulus"] == pytest.approx(math.sqrt(3), abs=1e-12)
    assert complex(out["value_re"], out["value_im"]) == pytest.approx(complex(out["via_cases_re"], out["via_cases_im"]))


def test_gauss_plain_sum(capsys):
    status, out = run_json(capsys, "gauss", "--g", "1", "0", "4")
    assert status == 0
    assert complex(out["value_re"], out["value_im"]) == pytest.approx(2 + 2j)


@pytest.mark.parametrize("argv", [["gauss"], ["gauss", "--gamma", "1", "3", "0", "--g", "1", "0", "3"]])
def test_gauss_needs_exactly_one_form(argv, capsys):
    assert cli.main(argv) == 1
    assert "exactly one" in capsys.readouterr().err


def test_revival_half(capsys):
    status, out = run_json(capsys, "revival", "--p", "1", "--q", "2")
    assert status == 0
    assert out["shift"] == 0.5
    assert [w["modulus"] for w in out["weights"]] == pytest.approx([0.7071067811865476] * 2, abs=1e-10)


def test_revival_check(capsys):
    status, out = run_json(capsys, "revival", "--p", "2", "--q", "5", "--check")
    assert status == 0
    assert out["check"]["passed"] is True
    assert out["check"]["max_error"] < 1e-6


def test_revival_rejects_non_coprime(capsys):
    assert cli.main(["revival", "--p", "2", "--q", "4"]) == 1
    assert "not coprime" in capsys.readouterr().err


def test_bad_flag_exits_with_validation_status(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["gauss", "--bogus"])
    assert exc.value.code == 1


def test_missing_subcommand(capsys):
    assert cli.main([]) == 1
    assert "no subcommand" in capsys.readouterr().err


def test_config_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"subcommand": "revival", "q": 3}))
    status, out = run_json(capsys, "--config", str(cfg), "revival", "--p", "1", "--q", "2")
    assert status == 0
    assert out["q"] == 3 and len(out["weights"]) == 3


def test_config_alone(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"subcommand": "pair", "line": "horizontal", "zeta": "0", "phi": {"type": "gaussian"}}))
    status, out = run_json(capsys, "--config", str(cfg))
    assert status == 0
    assert out["value_re"] == pytest.approx(1.0864348112133080, abs=1e-14)


def test_config_unknown_subcommand(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"subcommand": "plot"}))
    assert cli.main(["--config", str(cfg)]) == 1
    assert "unknown subcommand" in capsys.readouterr().err


def test_unreadable_config(tmp_path, capsys):
    assert cli.main(["--config", str(tmp_path / "missing.json")]) == 1


def test_trigpoly_from_config(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(
        json.dumps(
            {"subcommand": "pair", "line": "horizontal", "zeta": "1/2", "phi": {"type": "trigpoly", "coeffs": [[1, 1, 0]]}}
        )
    )
    status, out = run_json(capsys, "--config", str(cfg))
    # pairing picks the coefficient of n = -1: exp(-i pi / 2)
    assert status == 0
    assert complex(out["value_re"], out["value_im"]) == pytest.approx(-1j, abs=1e-15)
    assert out["tail_bound"] == 0


def test_pair_tolerance_failure(capsys):
    status = cli.main(["pair", "--line", "vertical", "--xi", "0", "--field", "w", "--r", "100", "--tol", "1e-3"])
    assert status == 2
    assert "numerical failure" in capsys.readouterr().err


def test_quadrature_failure_maps_to_status_2(monkeypatch, capsys):
    def boom(*a, **k):
        raise QuadratureError("maximum number of subdivisions reached")

    monkeypatch.setattr(pairings, "pair_line", boom)
    assert cli.main(["pair", "--line", "vertical", "--xi", "0"]) == 2


def test_pair_line_fields_must_match(capsys):
    assert cli.main(["pair", "--line", "vertical"]) == 1
    assert "vertical line takes" in capsys.readouterr().err


def test_sweep_rejects_small_order(capsys):
    assert cli.main(["sweep", "--line", "horizontal", "--zeta", "1/3", "--s", "0.5"]) == 1
    assert "s > 1/2" in capsys.readouterr().err


def test_sweep_csv_is_deterministic(tmp_path, monkeypatch):
    argv = ["sweep", "--line", "horizontal", "--zeta", "1/3", "--phi", "gaussian", "--s", "1", "--r-grid", "10,100,1000"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(argv + ["-o", str(a)]) == 0
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.main(argv + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == ",".join(pairings.SweepRecord.CSV_COLUMNS)
    assert len(lines) == 4


def test_bad_thread_count(monkeypatch, capsys):
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    assert cli.main(["sweep", "--line", "vertical", "--xi", "0", "--r-grid", "10,20,30"]) == 1
    assert cli.THREADS_ENV in capsys.readouterr().err


def test_carpet_outputs(tmp_path):
    img, row = tmp_path / "c.pgm", tmp_path / "row.csv"
    argv = ["carpet", "--width", "64", "--height", "32", "--sigma", "0.02", "--n-max", "400", "--row", "8"]
    assert cli.main(argv + ["-o", str(img), "--row-output", str(row)]) == 0
    pix = read_pgm(img.read_bytes())
    assert pix.shape == (32, 64) and pix.max() == 65535
    assert row.read_text().splitlines()[0] == "xi,intensity"
    first = img.read_bytes()
    assert cli.main(argv + ["-o", str(img), "--row-output", str(row)]) == 0
    assert img.read_bytes() == first


def test_carpet_needs_output_and_mollifier(tmp_path, capsys):
    assert cli.main(["carpet", "--width", "8", "--height", "2"]) == 1
    assert cli.main(["carpet", "--sigma", "0", "-o", str(tmp_path / "x.pgm")]) == 1


def test_json_numbers_have_17_digits():
    text = cli.dumps({"a": 0.1, "b": float("nan"), "c": [1, math.inf], "d": Fraction(1, 3), "e": True})
    assert '"a": 0.10000000000000001' in text
    loaded = json.loads(text)
    assert loaded["b"] is None and loaded["c"] == [1, None] and loaded["d"] == "1/3" and loaded["e"] is True


@pytest.mark.parametrize("text, expected", [("1/3", Fraction(1, 3)), ("0.25", 0.25), ("-2/4", Fraction(-1, 2)), (3, Fraction(3))])
def test_parse_real(text, expected):
    got = cli.parse_real(text)
    assert got == expected and type(got) is type(expected)


@pytest.mark.parametrize("text", ["abc", "1/0"])
def test_parse_real_rejects(text):
    with pytest.raises(cli.ConfigError):
        cli.parse_real(text)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "talbot", "gauss", "--gamma", "1", "2", "1"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["q"] == 2
