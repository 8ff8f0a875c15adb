import csv
import json

from ipmlab.cli import main
from ipmlab.config import parse_config
from ipmlab.experiments import cmd_verify, seed_scaling_rows
from ipmlab.fields import Grid2D, riesz_sign_fault

SMALL = ["--n", "64", "--kappa", "0.005"]


def test_bad_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("gamm: 1\n")
    assert main(["verify", "--config", str(bad)]) == 2
    assert "gamm" in capsys.readouterr().err
    assert main(["simulate", "--N", "4", "--N", "5"]) == 2
    assert main(["sweep", "--N", "4"]) == 2


def test_env_override_reaches_cli(tmp_path, monkeypatch):
    monkeypatch.setenv("IPMLAB_GRID__N", "100")
    assert main(["simulate", "--N", "4", "--out", str(tmp_path / "x")]) == 2


def test_simulate_outputs_and_overwrite(tmp_path):
    out = tmp_path / "run"
    code = main(["simulate", "--N", "4", "--out", str(out)] + SMALL)
    assert code in (0, 1)
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] in ("pass", "fail") and man["finished"]
    assert sorted(man["outputs"]) == ["report_N4.json", "series_N4.csv", "theta_N4.svg"]
    rows = list(csv.reader(open(out / "series_N4.csv", newline="")))
    assert rows[0] == ["t", "w1inf", "linf_theta", "besov_low", "besov_high", "u_inf", "flow_disp"]
    rep = json.loads((out / "report_N4.json").read_text())
    assert len(rows) - 1 == rep["steps"] // 1 + 1
    assert main(["simulate", "--N", "4", "--out", str(out)] + SMALL) == 2
    assert main(["simulate", "--N", "4", "--out", str(out), "--force"] + SMALL) in (0, 1)
    svg = (out / "theta_N4.svg").read_text()
    assert "<svg" in svg and "xlink:href=\"http" not in svg


def test_kappa_zero_gives_one_record(tmp_path):
    out = tmp_path / "k0"
    main(["simulate", "--N", "4", "--out", str(out), "--n", "64", "--kappa", "0"])
    rows = list(csv.reader(open(out / "series_N4.csv", newline="")))
    assert len(rows) == 2


def test_outputs_are_deterministic(tmp_path):
    for name in ("a", "b"):
        main(["sweep", "--N", "4", "--N", "5", "--N", "6", "--out", str(tmp_path / name)] + SMALL)
    for f in ("sweep.csv", "series_N4.csv", "series_N5.csv", "series_N6.csv", "sweep.svg"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert len(man["outputs"]) == len(set(man["outputs"]))
    assert "verdict.json" in man["outputs"]
    agg = list(csv.DictReader(open(tmp_path / "a" / "sweep.csv", newline="")))
    assert [r["N"] for r in agg] == ["4", "5", "6"]
    assert all(0.0 <= float(r["M_stride2_drop"]) < 1.0 for r in agg)


def test_seed_scaling_marks_unresolved_rows(tmp_path):
    cfg = parse_config("grid:\n  n: 128\nseed:\n  N: [4, 8, 6]\n")
    rows = seed_scaling_rows(cfg)
    assert [r["N"] for r in rows] == [4, 8, 6]
    assert rows[0]["status"] == "ok" and rows[1]["status"].startswith("skipped")
    code = main(["seed-scaling", "--n", "128", "--N", "4", "--N", "8", "--N", "6", "--out", str(tmp_path / "s")])
    assert code == 1  # fewer than three resolved rows


def test_verify_catches_sign_fault():
    cfg = parse_config("grid:\n  n: 64\n")
    lines = []
    with riesz_sign_fault(Grid2D(4.0, 64)):
        assert cmd_verify(cfg, log=lines.append, only={"operator_identity"}) == 1
    assert lines[0].startswith("[FAIL] operator_identity")
    assert "operator_identity" in lines[-1]
    assert cmd_verify(cfg, log=lines.append, only={"operator_identity"}) == 0


def test_verify_small_grid_passes(tmp_path):
    cfg = parse_config("grid:\n  n: 64\n")
    lines = []
    assert cmd_verify(cfg, tmp_path / "v", log=lines.append) == 0, lines
    man = json.loads((tmp_path / "v" / "manifest.json").read_text())
    assert man["status"] == "pass" and len(man["checks"]) == 9
