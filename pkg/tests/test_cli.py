import csv
import io
import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from hadronpoles import cli, config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ALL = sorted(CONFIGS.glob("*.json"))


def run(argv):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cli.main([str(a) for a in argv])


@pytest.mark.parametrize("path", ALL, ids=[p.stem for p in ALL])
def test_shipped_configs_succeed(path, tmp_path):
    assert run(["analyze", path, "--out", tmp_path]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["schema_version"] == config.SCHEMA_VERSION
    assert all(j["status"] == "ok" for j in rep["jobs"])
    assert (tmp_path / "report.txt").read_text().strip()


def test_resonance_report_content(tmp_path):
    run(["analyze", CONFIGS / "two_channel_resonance.json", "--out", tmp_path])
    rep = json.loads((tmp_path / "report.json").read_text())
    pole = next(j for j in rep["jobs"] if j["name"].startswith("pole"))["result"]
    w = complex(*pole["sqrt_s"])
    assert abs(w - (926.77 - 77.61j)) < 0.01
    assert pole["report"]["sum_residual"] < 1e-8 and pole["sum_rule_ok"]
    assert (tmp_path / "phase_shifts.csv").exists()


def test_jobs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["analyze", CONFIGS / "two_channel_resonance.json", "--out", a, "--jobs", "1"])
    run(["analyze", CONFIGS / "two_channel_resonance.json", "--out", b, "--jobs", "4"])
    ja = json.loads((a / "report.json").read_text())
    jb = json.loads((b / "report.json").read_text())
    ja["config"].pop("output_dir"), jb["config"].pop("output_dir")
    assert ja == jb


def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_config_errors_exit_2(tmp_path, capsys):
    base = json.loads((CONFIGS / "ere_resonance.json").read_text())
    bad = dict(base, schema_version=99)
    assert run(["analyze", _write(tmp_path, bad), "--out", tmp_path]) == 2
    bad = dict(base, model=dict(base["model"], family="nope"))
    assert run(["analyze", _write(tmp_path, bad), "--out", tmp_path]) == 2
    assert "configuration error" in capsys.readouterr().err
    (tmp_path / "broken.json").write_text("{not json")
    assert run(["analyze", tmp_path / "broken.json"]) == 2
    assert run(["analyze", CONFIGS / "ere_resonance.json", "--jobs", "0"]) == 2


def test_all_jobs_failing_exit_3(tmp_path):
    base = json.loads((CONFIGS / "ere_resonance.json").read_text())
    # an ERE resonance has no first-sheet pole, so the search must fail
    cfg = dict(base, analyses=["sum_rule"], poles=[{"sheet": ["I"], "start": [50.0, 10.0], "variable": "k"}])
    assert run(["analyze", _write(tmp_path, cfg), "--out", tmp_path]) == 3
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["jobs"][0]["status"] == "failed"


def test_units_conversion_fm():
    cfg = config.resolve({"schema_version": 1, "kinematics": "nonrelativistic", "units": {"length": "fm"},
                          "model": {"family": "ere", "a": -23.7, "r": 2.7, "mu": 469.459},
                          "analyses": ["ere"]})
    m = config.build_model(cfg)
    assert m.a == pytest.approx(-23.7 / 197.3269804, rel=1e-9)


def _scan(args, tmp_path):
    out = tmp_path / "scan.csv"
    code = run(["scan", *args, "--out", out])
    text = out.read_text() if out.exists() else ""
    return code, [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]


def test_scan_im_G(tmp_path):
    code, rows = _scan([CONFIGS / "two_channel_resonance.json", "--quantity", "im_G", "--grid", "300:1400:12"], tmp_path)
    assert code == 0 and rows[0][:3] == ["sqrt_s_MeV", "im_G_1", "im_G_2"]
    for r in rows[1:]:
        im1, rho1 = float(r[1]), float(r[3])
        assert abs(abs(im1) - rho1) < 1e-14


def test_scan_landscape_minimum_near_pole(tmp_path):
    code, rows = _scan([CONFIGS / "two_channel_resonance.json", "--quantity", "det_landscape",
                        "--grid", "900:960:31", "--grid-im=-100:-60:21", "--sheet", "II,I"], tmp_path)
    assert code == 0
    vals = np.array([[float(x) for x in r] for r in rows[1:]])
    best = vals[np.argmin(vals[:, 2])]
    assert abs(best[0] - 926.77) <= 2.0 and abs(best[1] + 77.61) <= 2.0


def test_scan_branch_point_gives_nan(tmp_path):
    code, rows = _scan([CONFIGS / "two_channel_resonance.json", "--quantity", "abs_T",
                        "--grid", "0:0:1"], tmp_path)
    assert code == 0
    assert rows[1][1:] == ["nan"] * 3


def test_scan_requires_grid_im(tmp_path):
    code, _ = _scan([CONFIGS / "two_channel_resonance.json", "--quantity", "det_landscape", "--grid", "900:960:3"],
                    tmp_path)
    assert code == 2
    code, _ = _scan([CONFIGS / "two_channel_resonance.json", "--quantity", "im_G", "--grid", "bad"], tmp_path)
    assert code == 2
