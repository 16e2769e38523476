import csv
import hashlib
import json

import numpy as np
import pytest

from vilab.cli import main, read_trajectory, write_trajectory
from vilab.config import parse_config
from vilab.initial_data import omega0
from vilab.solver import evolve

SMALL = {
    "construction": {"N": 1},
    "grid": {"n": 256},
    "experiments": {"x_star": "manual", "n_list": [1, 2]},
    "checks": ["conservation", "flow", "lambda_chain", "sector", "riesz", "products", "inflation", "cos2"],
}


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


def _manifest_ok(out):
    man = json.loads((out / "manifest.json").read_text())
    paths = [f["path"] for f in man["files"]]
    assert paths == sorted(paths) and "manifest.json" not in paths
    for f in man["files"]:
        data = (out / f["path"]).read_bytes()
        assert len(data) == f["bytes"]
        assert hashlib.sha256(data).hexdigest() == f["sha256"]
    return paths


def _report_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_synth_writes_fields(small_config, tmp_path):
    out = tmp_path / "synth"
    assert main(["synth", "--config", str(small_config), "--out", str(out)]) == 0
    paths = _manifest_ok(out)
    for name in ("omega0.vil", "beta_n01.vil", "beta_n02.vil", "omega0n_n02.vil", "synth.json", "config.json"):
        assert name in paths
    info = json.loads((out / "synth.json").read_text())
    assert info["n_written"] == [1, 2] and info["x_star"] == [1.0, 1.0]


def test_evolve_then_flow(small_config, tmp_path):
    ev = tmp_path / "evolve"
    assert main(["evolve", "--config", str(small_config), "--out", str(ev)]) == 0
    _manifest_ok(ev)
    rows = list(csv.DictReader((ev / "conservation.csv").open()))
    assert rows and set(rows[0]) == {"t", "name", "value"}
    fl = tmp_path / "flow"
    assert main(["flow", "--config", str(small_config), "--out", str(fl), "--traj", str(ev / "traj")]) == 0
    _manifest_ok(fl)
    with (fl / "flow.csv").open() as fh:
        reader = csv.DictReader(fh)
        assert reader.fieldnames[0] == "t" and "det" in reader.fieldnames
        dets = [float(r["det"]) for r in reader]
    assert max(abs(d - 1.0) for d in dets) <= 1e-6


def test_trajectory_round_trip(tmp_path):
    cfg = parse_config(SMALL)
    traj = evolve(omega0(cfg.construction, cfg.grid), 2e-3, cfg.solver, track_inverse_map=True)
    write_trajectory(traj, tmp_path)
    back = read_trajectory(tmp_path)
    assert np.array_equal(back.times, traj.times)
    for a, b in zip(back.snapshots, traj.snapshots):
        assert np.array_equal(a.values, b.values)


def test_verify_deterministic_across_threads(small_config, tmp_path):
    outs = []
    for threads in (1, 2):
        out = tmp_path / f"v{threads}"
        assert main(["verify", "--config", str(small_config), "--out", str(out),
                     "--threads", str(threads)]) == 0
        _manifest_ok(out)
        outs.append((out / "manifest.json").read_bytes())
    assert outs[0] == outs[1]
    verdict = json.loads((tmp_path / "v1" / "report_verdict.json").read_text())
    assert verdict["ok"] and verdict["counts"]["violated"] == 0


def test_sweep_over_n_pert(tmp_path):
    cfg = dict(SMALL, sweep={"n_pert": [1, 2]}, checks=["inflation"])
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(path), "--out", str(out)])
    assert code in (0, 1)
    _manifest_ok(out)
    rows = _report_rows(out / "sweep.csv")
    for n in (1, 2):
        cell = [r for r in rows if f"cell_n_pert={n}" in r["params"].split(";")]
        names = [r["check"] for r in cell]
        assert names.count("inflation_ratio") + names.count("inflation_skipped") == 1


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"grid": {"n": 100}}))
    assert main(["verify", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "$.grid" in capsys.readouterr().err
    assert main(["verify", "--check", "nonsense", "--out", str(tmp_path / "o")]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == 2


def test_stage_error_exit_3(small_config, tmp_path, capsys):
    code = main(["evolve", "--config", str(small_config), "--out", str(tmp_path / "o"),
                 "--input", str(tmp_path / "nope.vil")])
    assert code == 3
    assert "input" in capsys.readouterr().err
