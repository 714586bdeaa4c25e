import json
import os

import pandas as pd
import pytest

from app.main import frequency_range, main

TINY_CONFIG = {
    "space": {"dimensions": [
        {"name": "radius", "values": [0.0, 0.5, 1.0], "best_quality": 1.0},
        {"name": "resolution", "labels": ["half", "full"], "best_quality": "full"},
    ]},
    "lods": [{"name": "near", "area_threshold": 1.0}, {"name": "far", "area_threshold": 0.4}],
    "hardware_grid": {"cpu_bins": [1500, 2500], "gpu_bins": {"min": 1000, "max": 2000, "count": 3}},
    "oracle": {"cpu_freq_range": [1500, 2500], "gpu_freq_range": [1000, 2000], "seed": 5},
    "train": {"n_estimators": 10, "depth_range": [1, 2]},
    "scenario": {"frames": 30, "lod_period": 5, "source": {"kind": "random_walk", "seed": 2}},
    "sweep": {"cpu_freq": 2000},
}


def _run_pipeline(config_path):
    for argv in (
        ["generate-data", "--config", config_path, "--samples", "300"],
        ["train", "--config", config_path, "--target", "ssim"],
        ["train", "--config", config_path, "--target", "time"],
        ["build-lut", "--config", config_path],
    ):
        assert main(argv) == 0


def _read(path):
    with open(path, "rb") as f:
        return f.read()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config_path = str(root / "tiny.json")
    with open(config_path, "w", encoding="utf-8") as f:
        json.dump(TINY_CONFIG, f)
    _run_pipeline(config_path)
    return root, config_path


def test_pipeline_writes_default_paths(workspace):
    root, _ = workspace
    for name in ("dataset.csv", "phi.json", "psi.json", "table.lut"):
        assert (root / "out" / name).is_file()
    assert len(pd.read_csv(root / "out" / "dataset.csv")) == 300


def test_rerun_is_byte_identical(workspace):
    root, config_path = workspace
    names = ("dataset.csv", "phi.json", "psi.json", "table.lut")
    before = {name: _read(root / "out" / name) for name in names}
    _run_pipeline(config_path)
    assert {name: _read(root / "out" / name) for name in names} == before


def test_query_prints_parameter_labels(workspace, capsys):
    root, config_path = workspace
    lut = str(root / "out" / "table.lut")
    assert main(["query", "--lut", lut, "--lod", "1", "--cpu", "2100", "--gpu", "1600", "--config", config_path]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("radius=")
    assert lines[1] in ("resolution=half", "resolution=full")
    assert lines[2].startswith("cell=(1,1,1) cpu_bin=2500 gpu_bin=1500")


def test_query_without_config_prints_levels(workspace, capsys):
    root, _ = workspace
    assert main(["query", "--lut", str(root / "out" / "table.lut"), "--lod", "0", "--cpu", "1500", "--gpu", "1000"]) == 0
    out = capsys.readouterr().out
    assert "resolution=" in out and "cell=(0,0,0)" in out


def test_query_with_bad_lod_fails(workspace):
    root, _ = workspace
    assert main(["query", "--lut", str(root / "out" / "table.lut"), "--lod", "5", "--cpu", "2000", "--gpu", "1500"]) == 1


@pytest.mark.parametrize("iters", ["2000", "2e3"])
def test_bench_prints_latency(workspace, capsys, iters):
    root, _ = workspace
    assert main(["bench", "--lut", str(root / "out" / "table.lut"), "--iters", iters, "--seed", "3"]) == 0
    assert capsys.readouterr().out.startswith("iterations=2000 ")


def test_evaluate_writes_report_with_reference(workspace, capsys):
    root, config_path = workspace
    assert main(["evaluate", "--config", config_path]) == 0
    summary = pd.read_csv(root / "out" / "report" / "summary.csv")
    assert summary.loc[0, "frames"] == 30
    assert "reference_time_reduction_pct" in summary.columns
    assert len(pd.read_csv(root / "out" / "report" / "frames.csv")) == 30
    assert "time_reduction_pct=" in capsys.readouterr().out


def test_sweep_writes_one_row_per_frequency(workspace):
    root, config_path = workspace
    out = str(root / "sweep.csv")
    assert main(["sweep", "--config", config_path, "--from", "1000", "--to", "2000", "--step", "10", "--out", out]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 101
    assert frame["gpu_freq_mhz"].iloc[-1] == 2000.0


def test_ablation_writes_json(workspace):
    root, config_path = workspace
    out = str(root / "ablation" / "record.json")
    assert main(["ablation", "--config", config_path, "--out", out]) == 0
    with open(out, encoding="utf-8") as f:
        record = json.load(f)
    assert record["cells"] == 2 * 2 * 3
    assert record["match_rate"] == 1.0


def test_missing_model_fails(workspace, tmp_path):
    _, config_path = workspace
    missing = str(tmp_path / "nope.json")
    assert main(["build-lut", "--config", config_path, "--phi", missing, "--out", str(tmp_path / "t.lut")]) == 1


def test_bad_config_fails(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({**TINY_CONFIG, "extra": True}), encoding="utf-8")
    assert main(["generate-data", "--config", str(path), "--samples", "10"]) == 1


@pytest.mark.parametrize("argv", [
    ["generate-data", "--config", "x.json", "--samples", "0"],
    ["train", "--config", "x.json", "--target", "foo"],
    ["bench", "--lut", "x.lut", "--iters", "10"],
    ["bench", "--lut", "x.lut", "--iters", "5e2"],
    ["bench", "--lut", "x.lut", "--iters", "1500.5"],
    ["sweep", "--config", "x.json", "--from", "2000", "--to", "1000", "--step", "10"],
    ["sweep", "--config", "x.json", "--from", "1000", "--to", "2000", "--step", "0"],
])
def test_usage_errors_exit_with_code_2(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_frequency_range_is_inclusive():
    assert frequency_range(1000, 1030, 10) == [1000, 1010, 1020, 1030]
    assert frequency_range(1500, 1500, 10) == [1500]
