import json
import math

import pytest

import tilesim


def test_apps_and_keys():
    assert "bfs" in tilesim.app_names()
    assert "tiles_x" in tilesim.config_keys()
    assert "tiles_x = 1" in tilesim.default_config()


def test_closed_forms():
    assert abs(tilesim.murphy_yield(10, 0.07) - 0.5172) < 1e-4
    assert abs(tilesim.voltage(2, 7) - 0.74) < 1e-9
    da = 10 * 0.07
    assert tilesim.murphy_yield(10, 0.07) == pytest.approx(((1 - math.exp(-da)) / da) ** 2)
    assert tilesim.dies_per_wafer(10, 10) > 500


def test_run_bfs(tmp_path):
    r = tilesim.run("bfs", "hand64", ["tiles_x=4", "tiles_y=4"], verbosity=2, frame_us=0.1, out_dir=str(tmp_path))
    assert r["check_ok"], r["check_message"]
    assert r["noc_cycles"] > 0
    assert r["counters"]["msgs.injected"] > 0
    assert r["log"].startswith("RUN app=bfs")
    frames = [l for l in r["log"].splitlines() if l.startswith("FRAME ") and " * * " in l]
    assert len(frames) == r["frames"] > 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["noc_cycles"] == r["noc_cycles"]
    again = tilesim.postprocess(str(tmp_path / "counters.txt"), str(tmp_path / "config.effective"))
    assert again["text"] == (tmp_path / "report.txt").read_text()


def test_hbm_price_doubles(tmp_path):
    tilesim.run("spmv", "hand64", ["tiles_x=8", "tiles_y=8", "spm_mode=cache_direct", "dram.enabled=true"],
                out_dir=str(tmp_path))
    base = tilesim.postprocess(str(tmp_path / "counters.txt"), str(tmp_path / "config.effective"))
    dbl = tilesim.postprocess(str(tmp_path / "counters.txt"), str(tmp_path / "config.effective"),
                              ["hbm_usd_per_gb=15"])
    assert dbl["cost_package_usd"]["hbm"] == 2 * base["cost_package_usd"]["hbm"]


def test_errors():
    with pytest.raises(tilesim.ConfigError):
        tilesim.run("bfs", "hand64", ["no_such_key=1"])
    with pytest.raises(ValueError):
        tilesim.run("nope")
