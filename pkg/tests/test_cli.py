from __future__ import annotations

import json
import logging
import shutil
import subprocess
import sys

import pytest

from synfeeder.cli import EXIT_CONFIG, EXIT_FEEDER_FAILED, EXIT_OK, main
from synfeeder.loads import feeder_seed

from conftest import FIXTURES


@pytest.fixture
def region(tmp_path):
    dst = tmp_path / "region"
    shutil.copytree(FIXTURES / "region", dst)
    return dst


def manifest(out):
    return [json.loads(line) for line in (out / "manifest.jsonl").read_text().splitlines()]


def snapshot(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_fixture_region_two_feeders(region, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--config", str(region / "region.toml"), "--out", str(out)]) == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert [n for n in names if n.endswith(".dss")] == ["feeder_s1.dss", "feeder_s2.dss"]
    assert [n for n in names if n.endswith(".geojson")] == ["feeder_s1.geojson", "feeder_s2.geojson"]
    rows = manifest(out)
    assert [r["substation"] for r in rows] == ["s1", "s2"]
    assert all(r["status"] == "ok" and r["error"] is None for r in rows)
    assert rows[0]["seed"] == feeder_seed(85212, "s1")
    assert "s1: ok" in capsys.readouterr().out


def test_summary_meets_threshold(region, tmp_path):
    out = tmp_path / "out"
    main(["--config", str(region / "region.toml"), "--out", str(out)])
    for sid, p_n in (("s1", 40.47), ("s2", 55.07)):
        s = json.loads((out / f"feeder_{sid}.summary.json").read_text())
        assert s["min_v_pu"] >= s["v_th"] == 0.985
        assert abs(s["total_p_mw"] - p_n) <= 1e-9 * p_n


def test_byte_identical_reruns(region, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["--config", str(region / "region.toml"), "--out", str(a)])
    main(["--config", str(region / "region.toml"), "--out", str(b)])
    assert snapshot(a) == snapshot(b)


def test_seed_override_changes_loads_only(region, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["--config", str(region / "region.toml"), "--out", str(a)])
    main(["--config", str(region / "region.toml"), "--out", str(b), "--seed", "7"])
    rows = manifest(b)
    assert rows[0]["global_seed"] == 7 and rows[0]["seed"] == feeder_seed(7, "s1")
    assert rows[0]["config_hash"] != manifest(a)[0]["config_hash"]
    assert (a / "feeder_s2.dss").read_bytes() != (b / "feeder_s2.dss").read_bytes()


def test_substation_filter(region, tmp_path):
    full, only = tmp_path / "full", tmp_path / "only"
    main(["--config", str(region / "region.toml"), "--out", str(full)])
    assert main(["--config", str(region / "region.toml"), "--out", str(only), "--substation", "s2"]) == EXIT_OK
    assert [r["substation"] for r in manifest(only)] == ["s2"]
    assert not (only / "feeder_s1.dss").exists()
    # the partition still uses every substation, so s2 is unchanged
    assert (only / "feeder_s2.dss").read_bytes() == (full / "feeder_s2.dss").read_bytes()


def test_empty_substation_file(region, tmp_path, caplog):
    (region / "substations.csv").write_text("id,lat,lon,p_mw,q_mvar,base_kv\n")
    out = tmp_path / "out"
    with caplog.at_level(logging.WARNING):
        assert main(["--config", str(region / "region.toml"), "--out", str(out)]) == EXIT_OK
    assert (out / "manifest.jsonl").read_text() == ""
    assert "no substations" in caplog.text


def test_failure_isolated(region, tmp_path):
    good, bad = tmp_path / "good", tmp_path / "bad"
    main(["--config", str(region / "region.toml"), "--out", str(good)])
    csv = (region / "substations.csv").read_text().replace("40.47,11.14", "4000.0,11.14")
    (region / "substations.csv").write_text(csv)
    assert main(["--config", str(region / "region.toml"), "--out", str(bad)]) == EXIT_FEEDER_FAILED
    rows = {r["substation"]: r for r in manifest(bad)}
    assert rows["s1"]["status"] == "failed" and rows["s1"]["error"]
    assert rows["s1"]["files"] == []
    assert rows["s2"]["status"] == "ok"
    for suffix in (".dss", ".geojson", ".summary.json"):
        assert (bad / f"feeder_s2{suffix}").read_bytes() == (good / f"feeder_s2{suffix}").read_bytes()


@pytest.mark.parametrize("edit", [
    ("v_th = 0.985", "v_th = 1.5"),
    ("v_th = 0.985", "v_thresh = 0.9"),
    ('cable_catalog = "cables.csv"', 'cable_catalog = "missing.csv"'),
    ('epsilon_dist = "t_location_scale"', 'epsilon_dist = "gauss"'),
    ("rng_seed = 85212", "rng_seed = = 1"),
])
def test_config_errors_exit_2(region, tmp_path, edit, capsys):
    cfg = region / "region.toml"
    cfg.write_text(cfg.read_text().replace(*edit))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    assert "synfeeder:" in capsys.readouterr().err
    assert not (tmp_path / "out" / "manifest.jsonl").exists()


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "nope.toml")]) == EXIT_CONFIG


def test_bad_seed_rejected():
    with pytest.raises(SystemExit):
        main(["--config", "x.toml", "--seed", "-1"])


def test_module_entry_point(region, tmp_path):
    out = tmp_path / "out"
    proc = subprocess.run([sys.executable, "-m", "synfeeder", "--config", str(region / "region.toml"),
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(manifest(out)) == 2
