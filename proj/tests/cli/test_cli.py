"""End-to-end checks of the hyforest command line (path in HYFOREST_CLI)."""

import csv
import filecmp
import hashlib
import json
import os
import shutil
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("HYFOREST_CLI", "hyforest")
HOAS = ["52.45", "-65.22", "86.34", "94.89", "95.41"]


def run(*args, check=None):
    p = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check is not None:
        assert p.returncode == check, p.stdout + p.stderr
    return p


def write_config(path, doc):
    path.write_text(json.dumps(doc))
    return path


def small_cfg(tmp_path, **scene):
    doc = {"scene": {"rows": 12, "cols": 12, **scene}, "train": {"epochs": 3}}
    return write_config(tmp_path / "cfg.json", doc)


def rewrite_band(bundle, name, values_bytes):
    (bundle / f"{name}.band").write_bytes(values_bytes)
    manifest = json.loads((bundle / "manifest.json").read_text())
    for b in manifest["bands"]:
        if b["name"] == name:
            b["sha256"] = hashlib.sha256(values_bytes).hexdigest()
    (bundle / "manifest.json").write_text(json.dumps(manifest))


def drop_band(bundle, name):
    manifest = json.loads((bundle / "manifest.json").read_text())
    manifest["bands"] = [b for b in manifest["bands"] if b["name"] != name]
    (bundle / "manifest.json").write_text(json.dumps(manifest))
    (bundle / f"{name}.band").unlink()


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    cfg = write_config(root / "cfg.json", {"scene": {"rows": 12, "cols": 12, "noise": {"looks": 1e9}},
                                           "train": {"epochs": 3}})
    run("simulate", "--config", cfg, "--seed", 7, "--out", root / "a", check=0)
    return root, cfg


def test_simulate_writes_one_bundle_per_acquisition(sim):
    root, _ = sim
    names = sorted(p.name for p in (root / "a").iterdir() if p.is_dir())
    assert names == sorted(f"hoa_{h}" for h in HOAS)
    prov = json.loads((root / "a" / "provenance.json").read_text())
    assert prov["seed"] == 7
    assert prov["command"] == "simulate"
    for rel, digest in prov["files"].items():
        assert hashlib.sha256((root / "a" / rel).read_bytes()).hexdigest() == digest


def test_simulate_is_reproducible(sim):
    root, cfg = sim
    run("simulate", "--config", cfg, "--seed", 7, "--out", root / "b", check=0)
    cmp = filecmp.dircmp(root / "a", root / "b")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for sub in cmp.subdirs.values():
        assert not sub.diff_files and not sub.left_only and not sub.right_only


def test_invalid_config_exit_code(tmp_path):
    cfg = write_config(tmp_path / "bad.json", {"scene": {"rows": 0}})
    p = run("simulate", "--config", cfg, "--out", tmp_path / "o", check=2)
    assert "rows" in p.stderr


def test_io_error_exit_code(tmp_path):
    run("invert", "--scene", tmp_path / "nowhere", "--oracle-profile", "--out", tmp_path / "o", check=3)


@pytest.mark.parametrize("variant,width", [("C", 5), ("D", 9)])
def test_train_records_input_width(sim, tmp_path, variant, width):
    root, cfg = sim
    scenes = [x for h in ("52.45", "-65.22", "95.41") for x in ("--scene", root / "a" / f"hoa_{h}")]
    p = run("train", "--config", cfg, "--variant", variant, "--out", tmp_path / "m", *scenes, check=0)
    assert "final validation loss" in p.stdout
    assert json.loads((tmp_path / "m" / "model_best.json").read_text())["input_width"] == width
    with open(tmp_path / "m" / "history.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["epoch", "train_loss", "val_loss"]
    assert len(rows) == 4


def test_train_missing_band_names_it(sim, tmp_path):
    root, cfg = sim
    scene = tmp_path / "s"
    shutil.copytree(root / "a" / "hoa_52.45", scene)
    drop_band(scene, "swir2")
    p = run("train", "--config", cfg, "--variant", "D", "--scene", scene, "--out", tmp_path / "m", check=2)
    assert "swir2" in p.stderr


def test_invert_oracle_masks_and_missing_kz(sim, tmp_path):
    root, cfg = sim
    scene = tmp_path / "s"
    shutil.copytree(root / "a" / "hoa_52.45", scene)
    mask = bytearray((scene / "mask.band").read_bytes())
    mask[0:4] = b"\x00\x00\x00\x00"
    rewrite_band(scene, "mask", bytes(mask))
    p = run("invert", "--config", cfg, "--scene", scene, "--oracle-profile", "--out", tmp_path / "o", check=0)
    line = [l for l in p.stdout.splitlines() if l.startswith("height RMSE (kz*h in [0.3, 2.8])")][0]
    assert float(line.split(":")[1].split()[0]) < 0.05
    h_v = (tmp_path / "o" / "h_v.band").read_bytes()
    assert len(h_v) == 4 * 144
    assert h_v[0:4] == b"\x00\x3c\x1c\xc6"  # -9999 in the masked cell
    drop_band(scene, "kz_0")
    run("invert", "--config", cfg, "--scene", scene, "--oracle-profile", "--out", tmp_path / "o2", check=2)


def test_evaluate_tables(sim, tmp_path):
    root, cfg = sim
    args = []
    for h in HOAS:
        out = tmp_path / f"inv_{h}"
        run("invert", "--config", cfg, "--scene", root / "a" / f"hoa_{h}", "--oracle-profile", "--out", out, check=0)
        args += ["--heights", out, "--scene", root / "a" / f"hoa_{h}"]
    run("evaluate", "--config", cfg, "--out", tmp_path / "ev", *args, check=0)
    with open(tmp_path / "ev" / "eval_table.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["scene", "rmse_m", "mae_m", "r2"]
    assert len(rows) == 7
    assert rows[-1][0] == "Overall"
    for name in ("slope_bins.csv", "density.csv", "provenance.json"):
        assert (tmp_path / "ev" / name).exists()
    assert any(p.suffix == ".ppm" for p in (tmp_path / "ev").iterdir())

    # heights equal to the reference
    exact = tmp_path / "exact"
    shutil.copytree(tmp_path / "inv_52.45", exact)
    ref = root / "a" / "hoa_52.45"
    rewrite_band(exact, "h_v", (ref / "h_ref.band").read_bytes())
    rewrite_band(exact, "valid", b"\x00\x00\x80\x3f" * 144)
    run("evaluate", "--config", cfg, "--out", tmp_path / "ev2", "--heights", exact, "--scene", ref, check=0)
    with open(tmp_path / "ev2" / "eval_table.csv") as f:
        overall = list(csv.reader(f))[-1]
    assert float(overall[1]) == 0.0
    assert float(overall[3]) == 1.0

    # nothing valid
    empty = tmp_path / "empty"
    shutil.copytree(tmp_path / "inv_52.45", empty)
    rewrite_band(empty, "valid", b"\x00\x00\x00\x00" * 144)
    p = run("evaluate", "--config", cfg, "--out", tmp_path / "ev3", "--heights", empty, "--scene", ref, check=2)
    assert "no valid pixels" in p.stderr

    # grid mismatch
    other = tmp_path / "other"
    run("simulate", "--config", write_config(tmp_path / "c8.json", {"scene": {"rows": 8, "cols": 8}}), "--out", other,
        check=0)
    run("evaluate", "--config", cfg, "--out", tmp_path / "ev4", "--heights", tmp_path / "inv_52.45", "--scene",
        other / "hoa_52.45", check=2)
