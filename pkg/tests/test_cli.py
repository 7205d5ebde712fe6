import json
import os

import pytest

from slelab import cli


def _files(d):
    return sorted(os.listdir(d)) if os.path.isdir(d) else []


def test_unknown_flag_is_usage_error(tmp_path):
    out = tmp_path / "o"
    assert cli.run(["sle-trace", "--bogus", "1", "--out", str(out)]) == 64
    assert _files(out) == []


def test_conflicting_params(tmp_path):
    out = tmp_path / "o"
    assert cli.run(["sle-trace", "--kappa", "2", "--theta", "0.5", "--out", str(out)]) == 64
    assert _files(out) == []


def test_capacity_check(tmp_path):
    out = tmp_path / "o"
    assert cli.run(["capacity-check", "--n-drivings", "3", "--max-steps", "1000",
                    "--out", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["ok"] and m["subcommand"] == "capacity-check"
    assert m["config"]["n_drivings"] == 3


def test_manifest_rerun_is_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.run(["sle-trace", "--kappa", "3", "--dt", "0.01", "--n-paths", "2",
                    "--seed", "4", "--out", str(a)]) == 0
    assert cli.run(["sle-trace", "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    ma = json.loads((a / "manifest.json").read_text())
    for f in ma["outputs"]:
        if f.endswith(".png") or f.endswith(".csv") or f.endswith(".json"):
            assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_flag_beats_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kappa": 2.0, "dt": 0.01, "seed": 1}))
    out = tmp_path / "o"
    assert cli.run(["sle-trace", "--config", str(cfg), "--seed", "7", "--out", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["seed"] == 7 and m["config"]["kappa"] == 2.0


def test_loop_coords_and_svg(tmp_path):
    out = tmp_path / "o"
    assert cli.run(["loop-coords", "--shape", "ellipse:1.2,0.8", "--svg", "--out", str(out)]) == 0
    names = _files(out)
    assert any(n.endswith(".svg") for n in names)


def test_annulus_default(tmp_path):
    out = tmp_path / "o"
    assert cli.run(["annulus", "modulus", "--out", str(out)]) == 0


def test_schiffer(tmp_path):
    assert cli.run(["schiffer", "--beta", "-0.01", "--out", str(tmp_path / "o")]) == 0


def test_bad_config_path(tmp_path):
    assert cli.run(["sle-trace", "--config", str(tmp_path / "missing.json"),
                    "--out", str(tmp_path / "o")]) == 64


def test_error_exit(tmp_path):
    # kappa above 4 is out of range: runtime error, not a usage error
    assert cli.run(["sle-trace", "--kappa", "6", "--out", str(tmp_path / "o")]) == 1
