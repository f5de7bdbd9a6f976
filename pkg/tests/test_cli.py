import json
import math
import os

import numpy as np
import pytest

from dicehaldane.cli import main, parse_angle


def run(tmp_path, *argv):
    return main(list(argv) + ["--output-dir", str(tmp_path)])


def data_files(tmp_path, ext=None):
    names = [n for n in os.listdir(tmp_path) if n != "manifest.json"]
    if ext:
        names = [n for n in names if n.endswith(ext)]
    return sorted(names)


def test_no_command_prints_usage():
    assert main([]) == 2


def test_parse_angle():
    assert parse_angle("pi/2") == pytest.approx(math.pi / 2)
    assert parse_angle("-pi") == pytest.approx(-math.pi)
    assert parse_angle("2pi/3") == pytest.approx(2 * math.pi / 3)
    assert parse_angle("0.25") == pytest.approx(0.25)


def test_unknown_config_key_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus_key": 1}))
    assert run(tmp_path, "bands", "--config", str(cfg)) == 2


def test_unknown_param_key_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": {"tt": 1.0}}))
    assert run(tmp_path, "bands", "--config", str(cfg)) == 2


def test_numerical_failure_exits_3(tmp_path):
    # far from any exceptional point the scaling fit lacks dynamic range
    code = run(tmp_path, "rigidity", "--k", "M", "--param", "delta",
               "--ep-value", "8.0")
    assert code == 3


def test_bands_deterministic_and_manifest(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        code = main(["bands", "--t2", "0.03", "--phi", "pi/2",
                     "--samples", "20", "--output-dir", str(d)])
        assert code == 0
    fa = data_files(a, ".csv")
    fb = data_files(b, ".csv")
    assert fa == fb
    assert (a / fa[0]).read_bytes() == (b / fb[0]).read_bytes()
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["command"] == "bands"
    assert manifest["outputs"] == fa
    assert "version" in manifest and "wall_time_s" in manifest


def test_bands_m_point_triple_degeneracy(tmp_path):
    """At the critical gain/loss the three real parts coincide at the
    zone-boundary momentum."""
    code = run(tmp_path, "bands", "--delta", "1.0", "--path", "G,M",
               "--samples", "10")
    assert code == 0
    name = data_files(tmp_path, ".csv")[0]
    lines = (tmp_path / name).read_text().strip().split("\n")
    last = lines[-1].split(",")
    kx = float(last[1])
    res = [float(last[3]), float(last[5]), float(last[7])]
    assert kx == pytest.approx(1.0)
    # the point is defective, so the solver splits the triple eigenvalue
    # at the cube root of machine precision
    assert max(res) - min(res) < 1e-4


def test_ep_scan_finds_critical_strength(tmp_path):
    code = run(tmp_path, "ep-scan", "--k", "M", "--param", "delta",
               "--start", "0.5", "--stop", "1.5", "--samples", "21")
    assert code == 0
    name = data_files(tmp_path, ".json")[0]
    result = json.loads((tmp_path / name).read_text())
    assert result["ep"] is not None
    assert result["ep"]["value"] == pytest.approx(1.0, abs=1e-3)
    assert result["ep"]["order"] == 3


def test_chern_command(tmp_path):
    code = run(tmp_path, "chern", "--t2", "0.03", "--phi", "pi/2",
               "--grid-n", "24")
    assert code == 0
    name = data_files(tmp_path, ".json")[0]
    result = json.loads((tmp_path / name).read_text())
    assert result["chern"] == [-2, 0, 2]


def test_phase_diagram_csv(tmp_path):
    code = run(tmp_path, "phase-diagram", "--t2", "0.03", "--phi", "pi/2",
               "--k", "M", "--delta-min", "0", "--delta-max", "2",
               "--ratio-min", "0", "--ratio-max", "4", "--resolution", "6")
    assert code == 0
    name = data_files(tmp_path, ".csv")[0]
    lines = (tmp_path / name).read_text().strip().split("\n")
    assert lines[0] == "delta,mass_ratio,rigidity"
    assert len(lines) == 37


def test_ldos_and_ipr_sweep_csv(tmp_path):
    code = run(tmp_path, "ldos", "--nx", "4", "--ny", "3", "--gamma", "1.0")
    assert code == 0
    name = data_files(tmp_path, ".csv")[0]
    lines = (tmp_path / name).read_text().strip().split("\n")
    assert lines[0] == "id,sublattice,x,y,ldos"
    assert len(lines) == 37
    code = run(tmp_path, "ipr-sweep", "--nx", "4", "--ny", "3",
               "--gamma", "1.0")
    assert code == 0
    names = data_files(tmp_path, ".csv")
    sweep = [n for n in names if n.startswith("ipr-sweep")][0]
    lines = (tmp_path / sweep).read_text().strip().split("\n")
    assert lines[0] == "state,reE,imE,ipr,edge_prob"
    assert len(lines) == 37


def test_spectral_area_command(tmp_path):
    code = run(tmp_path, "spectral-area", "--delta", "2.0", "--t2", "0.03",
               "--phi", "pi/2", "--mesh-n", "120")
    assert code == 0
    name = data_files(tmp_path, ".json")[0]
    result = json.loads((tmp_path / name).read_text())
    assert result["area"] > 0.0


def test_winding_command_single_reference(tmp_path):
    code = run(tmp_path, "winding", "--t2", "0.03", "--phi", "pi/2",
               "--delta", "2.0", "--geometry", "pbc_y_obc_x",
               "--n-open", "16", "--n-k", "300",
               "--e-ref-re", "0.0", "--e-ref-im", "1.89")
    assert code == 0
    name = data_files(tmp_path, ".json")[0]
    result = json.loads((tmp_path / name).read_text())
    assert result["W"] == 1


def test_disorder_sweep_command(tmp_path):
    code = run(tmp_path, "disorder-sweep", "--nx", "4", "--ny", "3",
               "--gamma", "1.0", "--disorder-strength", "0.5",
               "--disorder-kind", "real", "--seed", "3",
               "--n-realizations", "3")
    assert code == 0
    assert len(data_files(tmp_path, ".csv")) == 1
    assert len(data_files(tmp_path, ".json")) == 1


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "params": {"t2": 0.03, "phi": "pi/2"},
        "samples": 5, "path": "G,M"}))
    out = tmp_path / "out"
    code = main(["bands", "--config", str(cfg), "--samples", "7",
                 "--output-dir", str(out)])
    assert code == 0
    name = data_files(out, ".csv")[0]
    lines = (out / name).read_text().strip().split("\n")
    assert len(lines) == 9  # header + 8 samples (7 per segment + endpoint)
