import csv
import io
import json
import os
import subprocess
import sys

import pytest

from anosovlab import __version__, fileio
from anosovlab.cli import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, main
from anosovlab.pappus import normal_form_count


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_hilbert_dist_example(capsys):
    code, out, _ = run(capsys, "hilbert", "dist", "--p", "0,0", "--q", "0.5,0")
    assert code == EXIT_OK and out.strip() == "0.549306144334"


def test_tau_eig_example(capsys):
    code, out, _ = run(capsys, "reps", "tau-eig", "--d", "5", "--lambda1", "2")
    assert code == EXIT_OK and out.strip() == "16,4,1,0.25,0.0625"


def test_pappus_orbit_example(capsys):
    code, out, _ = run(capsys, "pappus", "orbit", "--maxlen", "2")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["tool"] == "anosovlab" and doc["version"] == __version__
    assert doc["config"]["maxlen"] == 2 and doc["config"]["seed"] == 0
    assert doc["result"]["count"] == sum(normal_form_count(n) for n in range(3)) == 8
    assert len(doc["result"]["boxes"]) == 8


def test_horoball_dist_with_oracle(capsys):
    code, out, _ = run(capsys, "horoball", "dist", "--base", "z", "--depth", "8", "--radius", "64",
                       "--from", "0,1", "--to", "16,1", "--bfs", "--format", "json")
    res = json.loads(out)["result"]
    assert code == EXIT_OK and res["distance"] == res["bfs"]["distance"] == 8
    assert res["shape"]["h_horizontal"] <= 3


def test_svd_diag_json(capsys):
    code, out, _ = run(capsys, "svd-diag", "--matrix", "[[2, 0], [0, 0.5]]", "--format", "json")
    res = json.loads(out)["result"]
    assert code == EXIT_OK and res["singular_values"] == [2.0, 0.5] and res["gap_indices"] == [1]


def test_domain_error_exit_and_json(capsys):
    code, _, err = run(capsys, "hilbert", "dist", "--p", "2,0", "--q", "0,0")
    assert code == EXIT_DOMAIN
    assert json.loads(err)["error"] == "point_not_interior"


def test_failed_check_exits_one(capsys):
    code, _, _ = run(capsys, "reps", "ss-limit", "--n", "1000")
    assert code == EXIT_DOMAIN
    code, out, _ = run(capsys, "reps", "tau-eig", "--d", "8", "--random", "20", "--dps", "0",
                       "--tol", "1e-15")
    assert code == EXIT_DOMAIN


@pytest.mark.parametrize("argv", [
    ["nosuch"],
    ["hilbert", "dist", "--p", "0,0"],
    ["hilbert", "dist", "--p", "x,y", "--q", "0,0"],
    ["svd-diag"],
    ["svd-diag", "--matrix", '{"rows": 3}'],
    ["hilbert", "dist", "--p", "0,0", "--q", "0.5,0", "--format", "csv"],
])
def test_usage_errors_exit_two(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == EXIT_USAGE


def test_version_flag(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == EXIT_OK and __version__ in out


def test_csv_table_shape(capsys, tmp_path):
    target = tmp_path / "table.csv"
    code, _, _ = run(capsys, "experiment", "heisenberg-distortion", "--kmax", "6", "--nmax", "3",
                     "--nprobe", "5", "--out", str(target))
    assert code == EXIT_OK
    raw = target.read_bytes().decode()
    first, rest = raw.split("\n", 1)
    meta = json.loads(first[2:])
    assert first.startswith("# ") and meta["version"] == __version__ and meta["config"]["kmax"] == 6
    assert "out" not in meta["config"]
    rows = list(csv.DictReader(io.StringIO(rest)))
    assert list(rows[0]) == ["probe", "k", "n", "cusp_distance", "symspace_displacement", "lower_bound"]
    assert "\r\n" in rest
    assert all(int(r["cusp_distance"]) == 1 for r in rows if r["probe"] == "u(2^(n-1),0)")


@pytest.mark.parametrize("argv", [
    ["pappus", "render", "--depth", "3"],
    ["pappus", "orbit", "--maxlen", "3", "--no-exact"],
    ["experiment", "heisenberg-distortion", "--kmax", "5", "--nmax", "2", "--nprobe", "4"],
    ["bps-sweep", "--count", "200", "--seed", "5"],
    ["reps", "ss-limit", "--jmax", "8"],
])
def test_outputs_are_byte_identical(capsys, tmp_path, argv):
    a, b = tmp_path / "a.out", tmp_path / "b.out"
    assert run(capsys, *argv, "--out", str(a))[0] == EXIT_OK
    assert run(capsys, *argv, "--out", str(b))[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert __version__ in a.read_text()


def test_text_artifact_carries_metadata(capsys, tmp_path):
    target = tmp_path / "tau.txt"
    run(capsys, "reps", "tau-eig", "--out", str(target))
    head, body = target.read_text().split("\n", 1)
    assert json.loads(head[2:])["config"]["d"] == 5 and body.strip() == "16,4,1,0.25,0.0625"


def test_svg_artifact(capsys, tmp_path):
    target = tmp_path / "fig.svg"
    code, out, _ = run(capsys, "pappus", "render", "--depth", "2", "--out", str(target))
    svg = target.read_text()
    assert code == EXIT_OK and svg.startswith("<?xml") and '"depth": 2' in svg
    assert "regions=" in out


def test_atomic_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "keep.txt"
    target.write_text("original")

    def boom(src, dst):
        raise OSError("simulated rename failure")

    monkeypatch.setattr(fileio.os, "replace", boom)
    with pytest.raises(OSError):
        fileio.atomic_write_text(target, "new content")
    assert target.read_text() == "original"
    assert os.listdir(tmp_path) == ["keep.txt"]


def test_io_error_exit(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "reps", "tau-eig", "--out", str(blocker / "sub" / "o.txt"))
    assert code == EXIT_DOMAIN and json.loads(err)["error"] == "io_error"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "anosovlab", "hilbert", "dist", "--p", "0,0",
                           "--q", "0.5,0"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip() == "0.549306144334"
