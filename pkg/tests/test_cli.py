import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gwnorm import graphs
from gwnorm.cli import dumps, main
from gwnorm.exact import identity_constant
from gwnorm.graph import format_graph

from conftest import g5_reference_D


@pytest.fixture
def g5_file(tmp_path):
    f = tmp_path / "g5.txt"
    f.write_text(format_graph(graphs.g5()))
    return str(f)


@pytest.fixture
def d_file(tmp_path):
    f = tmp_path / "d.csv"
    np.savetxt(f, g5_reference_D(), delimiter=",", fmt="%.17g")
    return str(f)


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_identity_edge_removal(capsys, g5_file):
    code, out = run(capsys, "--graph", g5_file, "--delta", "0.5", "--output", "both")
    assert code == 0
    assert out["status"] == "ok"
    assert out["method_used"] == "edge-removal"
    assert out["log_value"] == pytest.approx(identity_constant(graphs.g5()).evaluate(0.5).log_abs, rel=1e-15)
    assert out["symbolic"]["pi_half_exp"] == 7
    assert out["diagnostics"]["fill_edges"] == [[1, 3]]


def test_series_with_matrix(capsys, g5_file, d_file):
    code, out = run(capsys, "--graph", g5_file, "--delta", "0.5", "--matrix", d_file)
    assert code == 0
    assert out["method_used"] == "series"
    assert out["log_value"] == pytest.approx(6.263163352, abs=2e-9)
    assert out["diagnostics"]["converged"]


def test_mc_is_reproducible(capsys, g5_file):
    args = ("--graph", g5_file, "--delta", "0.5", "--method", "mc", "--samples", "5000", "--seed", "4")
    _, a = run(capsys, *args)
    _, b = run(capsys, *args, "--workers", "2")
    assert a["log_value"] == b["log_value"]
    assert a["diagnostics"]["samples"] == 5000


def test_c_constant(capsys, g5_file):
    code, out = run(capsys, "--graph", g5_file, "--delta", "3", "--c-constant")
    assert code == 0
    expect = identity_constant(graphs.g5()).evaluate(0.5).log_abs + (5 * 3 / 2 + 7) * math.log(2)
    assert out["log_value"] == pytest.approx(expect, rel=1e-14)
    code, out = run(capsys, "--graph", g5_file, "--delta", "1", "--c-constant")
    assert code == 3


def test_parse_error(capsys, tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("p 3\n1 4\n")
    code, out = run(capsys, "--graph", str(f), "--delta", "0.5")
    assert code == 2 and out["status"] == "parse_error"


def test_asymmetric_matrix(capsys, g5_file, tmp_path):
    D = np.eye(5)
    D[0, 1] = 0.1
    f = tmp_path / "asym.csv"
    np.savetxt(f, D, delimiter=",")
    code, out = run(capsys, "--graph", g5_file, "--delta", "0.5", "--matrix", str(f))
    assert code == 2


def test_precondition_errors(capsys, g5_file, d_file):
    code, _ = run(capsys, "--graph", g5_file, "--delta", "-1")
    assert code == 3
    code, _ = run(capsys, "--graph", g5_file, "--delta", "0.5", "--matrix", d_file,
                  "--method", "edge-removal")
    assert code == 3
    code, _ = run(capsys, "--graph", g5_file, "--delta", "0.5", "--matrix", d_file,
                  "--output", "symbolic")
    assert code == 3


def test_nonconvergence(capsys, g5_file, d_file):
    code, out = run(capsys, "--graph", g5_file, "--delta", "0.5", "--matrix", d_file,
                    "--max-l", "4", "--tol", "1e-14")
    assert code == 4
    assert out["status"] == "nonconverged"
    assert out["log_value"] is not None


def test_unsupported(capsys, g5_file):
    code, out = run(capsys, "--graph", g5_file, "--delta", "0.5", "--method", "chordal")
    assert code == 5 and out["status"] == "unsupported"


def test_dumps_format():
    s = dumps({"a": 0.1, "b": [1, None, float("inf")], "c": True})
    assert s == '{"a": 0.10000000000000001, "b": [1, null, null], "c": true}'
    assert json.loads(s)["a"] == 0.1


def test_module_entry_point(g5_file):
    r = subprocess.run([sys.executable, "-m", "gwnorm", "--graph", g5_file, "--delta", "0"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["status"] == "ok"
