import csv
import io
import itertools
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ot_symmetry.cli import main
from ot_symmetry.reference import ReferenceSet

GOLDEN = Path(__file__).parent / "data" / "golden_test_report.json"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def data_csv(tmp_path):
    X = np.random.default_rng(0).standard_normal((40, 2)) + [0.1, 0.0]
    path = tmp_path / "data.csv"
    np.savetxt(path, X, delimiter=",", header="a,b", comments="")
    return path


def test_test_is_deterministic(capsys, data_csv):
    a = run(capsys, "test", "--group", "central", "--input", data_csv, "--seed", 7)
    b = run(capsys, "test", "--group", "central", "--input", data_csv, "--seed", 7)
    assert a[0] == 0 and a[1] == b[1]
    d = json.loads(a[1])
    assert d["seed"] == 7 and d["version"]


def _schema(obj):
    if isinstance(obj, dict):
        return {k: _schema(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_schema(obj[0])] if obj else []
    if obj is None:
        return None
    return "number" if isinstance(obj, (int, float)) and not isinstance(obj, bool) else type(obj).__name__


def test_json_schema_matches_golden(capsys, data_csv):
    _, out, _ = run(capsys, "test", "--input", data_csv, "--seed", 1)
    assert _schema(json.loads(out)) == _schema(json.loads(GOLDEN.read_text()))


def test_six_significant_digits(capsys, data_csv):
    _, out, _ = run(capsys, "test", "--input", data_csv, "--seed", 1, "--calibration", "asymptotic")
    d = json.loads(out)
    for v in [d["statistic"], d["p_asymptotic"], *d["raw"]]:
        assert len(f"{abs(v):.15g}".replace(".", "").replace("0.", "").lstrip("0")) <= 6


def test_symmetric_integers_far_from_rejection(capsys, tmp_path):
    x = np.array([2, -1, 3, 0, -3, 1, -2], dtype=float)
    path = tmp_path / "sym.csv"
    path.write_text("x\n" + "\n".join(f"{v:g}" for v in x) + "\n")
    code, out, _ = run(capsys, "test", "--group", "central", "--input", path, "--seed", 7)
    d = json.loads(out)
    assert code == 0 and not d["reject"]
    ref_file = tmp_path / "ref.csv"
    run(capsys, "reference", "--group", "central", "--n", 7, "--p", 1, "--seed", 7, "--emit", ref_file)
    ref = ReferenceSet.from_csv(ref_file)
    h = ref.points[:, 0]
    # statistic from the CLI versus the full enumeration of its null
    q = d["statistic"]
    sums = np.array([np.dot(s, h) for s in itertools.product([-1, 1], repeat=7)])
    qs = sums ** 2 / 7  # Gaussian ERD covariance is 1
    exact = np.mean(qs >= q * (1 - 1e-5))
    assert d["p_exact"] == pytest.approx(exact, abs=0.03)
    assert d["p_exact"] > 0.5


def test_malformed_line_reports_line_number(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n3,oops\n")
    code, _, err = run(capsys, "test", "--input", path)
    assert code == 1
    e = json.loads(err)
    assert "line 3" in e["message"]


@pytest.mark.parametrize("body, needle", [
    ("1,2\n3\n", "line 2"),
    ("1,2\nnan,1\n", "line 2"),
    ("1,inf\n", "line 1"),
    ("# only a comment\n", "no data"),
])
def test_bad_inputs(capsys, tmp_path, body, needle):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    code, _, err = run(capsys, "test", "--input", path)
    assert code == 1 and needle in json.loads(err)["message"]


def test_uniform_spherical_rejected(capsys, data_csv):
    code, _, err = run(capsys, "test", "--group", "spherical", "--erd", "uniform", "--input", data_csv)
    assert code == 1 and json.loads(err)["error"] == "IncompatibleERD"


def test_singular_covariance_is_exit_1(capsys, tmp_path):
    path = tmp_path / "line.csv"
    path.write_text("".join(f"{i},{2 * i}\n" for i in range(10)))
    code, _, err = run(capsys, "test", "--test", "hotelling", "--input", path)
    assert code == 1 and json.loads(err)["error"] == "SingularCovariance"


def test_fail_on_reject(capsys, tmp_path):
    path = tmp_path / "shifted.csv"
    X = np.random.default_rng(1).standard_normal((60, 2)) + 2.0
    np.savetxt(path, X, delimiter=",")
    assert run(capsys, "test", "--input", path, "--seed", 1)[0] == 0
    assert run(capsys, "test", "--input", path, "--seed", 1, "--fail-on-reject")[0] == 2


def test_reference_round_trip(capsys, tmp_path, data_csv):
    for group in ("central", "sign", "spherical"):
        ref_file = tmp_path / f"ref_{group}.csv"
        run(capsys, "reference", "--group", group, "--n", 40, "--p", 2, "--seed", 5,
            "--construction", "random", "--emit", ref_file)
        _, single, _ = run(capsys, "test", "--group", group, "--input", data_csv, "--seed", 5,
                           "--construction", "random")
        _, via_file, _ = run(capsys, "test", "--group", group, "--input", data_csv, "--seed", 5,
                             "--reference-file", ref_file)
        assert single == via_file


def test_finite_group_file(capsys, tmp_path, data_csv):
    gfile = tmp_path / "group.csv"
    r = np.array([[0.0, -1.0], [1.0, 0.0]])
    mats = [np.linalg.matrix_power(r, k) for k in range(4)]
    np.savetxt(gfile, np.array([m.ravel() for m in mats]), delimiter=",")
    code, out, _ = run(capsys, "test", "--group", f"finite:{gfile}", "--test", "sign",
                       "--input", data_csv, "--seed", 2, "--B", 199)
    d = json.loads(out)
    assert code == 0 and d["group"] == "finite" and d["df"] is None


def test_null_dist_csv(capsys):
    code, out, _ = run(capsys, "null-dist", "--n", 30, "--p", 2, "--B", 200, "--seed", 3,
                       "--output", "csv")
    vals = np.array(out.splitlines()[1:], dtype=float)
    assert code == 0 and len(vals) == 200 and np.all(np.diff(vals) >= 0)


def test_power_example(capsys):
    code, out, _ = run(capsys, "power", "--scenario", "C1", "--lambda", 0.2, "--reps", 2000,
                       "--seed", 1, "--method", "gwsr")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and list(rows[0]) == ["scenario", "method", "lambda", "power", "stderr", "reps"]
    assert abs(float(rows[0]["power"]) - 0.46) <= 0.04


def test_power_hotelling_sp2(capsys):
    code, out, _ = run(capsys, "power", "--scenario", "Sp2", "--lambda", 0.4, "--method", "hotelling",
                       "--reps", 2000, "--seed", 2)
    row = next(csv.DictReader(io.StringIO(out)))
    assert abs(float(row["power"]) - 0.10) <= 0.03


def test_power_table_row_and_json(capsys):
    code, out, _ = run(capsys, "power", "--table-row", "C1:0.2", "--method", "hotelling",
                       "--reps", 100, "--seed", 1, "--json")
    rows = json.loads(out)
    assert code == 0 and rows[0]["scenario"] == "C1" and rows[0]["lambda"] == 0.2


def test_power_errors(capsys):
    code, _, err = run(capsys, "power", "--scenario", "C1", "--reps", 0)
    assert code == 1 and json.loads(err)["error"]
    code, _, err = run(capsys, "power", "--scenario", "Z9")
    assert code == 1 and json.loads(err)["error"] == "UnknownScenario"


def test_power_thread_count_does_not_change_output(capsys):
    args = ("power", "--scenario", "S3", "--lambda", 0.1, "--n", 40, "--reps", 100, "--seed", 4,
            "--method", "gwsr")
    _, one, _ = run(capsys, *args, "--threads", 1)
    _, two, _ = run(capsys, *args, "--threads", 2)
    assert one == two


def test_are_subcommand(capsys):
    code, out, _ = run(capsys, "are", "--law", "gauss", "--shift", 0.1, "--n", 60, "--ratio", 0.5,
                       "--reps", 100, "--seed", 1, "--output", "json")
    d = json.loads(out)
    assert code == 0 and d["hotelling"]["n"] == 30 and d["gwsr"]["n"] == 60


def test_confset_subcommand(capsys, data_csv):
    code, out, _ = run(capsys, "confset", "--input", data_csv, "--bounds=-1:1", "--step", 0.25,
                       "--seed", 1, "--calibration", "asymptotic")
    d = json.loads(out)
    assert code == 0 and d["candidates"] == 81 and d["accepted"] > 0
    code, out, _ = run(capsys, "confset", "--input", data_csv, "--mode", "hull", "--seed", 1,
                       "--output", "csv")
    assert code == 0 and out.splitlines()[0] == "theta1,theta2,accepted"


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ot_symmetry.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "ot-symmetry" in out.stdout
