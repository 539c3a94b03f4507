import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momentflow.cli import main
from momentflow.config import ProblemConfig, dumps, parse_complex, parse_points
from momentflow.errors import ConfigError


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def cfg(matrix, moment=None, y0=None, z0=(0, 0), N=60, tol=1e-10):
    d = {"matrix": matrix, "moment": moment or {"kind": "factorial"}, "truncation": {"N": N, "tol": tol}}
    if y0 is not None:
        d["cauchy"] = {"z0": list(z0), "y0": y0}
    return d


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_solve_diag(tmp_path, capsys):
    path = write(tmp_path, cfg([[1, 0], [0, 2]], y0=[[1, 0], [0, 0]]))
    code, out = run(capsys, "solve", "--config", path)
    assert code == 0
    rep = json.loads(out.out)
    assert np.allclose([complex(*c) for c in rep["constants"]], [1, 0])
    assert rep["residualCheck"]["maxRelative"] < 1e-12
    assert "polynomial" not in rep


def test_solve_zero_and_nilpotent(tmp_path, capsys):
    code, out = run(capsys, "solve", "--config", write(tmp_path, cfg([[0, 0], [0, 0]], y0=[3, 4])))
    rep = json.loads(out.out)
    assert code == 0 and rep["polynomial"]["degree"] == 0
    code, out = run(capsys, "solve", "--config", write(tmp_path, cfg([[0, 1], [0, 0]], y0=[3, 4])))
    assert json.loads(out.out)["polynomial"]["degree"] == 1


def test_eval_rows(tmp_path, capsys):
    path = write(tmp_path, cfg([[1, 0], [0, 2]], y0=[1, 1]))
    code, out = run(capsys, "eval", "--config", path, "--points", "1")
    rows = list(csv.DictReader(io.StringIO(out.out)))
    assert code == 0 and rows[0]["status"] == "ok"
    assert float(rows[0]["re_y1"]) == pytest.approx(math.e, rel=1e-14)
    assert float(rows[0]["re_y2"]) == pytest.approx(math.e**2, rel=1e-14)


def test_eval_mittag_leffler(tmp_path, capsys):
    path = write(tmp_path, cfg([[1]], {"kind": "gamma", "s": 0.5}, y0=[1]))
    _, out = run(capsys, "eval", "--config", path, "--points", "1", "--format", "json")
    y = json.loads(out.out)["points"][0]["y"][0]
    assert y[0] == pytest.approx(5.00898, abs=1e-5)


def test_eval_at_z0_returns_data(tmp_path, capsys):
    path = write(tmp_path, cfg([[0.5, 1], [0, -1]], y0=[[1, 2], -3], z0=(0.5, -1)))
    _, out = run(capsys, "eval", "--config", path, "--points", "[[0.5, -1]]", "--format", "json")
    y = json.loads(out.out)["points"][0]["y"]
    assert np.allclose([complex(*v) for v in y], [1 + 2j, -3], atol=1e-14)


def test_eval_records_cancellation(tmp_path, capsys):
    path = write(tmp_path, cfg([[-1]], y0=[1]))
    code, out = run(capsys, "eval", "--config", path, "--points", "1,80")
    rows = list(csv.DictReader(io.StringIO(out.out)))
    assert code == 0
    assert rows[0]["status"] == "ok" and rows[1]["status"].startswith("cancellation")


def test_oracle_compare(tmp_path, capsys):
    path = write(tmp_path, cfg([[1, 0], [0, 2]], y0=[1, 1]))
    code, out = run(capsys, "oracle-compare", "--config", path, "--points", "1,-1j,0.5+0.5j")
    assert code == 0 and json.loads(out.out)["maxDeviation"] <= 1e-12
    code, out = run(capsys, "oracle-compare", "--config", path, "--points", "1", "--n-terms", "0")
    rep = json.loads(out.out)
    assert code == 1
    want = math.hypot(math.e - 1, math.e**2 - 1)
    assert rep["maxDeviation"] == pytest.approx(want, rel=1e-12)


def test_growth_and_indicator(tmp_path, capsys):
    path = write(tmp_path, cfg([[1, 0], [0, 2]], y0=[1, 1]))
    code, out = run(capsys, "growth", "--config", path)
    rep = json.loads(out.out)
    assert code == 0
    assert rep["order"] == pytest.approx(1.0, abs=0.02) and rep["typeUpperBound"] == pytest.approx(2.0)
    code, out = run(capsys, "indicator", "--config", path, "--thetas", "0,3.0", "--radii", "2,4,8", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out.out)))
    assert code == 0 and {r["theta"] for r in rows} == {"0.0", "3.0"}


def test_growth_decay_sector(tmp_path, capsys):
    path = write(tmp_path, cfg([[-1]], y0=[1]))
    _, out = run(capsys, "growth", "--config", path, "--n-terms", "400")
    lo, hi = json.loads(out.out)["decaySectors"][0]
    assert lo < 0 < hi


def test_verify(tmp_path, capsys):
    path = write(tmp_path, cfg([[0, 1], [0, 0]], {"kind": "gamma", "s": 0.5}, y0=[1, 2]))
    code, out = run(capsys, "verify", "--config", path)
    rep = json.loads(out.out)
    assert code == 0 and rep["pass"] and rep["deltaRecursion"]["maxResidual"] <= 1e-12


def test_out_file(tmp_path, capsys):
    path = write(tmp_path, cfg([[2]], y0=[1]))
    target = tmp_path / "res.json"
    assert main(["solve", "--config", path, "--out", str(target)]) == 0
    assert json.loads(target.read_text())["constants"] == [[1.0, 0.0]]


@pytest.mark.parametrize(
    "data",
    [
        {"matrix": [[1, 2]], "moment": {"kind": "factorial"}},
        {"matrix": [[1]], "moment": {"kind": "gamma"}},
        {"matrix": [[1]], "moment": {"kind": "factorial"}, "cauchy": {"y0": [1, 2]}},
        {"matrix": [[1]], "moment": {"kind": "factorial"}, "truncation": {"N": 0}},
        {"matrix": [[1]], "moment": {"kind": "factorial"}, "truncation": {"tol": -1}},
        {"moment": {"kind": "factorial"}},
    ],
)
def test_config_errors_exit_3(tmp_path, capsys, data):
    code, out = run(capsys, "solve", "--config", write(tmp_path, data))
    assert code == 3 and "config error" in out.err


def test_missing_file_and_bad_json(tmp_path, capsys):
    assert run(capsys, "solve", "--config", str(tmp_path / "nope.json"))[0] == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "solve", "--config", str(bad))[0] == 3
    assert run(capsys, "frobnicate")[0] == 3


def test_numeric_failure_exit_2(tmp_path, capsys):
    path = write(tmp_path, {**cfg([[1, 0], [0, 2]], y0=[1, 1]), "hints": [5]})
    code, out = run(capsys, "solve", "--config", path)
    assert code == 2 and "HintRejected" in out.err


def test_pipeline_is_deterministic(tmp_path, capsys):
    path = write(tmp_path, cfg([[0.3, 1, 0], [0, 0.3, 0], [0.1, 0, [0, -1]]], {"kind": "gamma", "s": 0.8}, y0=[1, 2, 3]))
    first = run(capsys, "eval", "--config", path, "--points", "1,2j,-1.5")[1].out
    second = run(capsys, "eval", "--config", path, "--points", "1,2j,-1.5")[1].out
    assert first == second


def test_parse_helpers():
    assert parse_complex([1, -2]) == 1 - 2j
    assert parse_complex("2+3i") == 2 + 3j
    assert parse_complex(4) == 4
    with pytest.raises(ConfigError):
        parse_complex(True)
    with pytest.raises(ConfigError):
        parse_complex("x")
    assert parse_points("0, 1j,\n2") == [0, 1j, 2]
    assert parse_points("[[1, 2], 3]") == [1 + 2j, 3]


def test_json_non_finite():
    assert json.loads(dumps({"a": float("inf"), "b": complex(float("nan"), 1)})) == {"a": "inf", "b": ["nan", 1.0]}


entries = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n),
    st.lists(entries, min_size=n, max_size=n),
    entries,
)))
def test_config_round_trip(data):
    matrix, y0, z0 = data
    c = ProblemConfig(np.array(matrix, dtype=complex), ProblemConfig.from_dict(
        {"matrix": [[0]], "moment": {"kind": "gamma", "s": 0.7}}).moment, z0, np.array(y0, dtype=complex))
    again = ProblemConfig.from_dict(json.loads(dumps(c.to_dict())))
    assert np.array_equal(again.matrix, c.matrix)
    assert np.array_equal(again.y0, c.y0) and again.z0 == c.z0
    assert again.moment == c.moment
