import csv
import io
import json
import math

import numpy as np
import pytest

from gapbump.cli import (
    EXIT_INVALID,
    EXIT_OK,
    EXIT_USAGE,
    InstanceError,
    instance_to_json,
    main,
    parse_instance,
)
from gapbump.search import SearchConfig, search_counterexample
from gapbump.trigsum import GapConditionError, GapSequence, norms_G

PI = math.pi


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def write_instance(tmp_path, doc, name="inst.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


# -- instance parsing -------------------------------------------------------------------


def test_parse_instance_roundtrip():
    seq = GapSequence(2, (0.0, 1.25, 3.5))
    a = np.array([1.0, -0.5 + 0.25j, 2.0])
    seq2, a2 = parse_instance(json.dumps(instance_to_json(seq, a)))
    assert seq2 == seq
    np.testing.assert_array_equal(a2, a)


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"shifts": [0.0], "coefficients": [[1, 0]]}, "M"),
        ({"M": 0, "shifts": [0.0], "coefficients": [[1, 0]]}, "M"),
        ({"M": 2, "shifts": [], "coefficients": []}, "shifts"),
        ({"M": 2, "shifts": [0.0, "x"], "coefficients": [[1, 0], [1, 0]]}, "shifts[1]"),
        ({"M": 2, "shifts": [0.0], "coefficients": [[1, 0], [1, 0]]}, "coefficients"),
        ({"M": 2, "shifts": [0.0], "coefficients": [[1]]}, "coefficients[0]"),
        ({"M": 2, "shifts": [0.0], "coefficients": [1.0]}, "coefficients[0]"),
    ],
)
def test_parse_instance_field_diagnostics(doc, field):
    with pytest.raises(InstanceError) as err:
        parse_instance(json.dumps(doc))
    assert err.value.field == field


def test_parse_instance_bad_json_reports_line():
    with pytest.raises(InstanceError, match="line 2"):
        parse_instance('{"M": 2,\n "shifts": [0.0,,]}')


def test_parse_instance_gap_violation():
    with pytest.raises(GapConditionError) as err:
        parse_instance(json.dumps({"M": 1, "shifts": [0.0, 1.0], "coefficients": [[1, 0], [1, 0]]}))
    assert err.value.pair == (0, 1)


# -- check ------------------------------------------------------------------------------


def test_check_single_m2_bump(tmp_path):
    path = write_instance(tmp_path, {"M": 2, "shifts": [0.0], "coefficients": [[1.0, 0.0]]})
    code, out = run(["check", path, "--json"])
    assert code == EXIT_OK
    rec = json.loads(out)
    res = rec["results"]
    assert res["defect"] == pytest.approx(PI, abs=1e-13)
    assert res["ratio"] == pytest.approx(1 / 3, abs=1e-14)
    assert res["scaledQ"] == pytest.approx(PI, abs=1e-13)
    assert res["minEigenvalue"] == pytest.approx(PI / 2)
    assert rec["command"] == "check"


def test_check_m1_two_bumps(tmp_path):
    path = write_instance(tmp_path, {"M": 1, "shifts": [0.0, 3.5], "coefficients": [[1.0, 0.0], [-0.3, 0.7]]})
    code, out = run(["check", path, "--json"])
    assert code == EXIT_OK
    res = json.loads(out)["results"]
    assert res["ratio"] == pytest.approx(1.0, abs=1e-10)
    assert res["Q"] is None


def test_check_human_readable(tmp_path):
    path = write_instance(tmp_path, {"M": 3, "shifts": [0.0, 1.0], "coefficients": [[1, 0], [1, 0]]})
    code, out = run(["check", path])
    assert code == EXIT_OK
    assert "M(M-1)Q" in out and "kernel Gram min eigenvalue" in out


def test_check_gap_violation_exit_3(tmp_path, capsys):
    path = write_instance(tmp_path, {"M": 1, "shifts": [0.0, 1.0], "coefficients": [[1, 0], [1, 0]]})
    code, out = run(["check", path, "--json"])
    assert code == EXIT_INVALID
    assert json.loads(out)["pair"] == [0, 1]
    assert "(pair 0, 1)" in capsys.readouterr().err


def test_check_parse_failure_exit_2(tmp_path):
    path = write_instance(tmp_path, "{not json")
    assert run(["check", path])[0] == EXIT_USAGE
    assert run(["check", str(tmp_path / "missing.json")])[0] == EXIT_USAGE


def test_check_json_roundtrip_reproduces(tmp_path):
    doc = {"M": 3, "shifts": [0.0, 0.7, 2.1, 3.5], "coefficients": [[0.3, 0.1], [-1, 0], [0.5, 0.5], [0.2, -0.9]]}
    path = write_instance(tmp_path, doc)
    _, out = run(["check", path, "--json"])
    rec = json.loads(out)
    path2 = write_instance(tmp_path, rec["parameters"]["instance"], "again.json")
    _, out2 = run(["check", path2, "--json"])
    r1, r2 = rec["results"], json.loads(out2)["results"]
    for key in ("normSq", "derivNormSq", "defect", "Q", "minEigenvalue"):
        assert abs(r1[key] - r2[key]) <= 1e-12


# -- kernel -----------------------------------------------------------------------------


def test_kernel_csv_m2():
    code, out = run(["kernel", "--m", "2", "--step", repr(PI / 2)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0].keys()) == ["lambda", "g_closed", "g_quadrature", "abs_diff"]
    assert [float(r["lambda"]) for r in rows] == pytest.approx([0, PI / 2, PI])
    assert [float(r["g_closed"]) for r in rows] == pytest.approx([PI / 2, PI / 4, 0], abs=1e-15)


def test_kernel_json_m3():
    code, out = run(["kernel", "--m", "3", "--step", repr(PI), "--format", "json"])
    assert code == EXIT_OK
    rows = json.loads(out)["rows"]
    assert [r["lambda"] for r in rows] == pytest.approx([0, PI])
    assert rows[0]["g_closed"] == pytest.approx(3 * PI / 8)
    assert rows[1]["g_closed"] == 0


@pytest.mark.parametrize("M", [2, 3, 4, 6])
def test_kernel_difference_column(M):
    code, out = run(["kernel", "--m", str(M), "--step", "0.01"])
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 315
    assert max(float(r["abs_diff"]) for r in rows) <= 1e-10


def test_kernel_csv_is_lossless():
    _, out = run(["kernel", "--m", "4", "--step", "0.3"])
    from gapbump.kernel import KernelTable

    t = KernelTable(4, "closed_form")
    for r in csv.DictReader(io.StringIO(out)):
        assert float(r["g_closed"]) == t(float(r["lambda"]))


@pytest.mark.parametrize("argv", [["kernel", "--m", "1"], ["kernel", "--m", "2", "--step", "0"], ["kernel", "--m", "2", "--step", "4"]])
def test_kernel_usage_errors(argv):
    assert run(argv)[0] == EXIT_USAGE


# -- verify -----------------------------------------------------------------------------


def test_verify_m1():
    code, out = run(["verify", "--suite", "m1", "--trials", "200", "--seed", "7"])
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["results"]["passed"]
    assert rec["results"]["checks"][0]["maxResidual"] <= 1e-10


def test_verify_lemma41():
    code, out = run(["verify", "--suite", "lemma41", "--trials", "500", "--seed", "1"])
    assert code == EXIT_OK


def test_verify_unknown_suite():
    assert run(["verify", "--suite", "bogus"])[0] == EXIT_USAGE


def test_verify_deterministic():
    a = json.loads(run(["verify", "--suite", "m2", "--trials", "30", "--seed", "4"])[1])["results"]
    b = json.loads(run(["verify", "--suite", "m2", "--trials", "30", "--seed", "4"])[1])["results"]
    assert a == b


# -- search -----------------------------------------------------------------------------


def test_search_writes_record(tmp_path):
    out_path = tmp_path / "r.json"
    code, _ = run(["search", "--m", "2", "--n", "5", "--restarts", "3", "--iterations", "10",
                   "--seed", "3", "--out", str(out_path)])
    assert code == EXIT_OK
    rec = json.loads(out_path.read_text())
    assert rec["command"] == "search"
    assert rec["seed"] == 3
    assert "version" in rec and "timings" in rec
    assert rec["results"]["bestRatio"] <= 1 + 1e-9
    assert rec["results"]["refuted"] is False


def test_search_record_reproduces(tmp_path):
    out_path = tmp_path / "r.json"
    run(["search", "--m", "3", "--n", "5", "--restarts", "2", "--iterations", "8", "--seed", "11",
         "--out", str(out_path)])
    rec = json.loads(out_path.read_text())
    p = rec["parameters"]
    cfg = SearchConfig(M=p["m"], N=p["n"], restarts=p["restarts"], localIterations=p["iterations"],
                       seed=p["seed"], stepScale=p["step_scale"])
    again = search_counterexample(cfg).to_dict()
    assert abs(again["bestRatio"] - rec["results"]["bestRatio"]) <= 1e-12
    assert again["witnessShifts"] == rec["results"]["witnessShifts"]
    # the stored witness alone reproduces the ratio
    res = rec["results"]
    seq = GapSequence(p["m"], tuple(res["witnessShifts"]))
    a = np.array([complex(r, i) for r, i in res["witnessCoeffs"]])
    n, d = norms_G(seq, a)
    assert abs(d / (p["m"] ** 2 * n) - res["bestRatio"]) <= 1e-10


def test_search_default_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("GAPBUMP_OUTPUT_DIR", str(tmp_path / "outdir"))
    code, _ = run(["search", "--m", "1", "--n", "3", "--restarts", "1", "--iterations", "2", "--seed", "0"])
    assert code == EXIT_OK
    files = list((tmp_path / "outdir").glob("*.json"))
    assert len(files) == 1
    assert json.loads(files[0].read_text())["results"]["bestRatio"] == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("argv", [
    ["search", "--m", "2", "--n", "1"],
    ["search", "--m", "2", "--restarts", "0"],
    ["search", "--m", "0"],
    ["search"],
])
def test_search_usage_errors(argv, tmp_path):
    assert run(argv + ["--out", str(tmp_path / "x.json")])[0] == EXIT_USAGE


# -- bernstein --------------------------------------------------------------------------


def test_bernstein_command():
    code, out = run(["bernstein", "--m", "5", "--trials", "1000", "--seed", "2"])
    assert code == EXIT_OK
    res = json.loads(out)["results"]
    assert res["violations"] == 0
    assert res["maxRatio"] == 25
    assert res["argmax"] == "exp(iMx)"
    assert res["cases"] == 1002


def test_bernstein_usage():
    assert run(["bernstein", "--m", "0"])[0] == EXIT_USAGE
