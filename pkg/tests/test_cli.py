import csv
import io
import json

import pytest

from zfx import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_stepup_report(capsys):
    code, out, err = run(capsys, "verify-stepup", "--N", "16", "--k", "3", "--f2", "parity", "--mode", "exhaustive")
    assert code == 0
    rep = json.loads(out)
    assert rep["result"]["worst_eps"] <= rep["result"]["bound_eps"]
    assert rep["config"]["command"] == "verify-stepup"
    assert rep["guards"]["stepup_sources"] == 10**7
    assert "wall time" in err and "wall" not in out


def test_same_config_same_bytes(capsys):
    args = ("verify-shift", "--N", "16", "--k", "5", "--l", "2", "--seed", "3")
    a = run(capsys, *args)[1]
    b = run(capsys, *args)[1]
    assert a == b


@pytest.mark.parametrize("argv", [
    ("verify-stepup", "--N", "32", "--k", "4", "--mode", "sampled", "--samples", "300", "--seed", "2"),
    ("sweep", "color-shift", "--vary", "l=2..4", "--n", "30"),
])
def test_worker_count_does_not_change_bytes(capsys, argv):
    one = run(capsys, *argv, "--workers", "1")[1]
    four = run(capsys, *argv, "--workers", "4")[1]
    assert one == four


def test_search_failure_exit_code(capsys):
    code, out, err = run(capsys, "search-f2", "--p", "3", "--d", "3", "--m", "1", "--k", "2",
                         "--eps", "0.15", "--seed", "7")
    assert code == 3
    rep = json.loads(out)
    assert rep["result"]["eps"] >= 0.25 and rep["result"]["success"] is False
    assert "error" in rep["result"] and rep["result"]["table"]


def test_search_success_table_reverifies(capsys):
    from zfx import symfix as sf
    code, out, _ = run(capsys, "search-f2", "--p", "3", "--d", "3", "--m", "1", "--k", "2",
                       "--eps", "0.5", "--seed", "7")
    assert code == 0
    res = json.loads(out)["result"]
    F = sf.SymbolTable.from_json(res["table"])
    assert sf.verify_symbol_extractor(F, 3, 2, 3)["eps"] == res["eps"]


def test_guard_exit_code(capsys):
    code, out, err = run(capsys, "sweep", "color-shift", "--vary", "n=1..20000", "--l", "2")
    assert code == 2 and out == "" and "ZFX_GUARD_OVERRIDE" in err


def test_guard_override_is_reported(capsys, monkeypatch):
    monkeypatch.setenv("ZFX_GUARD_OVERRIDE", str(10**9))
    code, out, _ = run(capsys, "color-shift", "--n", "20", "--l", "2")
    assert code == 0
    assert json.loads(out)["guards"]["sweep_points"] == 10**9


def test_guarantee_failure_exit_code(capsys):
    code, out, _ = run(capsys, "upper-bound", "--k", "3", "--i", "1", "--m", "2", "--N", "4",
                       "--oracle", "adversarial")
    assert code == 4
    res = json.loads(out)["result"]
    assert res["success"] is False and res["stage"] == 1


def test_upper_bound_success(capsys):
    code, out, _ = run(capsys, "upper-bound", "--k", "3", "--i", "1", "--m", "2")
    res = json.loads(out)["result"]
    assert code == 0 and res["N"] == 48 and res["partial_dependence"] and res["ceiling_passes"]


def test_upper_bound_file_oracle(capsys, tmp_path):
    path = tmp_path / "phi.txt"
    path.write_text("# every set gets color 1\n1 : 1\n")
    code, out, _ = run(capsys, "upper-bound", "--k", "2", "--i", "1", "--m", "2", "--N", "6",
                       "--oracle", str(path), "--default-color", "1")
    res = json.loads(out)["result"]
    assert code == 0 and res["oracle"] == "file" and res["colors"] == 1


def test_csv_header_fixed(capsys):
    code, out, _ = run(capsys, "color-shift", "--n", "20", "--l", "2", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == cli.CSV_COLUMNS["color-shift"]
    assert len(rows) == 2 and rows[1][0] == "20"


def test_sweep_records_failures_and_continues(capsys):
    code, out, _ = run(capsys, "sweep", "verify-stepup", "--vary", "k=3..5", "--N", "16", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["exit_code"] for r in rows] == ["0", "0", "1"]
    assert rows[2]["error"]


def test_sweep_seeds_depend_on_point(capsys):
    out = run(capsys, "sweep", "color-shift", "--vary", "l=2,3", "--n", "30")[1]
    pts = json.loads(out)["result"]["points"]
    assert len({p["point_seed"] for p in pts}) == 2
    again = json.loads(run(capsys, "sweep", "color-shift", "--vary", "l=2,3", "--n", "30", "--seed", "1")[1])
    assert [p["point_seed"] for p in again["result"]["points"]] != [p["point_seed"] for p in pts]


def test_sweep_color_count_trend(capsys):
    out = run(capsys, "sweep", "color-shift", "--vary", "l=2..4", "--n", "1000",
              "--mode", "sampled", "--samples", "2000")[1]
    res = json.loads(out)["result"]
    assert res["summary"]["color_count_trend"] == "nonincreasing"
    counts = [p["report"]["color_count"] for p in res["points"]]
    from zfx import shiftlab as sl
    assert counts == [sl.blog(1000), sl.blog(sl.blog(1000)), sl.blog(sl.blog(sl.blog(1000)))]


def test_empty_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "color-shift", "--n", "20", "--format", "csv")
    assert code == 0
    assert out.splitlines() == [",".join(cli.SWEEP_COLUMNS + cli.CSV_COLUMNS["color-shift"])]
    code, out, _ = run(capsys, "sweep", "color-shift", "--n", "20")
    assert json.loads(out)["result"]["points"] == []


def test_selftest_and_disperser(capsys):
    assert run(capsys, "probcore-selftest")[0] == 0
    code, out, _ = run(capsys, "disperser-check", "--n", "8", "--k", "2", "--l", "2")
    assert code == 0 and json.loads(out)["result"]["failures"] == 0


def test_float_format():
    assert cli.dumps(0.1) == "0.10000000000000001"
    assert cli.dumps(float("nan")) == '"NaN"'
    assert cli.dumps({"b": [1, 2], "a": {3}}) == '{"a": [3], "b": [1, 2]}'


def test_bad_arguments_exit_nonzero(capsys):
    code, _, err = run(capsys, "verify-stepup", "--N", "24", "--k", "3")
    assert code != 0 and err


def test_out_file(capsys, tmp_path):
    dest = tmp_path / "r.json"
    code, out, _ = run(capsys, "tower-check", "--k", "3", "--out", str(dest))
    assert code == 0 and out == "" and json.loads(dest.read_text())["result"]
