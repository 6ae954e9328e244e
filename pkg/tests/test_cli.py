import json

import pytest

from bellstruct.cli import main, parse_angle


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def result(text):
    return json.loads(text)["result"]


@pytest.mark.parametrize("ineq,bound", [("B", "6"), ("[0 0; 0 0 0; 1 0 -1 0]", "2"), ("MABK_6", "8"), ("I5", "15")])
def test_bound(capsys, ineq, bound):
    code, out, _ = run(capsys, "bound", "--ineq", ineq)
    assert code == 0 and result(out)["bound"] == bound


def test_bound_parse_error(capsys):
    code, out, err = run(capsys, "bound", "--ineq", "[1 2; 3]")
    assert code == 2 and out == "" and "segment" in err


def test_bound_shorthand_with_n(capsys):
    code, out, _ = run(capsys, "bound", "--ineq", "[-1 -1; -2 0 -2; -2 1 1 -2]", "--n", "4")
    assert code == 0 and result(out)["bound"] == "8"


def test_usage_error(capsys):
    assert run(capsys, "bound")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "eval", "--ineq", "B", "--theta0", "abc")[0] == 2


def test_eval_b_on_w3(capsys):
    code, out, _ = run(capsys, "eval", "--ineq", "B", "--state", "w", "--theta0", "0.2677pi", "--theta1", "0.7323pi")
    r = result(out)
    assert code == 0
    assert r["value"] == pytest.approx(7.2593, abs=5e-4) and r["w"] == pytest.approx(0.8265, abs=5e-4)


def test_eval_closed_form_matches(capsys):
    args = ["eval", "--ineq", "I4", "--theta0", "0.7861pi", "--theta1", "1.2139pi"]
    a = result(run(capsys, *args)[1])["value"]
    b = result(run(capsys, *args, "--closed-form")[1])["value"]
    assert a == pytest.approx(b, abs=1e-10) and a == pytest.approx(11.3155, abs=1e-3)


def test_eval_m3_ghz_xy(capsys):
    code, out, _ = run(capsys, "eval", "--ineq", "M3", "--state", "ghz", "--plane", "xy", "--theta0", "0", "--theta1", "0.5pi")
    assert code == 0 and result(out)["value"] == pytest.approx(4, abs=1e-9)


def test_eval_scenario_file(capsys, tmp_path):
    scen = {"symmetric": True, "parties": [[[0, 0, 1], [1, 0, 0]]] * 5}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scen))
    code, out, _ = run(capsys, "eval", "--ineq", "I5", "--scenario", str(path))
    assert code == 0 and result(out)["value"] == pytest.approx(28, abs=1e-9)


def test_eval_mismatch(capsys):
    assert run(capsys, "eval", "--ineq", "B", "--n", "4")[0] == 2
    assert run(capsys, "eval", "--ineq", "B", "--state", "ghz", "--closed-form")[0] == 2
    assert run(capsys, "eval", "--ineq", "B", "--state", "gghz", "--d", "3")[0] == 2
    assert run(capsys, "eval", "--ineq", "B", "--state", "gghz", "--d", "2", "--amplitudes", "1,2,3")[0] == 2


def test_eval_other_states(capsys):
    code, out, _ = run(capsys, "eval", "--ineq", "B", "--state", "gghz", "--amplitudes", "0.6,0.8j")
    assert code == 0 and result(out)["value"] <= 6 + 1e-9
    code, out, _ = run(capsys, "eval", "--ineq", "B", "--state", "dicke", "--k", "2", "--theta0", "0.3")
    assert code == 0


def test_facets(capsys):
    code, out, _ = run(capsys, "facets", "--n", "4")
    r = result(out)
    assert code == 0 and r["found"] == {"I4": True} and r["facet_count"] == 1744
    assert run(capsys, "facets", "--n", "6")[0] == 2


def test_verify_pass_and_fail(capsys, monkeypatch):
    code, out, _ = run(capsys, "verify", "frustration")
    assert code == 0 and result(out)["passed"]

    from bellstruct import cli, verify

    monkeypatch.setitem(cli.TARGETS, "frustration", lambda: [verify.Check("broken", False)])
    code, out, err = run(capsys, "verify", "frustration")
    assert code == 1 and "broken" in err and result(out)["failed"] == ["broken"]


def test_table1_csv_and_out_file(capsys, tmp_path):
    dest = tmp_path / "t.csv"
    code, out, _ = run(capsys, "table1", "--n-list", "4,5", "--out", str(dest))
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# manifest: ")
    assert lines[1] == "N,bound,Q,w,theta0,theta1"
    assert lines[3].startswith("5,20,") and dest.read_text() == out


def test_deterministic_apart_from_wall_time(capsys):
    args = ["seesaw", "--ineq", "B", "--restarts", "2", "--seed", "4"]
    a = json.loads(run(capsys, *args)[1])
    b = json.loads(run(capsys, *args)[1])
    for doc in (a, b):
        assert doc["manifest"]["seed"] == 4 and doc["manifest"]["version"]
        doc["manifest"].pop("wall_time_s")
    assert a == b


def test_optimize_and_probe(capsys):
    code, out, _ = run(capsys, "optimize", "--ineq", "B", "--restarts", "2")
    assert code == 0 and result(out)["value"] == pytest.approx(196 / 27, abs=1e-8)
    code, out, _ = run(capsys, "probe", "--ineq", "B", "--restarts", "50")
    assert code == 0 and result(out)["max_value"] <= 6 + 1e-7


def test_parse_angle():
    assert parse_angle("pi") == pytest.approx(3.141592653589793)
    assert parse_angle("0.5pi") == pytest.approx(1.5707963267948966)
    assert parse_angle("-1e-1") == -0.1
