import json
import subprocess
import sys

import pytest

from screwcohom.cli import dumps, main, parse_problem, problem_to_json
from screwcohom.errors import InputError
from screwcohom.spectrum import CoefficientField, TruncationSpec

from conftest import ORDER3, ORDER4, make_screw

Z90 = json.dumps(ORDER4)


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_problem(path, R0=ORDER4, t=("0", "0", "1/4"), kmax=1, lmax=1, g=(), **extra):
    data = {"R0": R0, "t": list(t), "kmax": kmax, "lmax": lmax, "g": list(g), **extra}
    path.write_text(json.dumps(data))
    return path


CONST = {"k": [0, 0, 0], "l": 0, "m": 0, "n": 0, "re": 1.0, "im": 0.0}


def test_dumps_is_canonical():
    assert json.loads(dumps({"b": 1.0, "a": [0.0, 1e-20, 2]})) == {"a": [0.0, 1e-20, 2], "b": 1.0}
    text = dumps({"b": 0.1, "a": 3.0})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text and "3.0" in text


def test_validate(tmp_path, capsys):
    code, out, _ = run(["validate", write_problem(tmp_path / "p.json")], capsys)
    assert code == 0 and "order 4" in out
    code, out, _ = run(["validate", write_problem(tmp_path / "p.json"), "--format", "json"], capsys)
    assert json.loads(out)["order"] == 4


@pytest.mark.parametrize(
    "kwargs, needle",
    [
        ({"R0": [[-1, 0, 0], [0, 1, 0], [0, 0, 1]]}, "R0"),
        ({"t": ("1/0", "0", "0")}, "t[0]"),
        ({"t": ("0", "0")}, "t"),
        ({"g": [{**CONST, "k": [5, 0, 0]}]}, "g"),
        ({"kmax": -1}, "kmax"),
    ],
)
def test_validate_rejects(tmp_path, capsys, kwargs, needle):
    code, _, err = run(["validate", write_problem(tmp_path / "p.json", **kwargs)], capsys)
    assert code == 1 and needle in err


def test_validate_bad_json(tmp_path, capsys):
    p = tmp_path / "p.json"
    p.write_text('{"R0": [1, 2,\n')
    code, _, err = run(["validate", p], capsys)
    assert code == 1 and "line" in err
    code, _, err = run(["validate", tmp_path / "missing.json"], capsys)
    assert code == 1


def test_orbits(tmp_path, capsys):
    code, out, _ = run(["orbits", write_problem(tmp_path / "p.json", t=("0", "0", "0"))], capsys)
    data = json.loads(out)
    assert code == 0 and data["count"] == 9
    assert data["orbits"][0]["members"][0] == [-1, -1, -1]


def test_analyze_exit_codes(tmp_path, capsys):
    code, out, _ = run(["analyze", write_problem(tmp_path / "p.json")], capsys)
    assert code == 0 and json.loads(out)["obstructions"] == []
    code, out, _ = run(["analyze", write_problem(tmp_path / "p.json", g=[CONST])], capsys)
    obs = json.loads(out)["obstructions"]
    assert code == 2 and len(obs) == 1
    assert obs[0]["orbit_rep"] == [0, 0, 0] and obs[0]["l"] == 0 and obs[0]["obstruction_dim"] == 1


def test_analyze_resonant_axial(tmp_path, capsys):
    # p = 4, h = 1/8: kz = 2 is resonant on component m = 1 at l = 1
    g = [{"k": [0, 0, 2], "l": 1, "m": 1, "n": 0, "re": 1.0, "im": 0.0}]
    prob = write_problem(tmp_path / "p.json", t=("0", "0", "1/8"), kmax=2, g=g)
    code, out, _ = run(["analyze", prob], capsys)
    obs = json.loads(out)["obstructions"]
    assert code == 2 and [(o["orbit_rep"], o["l"], o["n"]) for o in obs] == [([0, 0, 2], 1, 0)]


def test_make_solve_verify_pipeline(tmp_path, capsys):
    prob = tmp_path / "prob.json"
    sol = tmp_path / "f.json"
    code, _, _ = run(["make-testcase", "--kind", "solvable", "--seed", 3, "--kmax", 2, "--out", prob], capsys)
    assert code == 0
    code, out, _ = run(["solve", prob, "--out", sol, "--report", tmp_path / "r.json"], capsys)
    assert code == 0 and json.loads(out)["residual"] <= 1e-8
    assert json.loads((tmp_path / "r.json").read_text())["solvable"]
    code, out, _ = run(["verify", prob, sol], capsys)
    res = json.loads(out)
    assert code == 0 and res["pointwise_residual"] <= 1e-6
    code, out, _ = run(["verify", prob, sol, "--oracle", "--samples", 10], capsys)
    assert code == 0 and json.loads(out)["oracle"]["agree"]


def test_verify_without_samples(tmp_path, capsys):
    prob = tmp_path / "prob.json"
    sol = tmp_path / "f.json"
    run(["make-testcase", "--kind", "solvable", "--kmax", 1, "--out", prob], capsys)
    run(["solve", prob, "--out", sol], capsys)
    code, out, _ = run(["verify", prob, sol, "--samples", 0], capsys)
    res = json.loads(out)
    assert code == 0 and "pointwise_residual" not in res


def test_verify_detects_corruption(tmp_path, capsys):
    prob = tmp_path / "prob.json"
    sol = tmp_path / "f.json"
    run(["make-testcase", "--kind", "solvable", "--kmax", 1, "--seed", 2, "--out", prob], capsys)
    run(["solve", prob, "--out", sol], capsys)
    records = json.loads(sol.read_text())
    # (1, 0, 0) lies on a non-resonant transverse orbit for t = (1/3, 1/5, 1/8)
    target = next(r for r in records if r["k"] == [1, 0, 0] and r["l"] == 0)
    target["re"] += 1.0
    sol.write_text(json.dumps(records))
    code, out, _ = run(["verify", prob, sol], capsys)
    assert code == 1 and not json.loads(out)["ok"]


def test_obstructed_testcase(tmp_path, capsys):
    prob = tmp_path / "prob.json"
    sol = tmp_path / "f.json"
    code, _, _ = run(["make-testcase", "--kind", "obstructed", "--seed", 5, "--out", prob], capsys)
    assert code == 0
    code, _, _ = run(["analyze", prob], capsys)
    assert code == 2
    code, _, _ = run(["solve", prob, "--out", sol], capsys)
    assert code == 2 and not sol.exists()


def test_solve_unwritable_output(tmp_path, capsys):
    prob = write_problem(tmp_path / "p.json")
    code, _, err = run(["solve", prob, "--out", tmp_path / "no" / "such" / "dir" / "f.json"], capsys)
    assert code == 1 and "cannot write" in err


def test_make_testcase_is_deterministic(tmp_path, capsys):
    for kind in ("solvable", "obstructed", "axial"):
        a, b = tmp_path / f"{kind}a.json", tmp_path / f"{kind}b.json"
        run(["make-testcase", "--kind", kind, "--seed", 7, "--out", a], capsys)
        run(["make-testcase", "--kind", kind, "--seed", 7, "--out", b], capsys)
        assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    run(["make-testcase", "--kind", "solvable", "--seed", 8, "--out", c], capsys)
    assert c.read_bytes() != (tmp_path / "solvablea.json").read_bytes()


def test_make_testcase_flag_errors(capsys):
    assert run(["make-testcase", "--kind", "solvable", "--R0", "[[1,0]"], capsys)[0] == 1
    assert run(["make-testcase", "--kind", "solvable", "--t", "1/2,0"], capsys)[0] == 1
    assert run(["make-testcase", "--kind", "axial", "--p", 3], capsys)[0] == 1


def test_analyze_is_byte_identical_across_threads(tmp_path, capsys):
    prob = tmp_path / "prob.json"
    run(["make-testcase", "--kind", "obstructed", "--R0", json.dumps(ORDER3), "--out", prob], capsys)
    _, a, _ = run(["analyze", prob, "--threads", 1], capsys)
    _, b, _ = run(["analyze", prob, "--threads", 3], capsys)
    assert a == b


def test_scan_axial(capsys):
    code, out, _ = run(["scan-axial", "--p", 4, "--q", 1, "--h", "1/8"], capsys)
    rows = json.loads(out)["rows"]
    assert code == 0
    assert [r["kz"] for r in rows] == list(range(-4, 5))
    assert [r["resonant"] for r in rows] == [kz % 2 == 0 for kz in range(-4, 5)]
    code, out, _ = run(["scan-axial", "--p", 4, "--h", "0", "--format", "text"], capsys)
    assert code == 0 and out.count("True") == 9


def test_scan_axial_end_to_end(capsys):
    code, out, _ = run(["scan-axial", "--p", 4, "--h", "1/8", "--kz-range=-2:2", "--lmax", 1, "--end-to-end"], capsys)
    assert code == 0 and json.loads(out)["cross_check"]["ok"]
    code, _, err = run(["scan-axial", "--p", 3, "--h", "1/3", "--end-to-end"], capsys)
    assert code == 1 and "integer matrix" in err
    assert run(["scan-axial", "--p", 4, "--h", "1/8", "--kz-range", "3:1"], capsys)[0] == 1


def test_scan_axial_float_pitch(capsys):
    code, out, _ = run(["scan-axial", "--p", 4, "--h", "0.125"], capsys)
    data = json.loads(out)
    assert code == 0 and data["h"] == "1/8" and "note" in data


def test_group(capsys):
    code, out, _ = run(["group"], capsys)
    data = json.loads(out)
    assert code == 0 and len(data) == 24
    assert sorted(d["order"] for d in data).count(4) == 6


def test_argparse_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as info:
        main(["analyze"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["no-such-command"])
    assert info.value.code == 1


def test_problem_roundtrip():
    screw = make_screw(ORDER3, ["1/3", "0", "2/5"])
    spec = TruncationSpec(1, 1)
    g = CoefficientField(spec, {((0, 0, 0), 0, 0): [1.0]})
    data = json.loads(dumps(problem_to_json(screw, spec, g, tol=1e-8, seed=4)))
    assert data["t"] == ["1/3", "0", "2/5"]
    prob = parse_problem(data)
    assert prob.screw == screw and prob.spec == spec and prob.tol == 1e-8 and prob.seed == 4
    with pytest.raises(InputError):
        parse_problem({**data, "tol": -1})
    with pytest.raises(InputError):
        parse_problem({k: v for k, v in data.items() if k != "g"})


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "screwcohom", "group", "--format", "text"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and len(proc.stdout.splitlines()) == 24
