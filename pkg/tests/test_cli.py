import argparse
import csv
import io
import json
import math
import subprocess
import sys

import pytest

from powerspec import cli
from powerspec.euler import delta2


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_constants_table(capsys):
    code, out, _ = run(capsys, "constants")
    assert code == 0
    rows = {r["name"]: r for r in json.loads(out)}
    assert rows["delta2"]["value"] == pytest.approx(-0.2612039, abs=1e-7)
    assert rows["delta1"]["value"] == pytest.approx(-0.656999, abs=1e-6)
    assert rows["C2"]["value"] == pytest.approx(2.17325, abs=1e-3)
    assert rows["delta1*log2"]["value"] == pytest.approx(-0.4554, abs=1e-3)
    assert all("error" in r and "method" in r for r in rows.values())


def test_powerful_count_and_list(capsys):
    code, out, _ = run(capsys, "powerful", "count", "--x", "1e10")
    assert code == 0 and json.loads(out)[0]["count"] == 214122
    code, out, _ = run(capsys, "powerful", "list", "--x", "100", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["n"]) for r in rows] == [1, 4, 8, 9, 16, 25, 27, 32, 36, 49, 64, 72, 81, 100]
    code, _, err = run(capsys, "powerful", "list", "--x", "1e14")
    assert code == 3 and "count" in err


def test_endpoint_run(capsys, tmp_path):
    out_path = tmp_path / "e.csv"
    code, _, _ = run(capsys, "endpoint-run", "--profile", "minus-at-2", "--x", "1e6", "1e4", "--format", "csv", "--out", str(out_path), "--figure")
    assert code == 0
    rows = list(csv.DictReader(out_path.open()))
    assert [int(r["x"]) for r in rows] == [10**4, 10**6]
    assert all(float(r["gap_to_delta2"]) == pytest.approx(float(r["ratio"]) - delta2()) for r in rows)
    assert (tmp_path / "e.png").stat().st_size > 1000
    code, out, _ = run(capsys, "endpoint-run", "--profile", "all-ones", "--x", "1e5")
    assert json.loads(out)[0]["ratio"] == 1.0
    code, out, _ = run(capsys, "endpoint-run", "--profile", "odd-powerful", "--x", "1e6")
    row = json.loads(out)[0]
    assert row["ratio"] >= -0.05 and row["decay_reference"] < 0
    code, _, _ = run(capsys, "endpoint-run", "--profile", "delta")
    assert code == 2
    code, _, _ = run(capsys, "endpoint-run", "--x", "1e16")
    assert code == 3


@pytest.mark.parametrize(
    "chi,check",
    [
        ("step:1.0:-1", lambda s: abs(s["sigma_min"] + 0.657) < 1e-3 and abs(s["argmin"] - 2.649) < 0.01),
        ("const:1", lambda s: s["sigma_min"] == 1.0),
        ("step:1.0:0", lambda s: s["sigma_min"] < 0.1),
    ],
)
def test_volterra_command(capsys, chi, check):
    code, out, _ = run(capsys, "volterra", "--chi", chi, "--umax", "4")
    assert code == 0
    payload = json.loads(out)
    assert check(payload["summary"])
    assert all(set(r) == {"u", "sigma", "average", "error"} for r in payload["trace"][:5])


def test_volterra_csv_trace(capsys, tmp_path):
    out_path = tmp_path / "v.csv"
    code, _, _ = run(capsys, "volterra", "--chi", "step:1.0:0", "--umax", "3", "--step", "1/1024", "--format", "csv", "--out", str(out_path), "--figure", str(tmp_path / "fig.png"))
    assert code == 0 and (tmp_path / "fig.png").exists()
    lines = out_path.read_text().splitlines()
    body = [row for row in csv.DictReader(line for line in lines if not line.startswith("#"))]
    at2 = next(r for r in body if float(r["u"]) == 2.0)
    assert float(at2["sigma"]) == pytest.approx(1 - math.log(2), abs=1e-4)
    assert float(at2["error"]) < 1e-6


def test_volterra_bad_chi(capsys):
    code, _, err = run(capsys, "volterra", "--chi", "bogus")
    assert code == 2 and "step:<b1>:<v1>" in err
    code, _, _ = run(capsys, "volterra", "--step", "0.1")
    assert code == 2


@pytest.mark.parametrize("suite,trials", [("identities", "5"), ("counterexample", "1"), ("factor-bounds", "50"), ("volterra", "5"), ("separation", "2")])
def test_verify_suites_pass(capsys, suite, trials):
    code, out, _ = run(capsys, "verify", "--suite", suite, "--trials", trials, "--seed", "7")
    report = json.loads(out)
    assert code == 0 and report["passed"] and report["suite"] == suite


def test_verify_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "run_suite", lambda *a: {"suite": "x", "passed": False, "minimal_failure": {"n": 4}})
    code, out, _ = run(capsys, "verify", "--suite", "identities")
    assert code == 1 and json.loads(out)["minimal_failure"] == {"n": 4}


def test_verify_usage_errors(capsys):
    assert run(capsys, "verify", "--suite", "nope")[0] == 2
    assert run(capsys, "verify", "--suite", "volterra", "--trials", "0")[0] == 2
    assert run(capsys)[0] == 2


def test_separation_command(capsys, tmp_path):
    code, out, _ = run(capsys, "separation", "--x", "1e5", "--seed", "3", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["test"] for r in rows] == ["separation", "log-separation"]
    assert all(float(r["ratio"]) < 100 for r in rows)
    doc = tmp_path / "f.json"
    doc.write_text(json.dumps({"profile": "custom", "defaults": {"value": 0.5}, "overrides": [[2, 1, -1.0]]}))
    code, out, _ = run(capsys, "separation", "--x", "1e4", "--function-file", str(doc))
    assert code == 0 and len(json.loads(out)) == 2
    assert run(capsys, "separation", "--function-file", str(tmp_path / "none.json"))[0] == 2


def test_output_is_deterministic(capsys, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.csv"
        run(capsys, "verify", "--suite", "factor-bounds", "--trials", "30", "--format", "csv", "--out", str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    a = run(capsys, "volterra", "--umax", "3", "--step", "2**-8")[1]
    b = run(capsys, "volterra", "--umax", "3", "--step", "2**-8")[1]
    assert a == b


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "powerspec", "constants", "--format", "csv"], capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[0] == "name,value,error,method"


@pytest.mark.parametrize("text,value", [("1e12", 10**12), ("10**6", 10**6), ("1_000", 1000), ("250", 250)])
def test_parse_int(text, value):
    assert cli.parse_int(text) == value


def test_parse_int_rejects_fraction():
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_int("1.5")
