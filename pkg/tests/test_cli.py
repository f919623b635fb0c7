import csv
import io
import json
import math
import subprocess
import sys

import pytest

from renyi_redundancy.cli import (
    ConfigError,
    SweepConfig,
    dump_json,
    endpoints_ordered,
    fmt,
    main,
)
from renyi_redundancy.mixtures import ExchangeableMixture, jeffreys_mixture
from renyi_redundancy.solver import zchannel_value


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(True) == "true" and fmt(None) == ""
    assert fmt(2) == "2"
    assert json.loads(dump_json({"b": 1 / 3, "a": [math.pi]})) == {"a": [3.14159265359], "b": 0.333333333333}


def test_config_validation(tmp_path):
    cfg = SweepConfig.from_dict({"k": 2, "lambda": [2, 0.5], "n": [3, 1]}).validate()
    assert cfg.lambdas == [0.5, 2.0] and cfg.ns == [1, 3]
    for bad in ({"k": 1}, {"lambda": [-1]}, {"n": [0]}, {"tol": 0}, {"log_base": "hartleys"},
                {"c": 0.7}, {"unknown_key": 1}):
        with pytest.raises(ConfigError):
            SweepConfig.from_dict(bad).validate()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"k": 2, "lambda": [1], "n": [1, 2], "log_base": "bits"}))
    assert SweepConfig.load(str(path)).log_base == "bits"


def test_redundancy_n1(capsys):
    assert main(["redundancy", "--k", "2", "--n", "1", "--lambda", "1"]) == 0
    row = rows_of(capsys.readouterr().out)[0]
    assert float(row["lower"]) == pytest.approx(math.log(2), abs=1e-6)
    assert float(row["upper"]) == pytest.approx(math.log(2), abs=1e-6)
    assert row["certified"] == "true" and row["asymptotic_prediction"] == ""


def test_redundancy_deterministic_and_json(tmp_path, capsys):
    args = ["redundancy", "--k", "2", "--n", "4,2", "--lambda", "2,0.5", "--resolution", "200"]
    paths = []
    for i in range(2):
        j = tmp_path / f"r{i}.json"
        c = tmp_path / f"r{i}.csv"
        assert main(args + ["--json", str(j), "--csv", str(c)]) == 0
        paths.append((c.read_bytes(), j.read_bytes()))
    assert paths[0] == paths[1]
    rows = rows_of(paths[0][0].decode())
    assert [(r["n"], r["lambda"]) for r in rows] == [("2", "0.5"), ("2", "2"), ("4", "0.5"), ("4", "2")]
    for r in rows:
        n = int(r["n"])
        assert float(r["residual"]) == pytest.approx(float(r["upper"]) - 0.5 * math.log(n / (2 * math.pi)), abs=1e-10)
    payload = json.loads(paths[0][1])
    assert payload["schema_version"] == 1 and len(payload["records"]) == 4
    assert {"lower", "upper", "gap", "argmax_theta", "prior_support"} <= set(payload["records"][0])


def test_redundancy_parallel_matches_serial(tmp_path):
    base = ["redundancy", "--n", "1,2,3", "--lambda", "1", "--resolution", "100"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(base + ["--csv", str(a)]) == 0
    assert main(base + ["--csv", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_redundancy_bits(capsys):
    assert main(["redundancy", "--n", "1", "--lambda", "1", "--log-base", "bits"]) == 0
    row = rows_of(capsys.readouterr().out)[0]
    assert float(row["lower"]) == pytest.approx(1.0, abs=1e-6)


def test_uncertified_exit_code(capsys):
    assert main(["redundancy", "--n", "3", "--lambda", "1", "--resolution", "100", "--tol", "1e-300"]) == 1


def test_zchannel(capsys):
    assert main(["zchannel", "--lambda", "2,1"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert [r["lambda"] for r in rows] == ["1", "2"]
    assert float(rows[0]["value_closed_form"]) == pytest.approx(math.log(4 / 3), abs=1e-12)
    assert float(rows[0]["prior_closed_form"]) == pytest.approx(1 / 3, abs=1e-12)
    for r in rows:
        assert float(r["abs_diff_nats"]) <= 1e-6
    assert zchannel_value(1e-6) == pytest.approx(math.log(5 / 4), abs=1e-5)


def test_endpoints(capsys):
    assert main(["endpoints", "--n", "1,2", "--lambda", "0.5,1,2", "--resolution", "400"]) == 0
    rows = rows_of(capsys.readouterr().out)
    first, second = rows
    for key in ("R0", "R_0.5", "R_1", "R_2", "r_n"):
        assert float(first[key]) == pytest.approx(math.log(2), abs=1e-6)
    assert float(second["r_n"]) == pytest.approx(math.log(2.5), abs=1e-12)
    assert all(r["ordered"] == "true" for r in rows)


def test_endpoints_ordering_detects_violation():
    class R:
        def __init__(self, lo, hi):
            self.lower, self.upper = lo, hi
    assert endpoints_ordered(R(0.5, 0.5), [R(0.6, 0.6)], 0.7)
    assert not endpoints_ordered(R(0.5, 0.5), [R(0.8, 0.8)], 0.7)


def test_audit_subset_and_fault(tmp_path, capsys):
    path = tmp_path / "audit.json"
    assert main(["audit", "--only", "pinsker,uniform_constant_closed_form", "--json", str(path)]) == 0
    first = json.loads(path.read_text())
    assert first["schema_version"] == 1 and first["passed"] is True
    assert main(["audit", "--only", "pinsker,uniform_constant_closed_form", "--json", str(path)]) == 0
    assert json.loads(path.read_text()) == first
    capsys.readouterr()
    assert main(["audit", "--only", "relative_information_bound", "--perturb-c1", "0.001"]) == 1
    captured = capsys.readouterr()
    assert "violation in relative_information_bound" in captured.err
    assert json.loads(captured.out)["passed"] is False


def test_audit_list(capsys):
    assert main(["audit", "--list"]) == 0
    assert "weak_duality" in capsys.readouterr().out.split()


def test_mixture_dump(tmp_path):
    out = tmp_path / "q.csv"
    assert main(["mixture-dump", "--n", "5", "--k", "3", "--out", str(out)]) == 0
    back = ExchangeableMixture.from_csv(out.read_text())
    ref = jeffreys_mixture(5, 3)
    assert max(abs(a - b) for a, b in zip(back.log_type_prob, ref.log_type_prob)) <= 1e-11
    assert main(["mixture-dump", "--kind", "modified", "--n", "8", "--out", str(out)]) == 0


@pytest.mark.parametrize("argv", [
    ["redundancy", "--k", "1", "--n", "1", "--lambda", "1"],
    ["redundancy", "--n", "1", "--lambda", "-0.5"],
    ["redundancy", "--n", "x"],
    ["zchannel", "--lambda", "-1"],
    ["audit", "--only", "nope"],
    ["audit", "--perturb-c1", "0"],
    ["mixture-dump", "--kind", "modified", "--n", "1"],
    ["bogus"],
    [],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k": 2, "n": [1], "lambda": [1], "resolution": 50}))
    assert main(["redundancy", "--config", str(cfg), "--lambda", "2"]) == 0
    assert rows_of(capsys.readouterr().out)[0]["lambda"] == "2"
    cfg.write_text("{not json")
    assert main(["redundancy", "--config", str(cfg)]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "renyi_redundancy", "zchannel", "--lambda", "1"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert proc.stdout.startswith("lambda,")
