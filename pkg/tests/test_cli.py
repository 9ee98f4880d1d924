import csv
import io
import json

import pytest

from normrmt.cli import UsageError, read_config_file, resolve_config, run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def test_fixed_trace_moments(capsys):
    code, out, _ = call(capsys, "moments", "--family", "fixed-trace", "--a1", "2", "--beta", "2", "--N", "3",
                        "--nu", "0,1,2")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "normrmt/moments/1"
    assert doc["result"]["moments"] == {"0": 1.0, "1": 2.0, "2": 4.0}


def test_transform_csv(capsys):
    code, out, _ = call(capsys, "transform", "--family", "bound-trace", "--a1", "1", "--beta", "2", "--N", "2",
                        "--grid", "0:1:50")
    assert code == 0
    header = [line for line in out.splitlines() if line.startswith("#")]
    assert any(line.startswith("# config_sha256: ") for line in header)
    assert any(line.startswith("# version: ") for line in header)
    rows = csv_rows(out)
    assert len(rows) == 50
    assert list(rows[0]) == ["w", "Q_numeric", "Q_analytic", "residual"]
    assert max(float(r["residual"]) for r in rows) < 1e-6


def test_ewps(capsys):
    code, out, _ = call(capsys, "ewps", "--family", "gaussian", "--v", "1")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["value"] == pytest.approx(1.0, abs=1e-6)
    assert res["residual"] < 1e-6


@pytest.mark.parametrize("argv, columns", [
    (["density", "--family", "gaussian", "--v", "1", "--grid", "0:2:3"], ["u", "P"]),
    (["invert", "--family", "gaussian", "--v", "1", "--grid", "0.5:1:2"],
     ["u", "P_recovered", "P_exact", "rel_error", "err_est"]),
    (["spread-check", "--family", "non-extensive", "--lambda", "3", "--grid", "0.5:1:2"],
     ["u", "P_mixed", "P_exact", "P_residual", "Q_mixed", "Q_analytic", "Q_residual"]),
    (["kernel", "--N", "2", "--field=-0.5,0.5", "--variance", "1", "--grid=-1:1:2"],
     ["x_p", "x_q", "closed_form", "semi_oracle", "rel_diff"]),
    (["corr", "--family", "non-extensive", "--lambda", "3", "--field=-0.5,0.5", "--points", "0.1,0.3",
      "--format", "csv"], ["k", "points", "R_k"]),
    (["corr", "--family", "non-extensive", "--lambda", "3", "--field=-0.5,0.5", "--grid=-1:1:3",
      "--format", "csv"], ["x", "R_1"]),
])
def test_csv_columns(capsys, argv, columns):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    assert list(csv_rows(out)[0]) == columns


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# moments of a Gaussian\nfamily = gaussian\nv = 2.0\nn = 2\nnu = 1  # first moment\n")
    code, out, _ = call(capsys, "moments", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)["result"]["moments"]["1"] == pytest.approx(16.0)
    code, out, _ = call(capsys, "moments", "--config", str(cfg), "--v", "1")
    assert json.loads(out)["result"]["moments"]["1"] == pytest.approx(4.0)


def test_config_parser(tmp_path):
    good = tmp_path / "a.cfg"
    good.write_text("a1 = 2   # trailing comment\n\nn=3\n")
    assert read_config_file(str(good)) == {"a1": "2", "N": "3"}
    for text in ("nonsense\n", "colour = red\n", "v = 1\nv = 2\n"):
        bad = tmp_path / "b.cfg"
        bad.write_text(text)
        with pytest.raises(UsageError):
            read_config_file(str(bad))


def test_resolve_config_rejects():
    with pytest.raises(UsageError):
        resolve_config("moments", {"beta": "3"}, {})
    with pytest.raises(UsageError):
        resolve_config("moments", {"variance": "1"}, {})
    with pytest.raises(UsageError):
        resolve_config("moments", {"format": "xml"}, {})
    with pytest.raises(UsageError):
        resolve_config("density", {"N": "0"}, {})


@pytest.mark.parametrize("argv", [
    ["moments", "--family", "gaussian", "--v", "-1"],
    ["moments", "--family", "gaussian"],
    ["moments", "--family", "gaussian", "--v", "1", "--a1", "2"],
    ["moments", "--family", "gaussian", "--v", "1", "--beta", "3"],
    ["density", "--family", "gaussian", "--v", "1", "--grid", "0:1"],
    ["nosuchcommand"],
    ["moments", "--family", "gaussian", "--v", "abc"],
    ["moments", "--family", "non-extensive", "--q", "1.1", "--kappa", "0"],
    ["moments", "--family", "non-extensive", "--q", "1.1", "--lambda", "2"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 2


def test_usage_error_record_is_json(capsys):
    code, _, err = call(capsys, "moments", "--family", "gaussian", "--v", "-1")
    record = json.loads(err.strip().splitlines()[-1])
    assert record["error"] == "usage"


def test_numeric_failure_exits_1(capsys):
    # the quartic family has no spread function
    code, _, err = call(capsys, "spread-check", "--family", "gauss-quartic", "--a1", "1", "--a2", "1",
                        "--grid", "0.5:1:2")
    assert code == 1
    assert "UnavailableError" in err


def test_output_file_and_determinism(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p, threads in zip(paths, ("1", "3")):
        code, _, err = call(capsys, "mc-validate", "--family", "non-extensive", "--lambda", "4", "--N", "2",
                            "--field=-0.5,0.5", "--grid=-3:3:13", "--samples", "4000", "--seed", "7",
                            "--threads", threads, "--output", str(p))
        assert code == 0, err
    # the thread count is not part of the config hash or the payload
    assert paths[0].read_bytes() == paths[1].read_bytes()
    doc = json.loads(paths[0].read_text())
    assert doc["meta"]["seed"] == 7


def test_selftest_subset(capsys):
    code, out, err = call(capsys, "selftest", "--criteria", "2,8")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["all_passed"]
    assert "[PASS] criterion  2" in err
