"""
End-to-end tests of the command-line front end, run in process through main(argv).
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from core.errors import UsageError
from evaluation.cli import main, parse_args

ROOT = Path(__file__).resolve().parent.parent


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parse_moment():
    config = parse_args(["moment", "--n", "2", "--weights", "equal", "--s", "1"])
    assert (config.command, config.n, config.weights, config.s) == ("moment", 2, "equal", 1.0)


def test_parse_simulate():
    config = parse_args(["simulate", "--n", "10000", "--weights", "two-level:4", "--samples", "100000",
                         "--seed", "7"])
    assert (config.command, config.n, config.samples, config.seed) == ("simulate", 10000, 100000, 7)


def test_parse_bound():
    config = parse_args(["bound", "--weights", "equal", "--k", "1", "--eps", "0.3"])
    assert (config.command, config.k, config.epsilon) == ("bound", 1.0, 0.3)


def test_parse_hex_seed_and_negative_exponent():
    config = parse_args(["moment", "--n", "3", "--s", "-0.5", "--seed", "0x5EED"])
    assert config.s == -0.5 and config.seed == 0x5EED


def test_parse_intervals():
    config = parse_args(["simulate", "--n", "10", "--interval", "0.1", "0.2", "--interval", "0.5", "0.9"])
    assert config.intervals == ((0.1, 0.2), (0.5, 0.9))


def test_unknown_flag_is_an_error():
    with pytest.raises(UsageError):
        parse_args(["moment", "--n", "2", "--s", "1", "--colour", "red"])


def test_every_violation_is_reported(capsys):
    code, out, err = run(capsys, ["bound", "--k", "-1", "--eps", "2", "--weights", "nonsense"])
    assert code == 2
    assert out == ""
    assert err.count("usage error:") == 3


def test_config_file_supplies_defaults(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("n: 12\nsamples: 300\nweights: two-level:2\n", encoding="utf-8")
    config = parse_args(["simulate", "--config", str(path), "--samples", "400"])
    assert (config.n, config.samples, config.weights) == (12, 400, "two-level:2")


def test_moment_equal_n2(capsys):
    code, out, _ = run(capsys, ["moment", "--n", "2", "--weights", "equal", "--s", "1"])
    assert code == 0
    payload = json.loads(out)
    assert payload["moment"] == 0.166666666667
    assert "0.166666666667" in out
    assert payload["log_sphere_area"] == pytest.approx(1.7328679514, rel=1e-9)


def test_moment_euclidean_n4(capsys):
    code, out, _ = run(capsys, ["moment", "--n", "4", "--weights", "euclidean", "--s", "2"])
    assert code == 0
    assert json.loads(out)["moment"] == pytest.approx(1.0 / 1920.0, rel=1e-11)


def test_moment_zero_exponent(capsys):
    code, out, _ = run(capsys, ["moment", "--n", "5", "--s", "0"])
    assert code == 0
    assert json.loads(out)["moment"] == 1.0


def test_moment_outside_domain_exits_one(capsys):
    code, out, err = run(capsys, ["moment", "--n", "10", "--weights", "two-level:4", "--s", "-0.5"])
    assert code == 1
    assert out == ""
    assert "1 + s*a_1 must be positive" in err


def test_moment_csv(capsys):
    code, out, _ = run(capsys, ["moment", "--n", "2", "--s", "1", "--format", "csv"])
    assert code == 0
    header, row = out.split("\r\n")[:2]
    assert header.split(",")[:4] == ["sphere", "n", "s", "log_moment"]
    assert "0.166666666667" in row.split(",")


def test_bound_certificate(capsys):
    code, out, _ = run(capsys, ["bound", "--weights", "equal", "--k", "1", "--eps", "0.3"])
    assert code == 0
    payload = json.loads(out)
    assert payload["status"] == "certified"
    assert payload["lower_threshold"] < 0.561459 < payload["upper_threshold"]
    assert payload["n"] == payload["n_min"]
    assert [tail["side"] for tail in payload["tails"]] == ["upper", "lower"]


def test_simulate_is_byte_identical(capsys):
    argv = ["simulate", "--n", "50", "--weights", "two-level:2", "--samples", "3000", "--seed", "7",
            "--interval", "0.3", "0.6"]
    first = run(capsys, argv)
    second = run(capsys, argv)
    assert first[0] == 0
    assert first[1] == second[1]
    payload = json.loads(first[1])
    assert payload["count"] == 3000
    assert payload["seed"] == 7


def test_simulate_to_file(capsys, tmp_path):
    path = tmp_path / "sim.csv"
    code, out, _ = run(capsys, ["simulate", "--n", "20", "--samples", "500", "--format", "csv",
                                "--out", str(path)])
    assert code == 0
    assert out == ""
    text = path.read_bytes().decode("utf-8")
    assert text.startswith("weights,n,samples,seed,predicted_center,count,mean,sd,median")
    assert text.endswith("\r\n")


def test_table_n_sweep_csv(capsys):
    code, out, _ = run(capsys, ["table", "--sweep", "n", "--n-values", "20", "40", "--samples", "500",
                                "--format", "csv"])
    assert code == 0
    lines = out.split("\r\n")
    assert lines[0] == "n,weights,samples,median,mean,sd,predicted_center,theorem_center"
    assert lines[1].startswith("20,equal,500,")
    assert lines[2].startswith("40,equal,500,")


def test_table_m_sweep_json(capsys):
    code, out, _ = run(capsys, ["table", "--sweep", "M", "--n", "60", "--m-values", "1", "4",
                                "--samples", "300"])
    assert code == 0
    rows = json.loads(out)
    assert [row["M"] for row in rows] == [1.0, 4.0]
    assert rows[1]["theorem_center"] == pytest.approx(0.244389, abs=1e-6)


def test_verify_with_few_samples_skips_statistical_checks(capsys):
    code, out, _ = run(capsys, ["verify", "--samples", "100"])
    lines = out.strip().split("\n")
    assert len(lines) == 12
    assert all(line.split()[0] in ("PASS", "SKIP") for line in lines)
    assert any(line.startswith("SKIP") for line in lines)
    assert code == 0


def test_verify_rejects_corrupted_custom_weights(capsys, tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"n": 2, "a": [1.0, -1.0]}), encoding="utf-8")
    code, out, err = run(capsys, ["verify", "--weights", f"custom:@{path}"])
    assert code == 1
    assert "positivity violation at index 2" in err


def test_help_mentions_default_seed(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    assert "0x5eed" in capsys.readouterr().out


@pytest.mark.slow
def test_module_entry_point():
    argv = [sys.executable, "-m", "evaluation.cli", "moment", "--n", "2", "--s", "1"]
    first = subprocess.run(argv, cwd=ROOT, capture_output=True, check=False)
    second = subprocess.run(argv, cwd=ROOT, capture_output=True, check=False)
    assert first.returncode == 0
    assert first.stdout == second.stdout
