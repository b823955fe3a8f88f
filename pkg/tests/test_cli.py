import csv
import io
import json
import subprocess
import sys

import pytest

from expmod.cli import EXIT_CONFIG, EXIT_OK, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_correlation_rows(capsys):
    code, out, _ = run(["correlation", "--p", "0.1", "--n-max", "50", "--precision", "128"], capsys)
    assert code == EXIT_OK
    assert out.startswith("# expmod/correlation/1\n")
    rows = rows_of(out)
    assert len(rows) == 49
    assert rows[0]["n"] == "2" and rows[0]["value"].startswith("1.3020833")


def test_correlation_rational(capsys):
    code, out, _ = run(["correlation", "--mode", "rational", "--p", "1/10", "--n-max", "25"], capsys)
    rows = rows_of(out)
    assert code == EXIT_OK and rows[0]["value"] == "25/192"
    assert all("/" in r["value"] for r in rows) and rows[0]["precision"] == "exact"


def test_json_has_same_fields(capsys):
    _, out, _ = run(["correlation", "--p", "0.2", "--n-max", "5", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["schema"] == "expmod/correlation/1"
    assert doc["columns"] == ["n", "value", "mode", "precision"]
    assert doc["config"]["p"] == "0.2" and len(doc["rows"]) == 4


def test_invalid_config_exit_codes(capsys):
    assert run(["correlation", "--p", "1.5"], capsys)[0] == EXIT_CONFIG
    assert run(["correlation", "--p", "0.1", "--n-max", "1"], capsys)[0] == EXIT_CONFIG
    assert run(["correlation", "--p", "0.1", "--precision", "20"], capsys)[0] == EXIT_CONFIG
    assert run(["correlation"], capsys)[0] == EXIT_CONFIG


def test_exponent_grid_and_singular(capsys):
    code, out, _ = run(["exponent", "--p-grid", "0.05:0.45:0.05"], capsys)
    assert code == EXIT_OK and len(rows_of(out)) == 9
    code, out, _ = run(["exponent", "--p", "0.5"], capsys)
    assert code == EXIT_OK and rows_of(out)[0]["beta_theoretical"] == "singular"


def test_fit_synthetic_input(tmp_path, capsys):
    src = tmp_path / "series.csv"
    src.write_text("n,value\n" + "".join(f"{n},{2.0 * n ** -0.75!r}\n" for n in range(1, 200)))
    code, out, _ = run(["fit", "--input", str(src)], capsys)
    row = rows_of(out)[0]
    assert code == EXIT_OK
    assert float(row["fit_slope"]) == pytest.approx(-0.75, abs=1e-12)
    assert float(row["residual"]) < 1e-12


def test_fit_singular_row(capsys):
    code, out, _ = run(["fit", "--p", "1/2", "--n-max", "200"], capsys)
    assert code == EXIT_OK and rows_of(out)[0]["status"] == "singular"


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": "0.3", "n_max": 6, "precision": 64}))
    _, out, _ = run(["correlation", "--config", str(cfg)], capsys)
    assert len(rows_of(out)) == 5
    _, out, _ = run(["correlation", "--config", str(cfg), "--n-max", "9"], capsys)
    assert len(rows_of(out)) == 8
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["correlation", "--config", str(cfg)], capsys)[0] == EXIT_CONFIG


def test_stationary(capsys):
    _, out, _ = run(["stationary", "--p", "1/10", "--ell", "1", "--mode", "rational"], capsys)
    rows = rows_of(out)
    assert [r["word"] for r in rows] == ["00", "01", "10", "11"]
    assert rows[0]["weight"] == rows[3]["weight"]


def test_simulate_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--p", "0.1", "--n-max", "4", "--samples", "5000", "--seed", "11", "--burn-in", "30"]
    main(args + ["--output", str(a)])
    main(args + ["--output", str(b)])
    assert a.read_bytes() == b.read_bytes()
    rows = rows_of(a.read_text())
    assert list(rows[0]) == ["n", "estimate", "ci_half_width", "exact_value", "z_score"]


def test_simulate_single_sample(capsys):
    _, out, _ = run(["simulate", "--p", "0.1", "--n-max", "2", "--samples", "1"], capsys)
    assert float(rows_of(out)[0]["ci_half_width"]) == pytest.approx(0.49)


def test_simulate_length_check(capsys):
    assert run(["simulate", "--p", "0.1", "--n-max", "5", "--length", "3"], capsys)[0] == EXIT_CONFIG


def test_verify_unknown_suite(capsys):
    assert run(["verify", "nope"], capsys)[0] == EXIT_CONFIG


def test_verify_lowp_suite(capsys):
    code, out, _ = run(["verify", "appendixE"], capsys)
    doc = json.loads(out)
    check = next(c for c in doc["checks"] if c["name"] == "alpha_110_25")
    assert code == EXIT_OK and doc["passed"]
    assert abs(float(check["value"]) - 1.0999111) <= 1e-6


def test_pstar_and_sweep(capsys):
    _, out, _ = run(["pstar", "--n-max", "200"], capsys)
    assert 0.25 <= float(rows_of(out)[0]["p_star"]) <= 0.31
    _, out, _ = run(["sweep", "--p-grid", "0.1,0.2", "--n-max", "5"], capsys)
    assert len(rows_of(out)) == 10


def test_spectrum(capsys):
    code, out, err = run(["spectrum", "--p", "0.1", "--n-max", "2000", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK and "fitted_exponent" in doc


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "expmod.cli", "exponent", "--p", "0.2"], capture_output=True, text=True)
    assert res.returncode == 0 and "expmod/exponent/1" in res.stdout


def test_precision_exhaustion_exit_code(monkeypatch, capsys):
    import expmod.correlation
    from expmod.cli import EXIT_NUMERIC
    from expmod.errors import PrecisionExhaustedError

    def fail(*args, **kwargs):
        raise PrecisionExhaustedError("forced", 17)

    monkeypatch.setattr(expmod.correlation, "correlation_series", fail)
    code, _, err = run(["correlation", "--p", "0.1", "--n-max", "20"], capsys)
    assert code == EXIT_NUMERIC and "numeric failure" in err


def test_verify_failure_exit_code(monkeypatch, capsys):
    import expmod.verify
    from expmod.cli import EXIT_VERIFY

    monkeypatch.setattr(expmod.verify, "run_suite", lambda name: (False, []))
    assert run(["verify", "marginals"], capsys)[0] == EXIT_VERIFY
