"""Command-line interface: subcommands, exit codes, determinism, pipeline."""

import hashlib
import math

import pytest

from qrng_audit.cli import main


def run(args):
    return main([str(a) for a in args])


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_simulate_writes_expected_rows(tmp_path, capsys):
    out = tmp_path / "jobs.csv"
    assert run(["simulate", "--qubits", 3, "--jobs", 4, "--bits", 32,
                "--seed", 42, "--out", out]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 3 * 4
    assert "seed 42" in capsys.readouterr().out


def test_simulate_deterministic_by_seed(tmp_path):
    a, b, c = (tmp_path / name for name in ("a.csv", "b.csv", "c.csv"))
    run(["simulate", "--qubits", 2, "--jobs", 3, "--bits", 64, "--seed", 1, "--out", a])
    run(["simulate", "--qubits", 2, "--jobs", 3, "--bits", 64, "--seed", 1, "--out", b])
    run(["simulate", "--qubits", 2, "--jobs", 3, "--bits", 64, "--seed", 2, "--out", c])
    assert sha256(a) == sha256(b)
    assert sha256(a) != sha256(c)


def test_simulate_markov_rho_out_of_range_exits_2(tmp_path, capsys):
    code = run(["simulate", "--model", "markov", "--rho", 1.5,
                "--out", tmp_path / "x.csv"])
    assert code == 2
    assert "rho" in capsys.readouterr().err


def test_simulate_drifting_needs_schedule(tmp_path):
    assert run(["simulate", "--model", "drifting", "--out", tmp_path / "x.csv"]) == 2
    assert run(["simulate", "--model", "drifting", "--schedule", "0.4:2,0.6:2",
                "--jobs", 4, "--qubits", 1, "--bits", 16,
                "--out", tmp_path / "x.csv"]) == 0


def test_unknown_flag_exits_2(tmp_path):
    assert run(["simulate", "--frobnicate", "--out", tmp_path / "x.csv"]) == 2


def test_test_alternating_fixture_all_fail(tmp_path):
    jobs = tmp_path / "jobs.csv"
    jobs.write_text(
        "job_id,timestamp,qubit_id,bits\n"
        + "".join(
            f"j{j},2019-05-09T1{j}:00:00Z,{q},{'01' * 256}\n"
            for j in range(2) for q in range(2)
        )
    )
    out = tmp_path / "results.csv"
    assert run(["test", "--in", jobs, "--out", out]) == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 4
    assert all(row.endswith(",fail") for row in rows)


def test_test_all_ones_fixture_degenerate(tmp_path):
    jobs = tmp_path / "jobs.csv"
    jobs.write_text(
        "job_id,timestamp,qubit_id,bits\nj1,2019-05-09T11:00:00Z,0,11111111\n"
    )
    out = tmp_path / "results.csv"
    assert run(["test", "--in", jobs, "--out", out]) == 0
    assert out.read_text().splitlines()[1].endswith(",degenerate")


def test_test_parse_error_exits_1_with_line(tmp_path, capsys):
    jobs = tmp_path / "jobs.csv"
    jobs.write_text(
        "job_id,timestamp,qubit_id,bits\nj1,2019-05-09T11:00:00Z,0,01a0\n"
    )
    assert run(["test", "--in", jobs, "--out", tmp_path / "r.csv"]) == 1
    assert "line 2" in capsys.readouterr().err


def test_test_missing_input_exits_1(tmp_path):
    assert run(["test", "--in", tmp_path / "nope.csv", "--out", tmp_path / "r.csv"]) == 1


def test_test_bad_lag_exits_2(tmp_path):
    jobs = tmp_path / "jobs.csv"
    jobs.write_text(
        "job_id,timestamp,qubit_id,bits\nj1,2019-05-09T11:00:00Z,0,0110\n"
    )
    assert run(["test", "--in", jobs, "--out", tmp_path / "r.csv", "--lag", 0]) == 2
    assert run(["test", "--in", jobs, "--out", tmp_path / "r.csv", "--lag", 99]) == 2


def test_test_fixed_bias_flag(tmp_path):
    jobs = tmp_path / "jobs.csv"
    jobs.write_text(
        "job_id,timestamp,qubit_id,bits\nj1,2019-05-09T11:00:00Z,0,01100110\n"
    )
    out = tmp_path / "r.csv"
    assert run(["test", "--in", jobs, "--out", out, "--bias", "fixed:0.25"]) == 0
    assert ",0.25," in out.read_text().splitlines()[1]
    assert run(["test", "--in", jobs, "--out", out, "--bias", "fixed:7"]) == 2
    assert run(["test", "--in", jobs, "--out", out, "--bias", "sometimes"]) == 2


def test_cross_check_p_values_against_stdlib(tmp_path):
    """Independent recomputation of every p-value from the raw bits."""
    jobs = tmp_path / "jobs.csv"
    run(["simulate", "--qubits", 2, "--jobs", 5, "--bits", 512,
         "--seed", 77, "--out", jobs])
    results = tmp_path / "results.csv"
    run(["test", "--in", jobs, "--out", results])

    bits_by_key = {}
    for line in jobs.read_text().splitlines()[1:]:
        job_id, _, qubit, bits = line.split(",")
        bits_by_key[(job_id, int(qubit))] = [int(b) for b in bits]
    checked = 0
    for line in results.read_text().splitlines()[1:]:
        job_id, qubit, n, lag, bias, stat, normalized, p, verdict = line.split(",")
        bits = bits_by_key[(job_id, int(qubit))]
        a = sum(x ^ y for x, y in zip(bits, bits[1:]))
        p_hat = sum(bits) / len(bits)
        q = 2 * p_hat * (1 - p_hat)
        m = len(bits) - 1
        z = (a - q * m) / math.sqrt(m * q * (1 - q))
        assert int(stat) == a
        assert float(bias) == p_hat
        assert float(p) == pytest.approx(math.erfc(abs(z) / math.sqrt(2)), abs=1e-9)
        checked += 1
    assert checked == 10


def test_aggregate_without_calibration(tmp_path, capsys):
    jobs = tmp_path / "jobs.csv"
    run(["simulate", "--qubits", 2, "--jobs", 3, "--bits", 128,
         "--seed", 5, "--out", jobs])
    results = tmp_path / "results.csv"
    run(["test", "--in", jobs, "--out", results])
    report = tmp_path / "report.csv"
    scatter = tmp_path / "scatter.csv"
    assert run(["aggregate", "--in", results, "--report", report,
                "--scatter", scatter]) == 0
    assert report.exists()
    assert not scatter.exists()
    out = capsys.readouterr().out
    assert "simultaneous-pass proportion" in out
    assert "no calibration" in out


def test_aggregate_single_job_proportions_are_binary(tmp_path):
    jobs = tmp_path / "jobs.csv"
    run(["simulate", "--qubits", 2, "--jobs", 1, "--bits", 128,
         "--seed", 5, "--out", jobs])
    results = tmp_path / "results.csv"
    run(["test", "--in", jobs, "--out", results])
    report = tmp_path / "report.csv"
    run(["aggregate", "--in", results, "--report", report])
    footer = [l for l in report.read_text().splitlines()
              if l.startswith("# simultaneous_pass_proportion=")]
    assert footer[0].split("=")[1] in ("0.0", "1.0")


def test_oracle_small_table(tmp_path, capsys):
    out = tmp_path / "table.csv"
    assert run(["oracle", "--n", 3, "--lag", 1, "--p", 0.5, "--out", out]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "statistic,exact_p,approx_p,difference"
    exact = [float(l.split(",")[1]) for l in lines[1:]]
    assert exact == [0.5, 1.0, 0.5]
    assert "max |exact - approx|" in capsys.readouterr().out


def test_oracle_size_limit_exits_2(tmp_path):
    assert run(["oracle", "--n", 30, "--p", 0.3, "--out", tmp_path / "t.csv"]) == 2


def test_oracle_big_n_fair_bias_allowed(tmp_path):
    out = tmp_path / "t.csv"
    assert run(["oracle", "--n", 1024, "--lag", 1, "--p", 0.5,
                "--k-min", 400, "--k-max", 620, "--out", out]) == 0
    assert len(out.read_text().splitlines()) == 222


def test_pipeline_matches_manual_stages(tmp_path):
    workdir = tmp_path / "run"
    assert run(["pipeline", "--qubits", 3, "--jobs", 5, "--bits", 256,
                "--seed", 9, "--workdir", workdir]) == 0
    jobs = tmp_path / "jobs.csv"
    cal = tmp_path / "cal.csv"
    results = tmp_path / "results.csv"
    report = tmp_path / "report.csv"
    scatter = tmp_path / "scatter.csv"
    run(["simulate", "--qubits", 3, "--jobs", 5, "--bits", 256, "--seed", 9,
         "--out", jobs, "--calibration-out", cal])
    run(["test", "--in", jobs, "--out", results])
    run(["aggregate", "--in", results, "--calibration", cal,
         "--report", report, "--scatter", scatter])
    for manual, staged in [
        (jobs, workdir / "jobs.csv"),
        (cal, workdir / "calibration.csv"),
        (results, workdir / "results.csv"),
        (report, workdir / "report.csv"),
        (scatter, workdir / "scatter.csv"),
    ]:
        assert sha256(manual) == sha256(staged), staged.name


def test_pipeline_repeated_runs_identical(tmp_path):
    first = tmp_path / "r1"
    second = tmp_path / "r2"
    for workdir in (first, second):
        run(["pipeline", "--qubits", 2, "--jobs", 3, "--bits", 128,
             "--seed", 4, "--workdir", workdir])
    for name in ("jobs.csv", "calibration.csv", "results.csv", "report.csv", "scatter.csv"):
        assert sha256(first / name) == sha256(second / name)
