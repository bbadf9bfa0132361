import json

import numpy as np
import pytest

from annulus_energy import files
from annulus_energy.cli import main

GENERIC = ["--n", "2", "--r", "1", "--R", "2", "--r-star", "1", "--R-star", "3"]


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def usage_code(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return exc.value.code


def test_solve_conformal(tmp_path, capsys):
    base = tmp_path / "lin"
    code, out = run(["solve", "--n", "3", "--r", "1", "--R", "2", "--r-star", "3",
                     "--R-star", "6", "--alpha", "0.5", "--output", str(base)], capsys)
    assert code == 0
    assert "lambda_star = 3.0" in out.out and "case = Linear" in out.out
    table = files.read_profile(f"{base}.csv")
    assert np.allclose(table["H"], 3 * table["s"], rtol=0, atol=1e-12)
    report = json.loads((tmp_path / "lin.report.json").read_text())
    assert list(report) == list(files.REPORT_FIELDS)
    assert report["lambda_star"] == 3.0 and report["case"] == "Linear"


def test_solve_generic_round_trips_json(tmp_path, capsys):
    base = tmp_path / "gen"
    code, _ = run(["solve", *GENERIC, "--format", "json", "--grid", "128",
                   "--output", str(base)], capsys)
    assert code == 0
    table = files.read_profile(f"{base}.json")
    assert len(table["s"]) == 128
    assert table["H"][0] == 1.0 and abs(table["H"][-1] - 3.0) < 3e-9
    report = json.loads((tmp_path / "gen.report.json").read_text())
    assert report["case"] == "Expanding"
    assert report["energy_total"] == pytest.approx(
        report["energy_term"] + report["distortion_term"], rel=1e-15)


def test_outputs_are_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["solve", *GENERIC, "--grid", "64", "--output", str(tmp_path / name)]) == 0
    capsys.readouterr()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.report.json").read_bytes() == (tmp_path / "b.report.json").read_bytes()


def test_csv_round_trip_is_exact(tmp_path, capsys):
    main(["solve", *GENERIC, "--grid", "64", "--output", str(tmp_path / "p")])
    capsys.readouterr()
    table = files.read_profile(tmp_path / "p.csv")
    again = files.profile_text({k: table[k] for k in files.PROFILE_COLUMNS}, "csv")
    assert again == (tmp_path / "p.csv").read_text()


@pytest.mark.parametrize("argv", [
    ["solve", "--n", "2", "--r", "1", "--R", "2"],
    ["solve", "--n", "2", "--r", "2", "--R", "1", "--r-star", "1", "--R-star", "3"],
    ["verify", "--n", "2", "--r", "2", "--R", "1", "--r-star", "1", "--R-star", "3"],
    ["solve", *GENERIC, "--alpha", "1.5"],
    ["solve", *GENERIC, "--tol", "-1"],
    ["solve", *GENERIC, "--format", "xml"],
    ["sweep", *GENERIC],
    ["sweep", *GENERIC, "--lambda-min", "2", "--lambda-max", "1"],
    ["sweep", *GENERIC, "--alpha-values", ""],
    ["sweep", *GENERIC, "--alpha-values", "0.2,1.2"],
    ["sweep", *GENERIC, "--lambda-min", "1", "--lambda-max", "2", "--alpha-values", "0.5"],
    ["energy", *GENERIC],
    ["energy", *GENERIC, "--profile", "/nonexistent/p.csv"],
    ["solve", *GENERIC, "--output", "/nonexistent/dir/out"],
    [],
])
def test_usage_errors_exit_two(argv, capsys):
    assert usage_code(argv) == 2


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# generic instance\nn = 2\nr = 1\nR = 2\nr-star = 1\nR_star = 3\n"
                   "alpha = 0.3\ngrid = 64\n")
    code, out = run(["--config", str(cfg), "solve"], capsys)
    assert code == 0
    from_file = out.out
    code, out = run(["--config", str(cfg), "solve", "--alpha", "0.7"], capsys)
    assert code == 0 and out.out != from_file
    code, out = run(["solve", *GENERIC, "--alpha", "0.7", "--grid", "64"], capsys)
    assert out.out.splitlines()[:6] == run(["--config", str(cfg), "solve", "--alpha", "0.7"],
                                           capsys)[1].out.splitlines()[:6]


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 2\nspeed = 3\n")
    assert usage_code(["--config", str(cfg), "solve"]) == 2
    cfg.write_text("n = two\n")
    assert usage_code(["--config", str(cfg), "solve"]) == 2


def test_verify_passes_and_reports(tmp_path, capsys):
    report = tmp_path / "verify.json"
    code, out = run(["verify", *GENERIC, "--trials", "12", "--oracle-grid", "64",
                     "--report", str(report)], capsys)
    assert code == 0, out.out
    assert "FAIL" not in out.out
    doc = json.loads(report.read_text())
    assert {c["status"] for c in doc["checks"]} == {"pass"}
    planar = doc["planar_crosscheck"]
    assert planar["derived_M_vs_lagrangian"]["agrees"]
    assert not planar["planar_raw_weights"]["agrees"]


def test_verify_zero_trials_skips(capsys):
    code, out = run(["verify", *GENERIC, "--trials", "0", "--oracle-grid", "0"], capsys)
    assert code == 0
    assert "SKIP  dominance over trial profiles" in out.out
    assert "SKIP  discrete oracle" in out.out


def test_verify_failure_exits_one(monkeypatch, capsys):
    from annulus_energy import checks

    def broken(problem):
        raise RuntimeError("injected")

    monkeypatch.setattr(checks, "check_duality", broken)
    code, out = run(["verify", *GENERIC, "--trials", "0", "--oracle-grid", "0"], capsys)
    assert code == 1
    assert "FAILED: broken" in out.out


def test_lambda_sweep_brackets_root(tmp_path, capsys):
    out_file = tmp_path / "sweep.csv"
    code, out = run(["sweep", *GENERIC, "--lambda-min", "0.5", "--lambda-max", "4",
                     "--points", "7", "--grid", "64", "--output", str(out_file)], capsys)
    assert code == 0
    assert "strictly increasing: yes" in out.out
    assert "inside the range: yes" in out.out
    rows = np.genfromtxt(out_file, delimiter=",", names=True)
    assert np.all(np.diff(rows["H_R"]) > 0)
    assert rows["shoot"][0] < 0 < rows["shoot"][-1]


def test_alpha_sweep_is_continuous_and_thread_independent(tmp_path, monkeypatch, capsys):
    texts = []
    for threads in ("1", "4"):
        monkeypatch.setenv("ANNULUS_ENERGY_THREADS", threads)
        path = tmp_path / f"alpha{threads}.json"
        code, out = run(["sweep", *GENERIC, "--alpha-min", "0.1", "--alpha-max", "0.9",
                         "--points", "5", "--grid", "64", "--format", "json",
                         "--output", str(path)], capsys)
        assert code == 0 and "ok" in out.out
        texts.append(path.read_bytes())
    assert texts[0] == texts[1]
    doc = json.loads(texts[0])
    assert doc["alpha"] == sorted(doc["alpha"])


def test_alpha_sweep_threshold_violation(capsys):
    code, out = run(["sweep", *GENERIC, "--alpha-values", "0.1,0.9", "--grid", "64",
                     "--jump-threshold", "1e-6"], capsys)
    assert code == 1 and "EXCEEDED" in out.out


def test_bad_thread_env_is_usage_error(monkeypatch):
    monkeypatch.setenv("ANNULUS_ENERGY_THREADS", "many")
    assert usage_code(["sweep", *GENERIC, "--alpha-values", "0.5"]) == 2


def test_energy_of_written_profile(tmp_path, capsys):
    main(["solve", *GENERIC, "--output", str(tmp_path / "p")])
    solved = capsys.readouterr().out
    code, out = run(["energy", *GENERIC, "--profile", str(tmp_path / "p.csv"),
                     "--output", str(tmp_path / "e.json")], capsys)
    assert code == 0
    total = [line for line in solved.splitlines() if line.startswith("energy_total")]
    assert total[0] in out.out
    report = json.loads((tmp_path / "e.json").read_text())
    assert report["lambda_star"] is None


def test_output_base_with_format_suffix(tmp_path, capsys):
    code, _ = run(["solve", *GENERIC, "--grid", "32", "--output", str(tmp_path / "p.csv")], capsys)
    assert code == 0
    assert sorted(x.name for x in tmp_path.iterdir()) == ["p.csv", "p.report.json"]
