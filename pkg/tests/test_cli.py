import csv
import io

import pytest

from beamase import ConfigError
from beamase import ase as ase_mod
from beamase import cli
from beamase.cli import RunConfig, dump_run_config, load_grid, main, parse_grid, parse_run_config
from beamase.quadrature import QuadratureError


def read_csv(text):
    lines = text.splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return comments, list(csv.DictReader(io.StringIO("\n".join(body))))


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_evaluate_writes_one_row(tmp_path, capsys):
    out = tmp_path / "eval.csv"
    code, text, _ = run(["evaluate", "--band", "fr2", "--isd", "125", "--speed", "30", "--n", "4",
                         "--out", str(out)], capsys)
    assert code == 0
    assert "p_bm" in text and "R_eff" in text
    comments, rows = read_csv(out.read_text())
    assert out.read_text().startswith("#schema=1\n")
    assert list(rows[0]) == list(cli.COLUMNS)
    assert len(rows) == 1 and rows[0]["n"] == "4" and rows[0]["band"] == "fr2"

    run(["evaluate", "--band", "fr2", "--isd", "125", "--speed", "3", "--n", "5", "--out", str(out)], capsys)
    comments2, rows2 = read_csv(out.read_text())
    assert comments2 == comments and len(rows2) == 2


def test_static_user_has_zero_overhead(capsys):
    code, text, _ = run(["evaluate", "--band", "fr1", "--isd", "500", "--speed", "0", "--n", "3"], capsys)
    _, rows = read_csv(text[text.index("#schema"):])
    assert code == 0 and float(rows[0]["T_o"]) == 0.0 and float(rows[0]["p_bm"]) == 0.0


def test_fr1_header_echoes_deployment_table(capsys):
    _, text, _ = run(["evaluate", "--band", "fr1", "--isd", "250", "--n", "2"], capsys)
    band_line = next(ln for ln in text.splitlines() if ln.startswith("#band=fr1"))
    for item in ("tx_dbm=43", "bw_mhz=100", "ssb_ms=20", "tb_ms=23", "tc_ms=43"):
        assert item in band_line.split()


def test_log_base_and_noise_convention_flags(capsys):
    _, text, _ = run(["evaluate", "--band", "fr1", "--isd", "500", "--n", "4", "--log-base", "bits",
                      "--noise-convention", "n0"], capsys)
    assert "#units rate=bits/s" in text
    assert "noise_convention=n0" in text


def test_optimize_reports_curve_and_optimum(tmp_path, capsys):
    out = tmp_path / "opt.csv"
    code, text, _ = run(["optimize", "--band", "fr1", "--isd", "250", "--speed", "30", "--out", str(out)],
                        capsys)
    comments, rows = read_csv(out.read_text())
    assert code == 0 and "n* = 8" in text
    assert "#n_star=8 degenerate=false" in comments
    assert [int(r["n"]) for r in rows] == list(range(1, 11))


def test_optimize_single_point(capsys):
    code, text, err = run(["optimize", "--band", "fr2", "--isd", "75", "--n-min", "3", "--n-max", "3"],
                          capsys)
    assert code == 0 and "n* = 3" in err
    assert "#n_star=3" in text


def test_degenerate_optimum_still_succeeds(capsys):
    code, text, err = run(["optimize", "--band", "fr1", "--isd", "250", "--speed", "120",
                           "--tc-ms", "10000", "--n-min", "1", "--n-max", "3"], capsys)
    assert code == 0 and "degenerate" in err
    assert "#n_star=1 degenerate=true" in text


@pytest.mark.parametrize("name,rows", [("fig_fr1", 90), ("fig_fr2.grid", 60)])
def test_bundled_grids(name, rows, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert run(["sweep", "--grid", name, "--out", str(out)], capsys)[0] == 0
    comments, table = read_csv(out.read_text())
    assert len(table) == rows
    assert comments[0] == "#schema=1"
    assert ",".join(table[0]) == "band,isd_m,speed_kmh,n,p_bm,mu_b,mu_c,T_o,rate,ase_eff"


def test_sweep_from_band_axes(capsys):
    code, text, _ = run(["sweep", "--band", "fr2", "--n-min", "5", "--n-max", "6"], capsys)
    _, rows = read_csv(text)
    assert code == 0 and len(rows) == 3 * 2 * 2


def test_sweep_numerical_failure_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise QuadratureError("budget", 0.0, 1.0)

    monkeypatch.setattr(ase_mod, "effective_ase", boom)
    code, text, err = run(["sweep", "--band", "fr2", "--n-min", "5", "--n-max", "5"], capsys)
    _, rows = read_csv(text)
    assert code == 2 and "numerical failure" in err
    assert all(r["rate"] == "nan" for r in rows)


def test_numerical_failure_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise QuadratureError("outer integral did not converge", 0.0, 1.0)

    monkeypatch.setattr(cli, "effective_ase", boom)
    code, _, err = run(["evaluate", "--n", "3"], capsys)
    assert code == 2 and "outer integral" in err


@pytest.mark.parametrize("argv", [
    ["evaluate", "--n", "30"],
    ["evaluate", "--isd", "-5"],
    ["evaluate", "--band", "custom", "--isd", "100"],
    ["evaluate", "--tol", "0.5"],
    ["validate", "--perturb-gain", "lots"],
    ["sweep", "--grid", "no_such_grid"],
])
def test_validation_errors_exit_one(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 1 and err.startswith("error:")


def test_usage_error_exit_status():
    with pytest.raises(SystemExit) as info:
        main(["evaluate", "--bogus"])
    assert info.value.code == 1


def test_custom_band(capsys):
    argv = ["evaluate", "--band", "custom", "--isd", "200", "--freq-ghz", "3.5", "--bw-mhz", "20",
            "--tx-dbm", "40", "--noise-dbm-hz", "-174", "--ssb-ms", "20", "--tb-ms", "23",
            "--tc-ms", "43", "--alpha-los", "3.0", "--alpha-nlos", "3.0", "--los-radius", "0",
            "--qmax-db", "30"]
    code, text, _ = run(argv, capsys)
    assert code == 0 and "#band=custom" in text


def test_run_config_round_trip():
    rc = RunConfig(band="fr2", isd=125.0, speed_kmh=3.0, n=6, n_min=2, n_max=9,
                   deployment={"tx_dbm": 30.0, "los_radius": 50.0}, tol=1e-6, samples=5000,
                   seed=3, trajectory_m=2e5, workers=2, log_base="bits", noise_convention="n0",
                   out="x.csv")
    text = dump_run_config(rc)
    again = parse_run_config(text)
    assert again == rc
    assert dump_run_config(again) == text
    assert parse_run_config(dump_run_config(RunConfig())) == RunConfig()


def test_config_file_with_flag_override(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text(dump_run_config(RunConfig(band="fr2", isd=75.0, n=5)))
    code, text, _ = run(["evaluate", "--config", str(path), "--n", "2"], capsys)
    _, rows = read_csv(text[text.index("#schema"):])
    assert code == 0 and rows[0]["isd_m"] == "75.0" and rows[0]["n"] == "2"


@pytest.mark.parametrize("text", [
    "[run]\nband = fr9\n",
    "[run]\nsamples = many\n",
    "[extras]\nfoo = 1\n",
    "[run]\ncolour = red\n",
    "[deployment]\nwidth = 3\n",
    "not an ini file",
])
def test_bad_config_files(text):
    with pytest.raises(ConfigError):
        parse_run_config(text)


def test_grid_files():
    grids = parse_grid("[a]\nband = fr2\nisd_m = 75 125\nspeed_kmh = 3\nn_min = 2\nn_max = 4\ntx_dbm = 30\n")
    assert grids[0].isds == (75.0, 125.0) and grids[0].overrides == {"tx_dbm": 30.0}
    assert len(load_grid("fig_fr1")[0].isds) == 3
    for bad in ("", "[a]\nband = fr2\n", "[a]\nband = fr2\nisd_m = 1\nspeed_kmh = 3\nfoo = 1\n",
                "[a]\nband = fr2\nisd_m = 1\nspeed_kmh = 3\nn_max = 40\n"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_validate_small_sample_count_passes(capsys):
    code, text, _ = run(["validate", "--band", "fr2", "--isd", "125", "--samples", "1000",
                         "--trajectory", "2e5"], capsys)
    assert code == 0
    assert text.count("PASS") == 26 and "FAIL" not in text


def test_validate_perturbed_gain_fails(capsys):
    code, text, _ = run(["validate", "--band", "fr2", "--isd", "125", "--samples", "20000",
                         "--n", "4", "--perturb-gain", "2x"], capsys)
    assert code == 3
    ps_lines = [ln for ln in text.splitlines() if " p_s " in ln]
    assert any(ln.startswith("FAIL") for ln in ps_lines)
    crossing = [ln for ln in text.splitlines() if "intensity" in ln]
    assert crossing and all(ln.startswith("PASS") for ln in crossing)
