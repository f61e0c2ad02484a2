import math

import pytest

from anisopolar.cli import main


def read(path):
    return path.read_text()


def test_sigma_command(tmp_path, capsys):
    code = main(["sigma", "--P", "euclid2", "--region", "all",
                 "--samples", str(2 ** 16), "--seed", "7",
                 "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    value = float(out.split("=")[1].split("+-")[0])
    assert abs(value - 2 * math.pi) < 0.05
    assert (tmp_path / "sigma.csv").exists()
    assert (tmp_path / "manifest.txt").exists()


def test_sigma_csv_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["sigma", "--samples", str(2 ** 14), "--seed", "3",
                     "--out", str(out)]) == 0
    assert read(a / "sigma.csv") == read(b / "sigma.csv")


def test_integrate_command(tmp_path, capsys):
    code = main(["integrate", "--P", "euclid2_sq", "--f", "gauss",
                 "--samples", str(2 ** 16), "--seed", "1", "--out", str(tmp_path)])
    assert code == 0
    value = float(capsys.readouterr().out.split("=")[1].split("+-")[0])
    assert abs(value - math.pi) < 0.05


def test_classify_command(tmp_path, capsys):
    code = main(["classify", "--fixture", "example3", "--out", str(tmp_path)])
    assert code == 0
    summary = read(tmp_path / "classify_summary.txt")
    assert "imaginary_homogeneous" in summary
    assert "positive_homogeneous" in summary
    assert "mu_phi=2/3" in summary
    assert (tmp_path / "classification_0.txt").exists()
    assert (tmp_path / "classification_1.txt").exists()


def test_decay_command_lazy_walk(tmp_path):
    code = main(["decay", "--fixture", "lazy2d", "--K", "16",
                 "--nmin", "64", "--nmax", "256", "--per-octave", "4",
                 "--out", str(tmp_path)])
    assert code == 0
    report = read(tmp_path / "slope_report.txt")
    assert "slope_in_band: True" in report
    assert (tmp_path / "decay.csv").exists()
    assert (tmp_path / "decay.gp").exists()


def test_checks_suites_exit_zero(tmp_path):
    for suite in ("group_laws", "series_roundtrip"):
        assert main(["checks", "--suite", suite, "--seed", "7",
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / f"checks_{suite}.csv").exists()


def test_unknown_fixture_is_validation_error(tmp_path):
    assert main(["classify", "--fixture", "nope", "--out", str(tmp_path)]) == 2


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("\n".join([
        "[run]",
        f"out = {tmp_path / 'from_config'}",
        "seed = 11",
        "[sigma]",
        "P = euclid2_sq",
        "samples = 16384",
        "",
    ]))
    code = main(["--config", str(cfg), "sigma"])
    assert code == 0
    assert (tmp_path / "from_config" / "sigma.csv").exists()
    body = read(tmp_path / "from_config" / "sigma.csv")
    assert ",11," in body  # seed came from the config file


def test_flag_overrides_config(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nseed = 11\n")
    out = tmp_path / "o"
    assert main(["--config", str(cfg), "sigma", "--seed", "5",
                 "--samples", str(2 ** 14), "--out", str(out)]) == 0
    assert ",5," in read(out / "sigma.csv")


def test_sigma_with_custom_exponent_and_semi_elliptic(tmp_path, capsys):
    code = main(["sigma", "--P", "semi", "--terms", "2 0 1; 0 2 1",
                 "--weights", "2 2", "--E", "0.5 0.3; -0.3 0.5",
                 "--samples", str(2 ** 16), "--seed", "2", "--out", str(tmp_path)])
    assert code == 0
    value = float(capsys.readouterr().out.split("=")[1].split("+-")[0])
    assert abs(value - math.pi) < 0.05  # |x|^2 written as a semi-elliptic table


def test_sigma_rejects_bad_matrix(tmp_path):
    code = main(["sigma", "--E", "1 2 3", "--samples", str(2 ** 14),
                 "--out", str(tmp_path)])
    assert code == 2


@pytest.mark.slow
def test_decay_command_example1_slope_report(tmp_path):
    code = main(["decay", "--fixture", "example1", "--K", "64",
                 "--nmax", "1024", "--out", str(tmp_path)])
    assert code == 0
    report = read(tmp_path / "slope_report.txt")
    assert "mu_phi: 1/2" in report
    slope = float([l for l in report.splitlines() if l.startswith("slope:")][0]
                  .split()[1])
    assert abs(slope + 0.5) <= 0.05
    csv = read(tmp_path / "decay.csv")
    assert csv.splitlines()[0] == "n,f_n,f_n_times_n_mu,method,runtime_ms"


def test_decay_csv_deterministic_apart_from_runtime(tmp_path):
    bodies = []
    for sub in ("r1", "r2"):
        out = tmp_path / sub
        assert main(["decay", "--fixture", "lazy2d", "--K", "8",
                     "--nmin", "32", "--nmax", "64", "--per-octave", "2",
                     "--seed", "4", "--out", str(out)]) == 0
        rows = read(out / "decay.csv").splitlines()
        bodies.append(["," .join(r.split(",")[:4]) for r in rows])
    assert bodies[0] == bodies[1]
