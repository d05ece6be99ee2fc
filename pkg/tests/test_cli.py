import io
from pathlib import Path

import numpy as np
import pytest

from psifrac.cli import RunConfig, load_config, run

GOLDEN = Path(__file__).parent / "golden"

HILFER2 = ["--kind", "hilfer2", "--mu", "0.3,0.7", "--nu", "0.5,0.5", "--coefficients", "1,1,1", "--initial", "1,1"]

EXAMPLES = {
    "ml_e": ["ml", "--mu", "1", "--nu", "1", "--z", "1"],
    "solve_caputo": ["solve", "--kind", "caputo", "--psi", "identity", "--mu", "0.6", "--lambda", "1",
                     "--c", "1", "--forcing", "one", "--t-max", "1"],
    "compare_hilfer2": ["compare", *HILFER2],
}


def invoke(argv, environ=None):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, out, err, environ={} if environ is None else environ)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    # keep a stray psifrac.conf in the working directory out of the runs
    monkeypatch.chdir(tmp_path)


class TestGolden:
    @pytest.mark.parametrize("name", sorted(EXAMPLES))
    def test_matches_golden(self, name):
        code, out, err = invoke(EXAMPLES[name])
        assert code == 0, err
        assert out == (GOLDEN / f"{name}.txt").read_text()

    @pytest.mark.parametrize("name", sorted(EXAMPLES))
    def test_deterministic(self, name):
        assert invoke(EXAMPLES[name]) == invoke(EXAMPLES[name])

    def test_ml_value(self):
        _, out, _ = invoke(EXAMPLES["ml_e"])
        assert float(out) == pytest.approx(np.e, rel=1e-15)

    def test_csv_file(self, tmp_path):
        path = tmp_path / "out.csv"
        code, out, _ = invoke([*EXAMPLES["solve_caputo"], "--csv", str(path)])
        assert code == 0
        table = np.loadtxt(path, delimiter=",", skiprows=1)
        assert table.shape == (11, 3)
        assert table[-1, 1] == pytest.approx(7.4972700052967491, rel=1e-15)


class TestCommands:
    def test_wright_at_zero(self):
        code, out, _ = invoke(["wright", "--mu", "-0.5", "--nu", "0.5", "--z", "0"])
        assert code == 0
        # W(0; -1/2, 1/2) = 1/Gamma(1/2)
        assert float(out) == pytest.approx(1 / np.sqrt(np.pi), rel=1e-14)

    @pytest.mark.parametrize("argv", [
        ["fracop", "--op", "integral", "--mu", "0.5", "--points", "5"],
        ["transform", "--s", "1,2"],
        ["invtransform", "--image", "power:0.5", "--points", "5"],
        ["convolve", "--points", "5"],
        ["oracle", "--kind", "caputo", "--mu", "0.6", "--lambda", "1", "--forcing", "one", "--points", "5"],
        ["diffuse", "--mu", "1", "--points", "5"],
    ])
    def test_table_commands(self, argv):
        code, out, err = invoke(argv)
        assert code == 0, err
        lines = out.strip().splitlines()
        assert lines[0] == lines[0].lower() and "value" in lines[0]
        assert all(np.isfinite([float(v) for v in line.split(",")]).all() for line in lines[1:])

    def test_regularity_report(self):
        code, out, _ = invoke(["regularity", "--kind", "caputo", "--mu", "0.6", "--lambda", "0",
                               "--c", "1", "--order-c", "0", "--t-max", "10", "--points", "101"])
        assert code == 0
        report = dict(line.split() for line in out.strip().splitlines())
        assert report["passed"] == "true"


class TestConfig:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "run.conf"
        code, _, _ = invoke(["--save-config", str(path), *EXAMPLES["solve_caputo"]])
        assert code == 0
        saved = RunConfig.from_text(path.read_text())
        direct, _ = load_config(EXAMPLES["solve_caputo"], environ={})
        assert saved == direct
        assert invoke(["--config", str(path), "solve"]) == invoke(EXAMPLES["solve_caputo"])

    def test_text_roundtrip(self):
        cfg = RunConfig(command="compare", problem_mu=(0.3, 0.7), tol_atol=1e-9, grid_points=7)
        assert RunConfig.from_text(cfg.to_text()) == cfg

    def test_default_file_in_working_directory(self, tmp_path):
        (tmp_path / "psifrac.conf").write_text("problem.mu = 1\nproblem.nu = 1\n")
        assert invoke(["ml", "--z", "1"])[1] == invoke(EXAMPLES["ml_e"])[1]

    def test_precedence(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("tol.atol = 1e-6\ngrid.points = 5\n")
        cfg, _ = load_config(["--config", str(path), "ml"], environ={})
        assert cfg.tol_atol == 1e-6
        cfg, _ = load_config(["--config", str(path), "ml"], environ={"PSIFRAC_ATOL": "1e-7"})
        assert (cfg.tol_atol, cfg.grid_points) == (1e-7, 5)
        cfg, _ = load_config(["--config", str(path), "ml", "--atol", "1e-8"], environ={"PSIFRAC_ATOL": "1e-7"})
        assert cfg.tol_atol == 1e-8

    def test_comments_and_blank_lines(self):
        cfg = RunConfig.from_text("# settings\n\npsi.kind = sqrt  # trailing\n")
        assert cfg.psi_kind == "sqrt"


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ["bogus"],
        ["ml", "--no-such-flag", "1"],
        ["ml", "--mu", "-1", "--z", "1"],
        ["ml", "--mu", "abc"],
        ["solve", "--kind", "unknown"],
        ["solve", "--psi", "cubic"],
        ["ml", "--points", "0"],
        ["ml", "--atol", "nan"],
        ["--config", "/nonexistent/run.conf", "ml"],
    ])
    def test_invalid_input(self, argv):
        code, out, err = invoke(argv)
        assert code == 1
        assert err.startswith("psifrac: ")

    def test_bad_config_line(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("problem.mu 0.5\n")
        assert invoke(["--config", str(path), "ml"])[0] == 1

    def test_unknown_config_key(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("problem.colour = red\n")
        assert invoke(["--config", str(path), "ml"])[0] == 1

    def test_tolerance_not_met(self):
        code, out, err = invoke(["compare", *HILFER2, "--max-deviation", "1e-9"])
        assert code == 2
        assert "ToleranceNotMet" in err
        assert out.startswith("max_abs_deviation")

    def test_regularity_on_wrong_kind(self):
        assert invoke(["regularity", "--kind", "rl"])[0] == 1
