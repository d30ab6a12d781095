import csv
import io
import json
import math

import pytest

from cli import EXIT_OK, EXIT_USAGE, build_parser, build_suite_config, load_config_file, main
from exceptions import ConfigError


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("SL2_SEED", "SL2_OUT_DIR", "SL2_LOG_FILE", "LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


class TestEval:
    def test_xi(self, capsys):
        assert main(["eval", "xi", "--t", "0,1"]) == EXIT_OK
        rows = read_csv(capsys.readouterr().out)
        assert rows[0] == ["t", "xi"]
        assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-12)
        assert 0 < float(rows[2][1]) < 1

    def test_c_function_at_zero(self, capsys):
        assert main(["eval", "c-function", "--side", "plus", "--j", "1", "--mu", "0"]) == EXIT_OK
        rows = read_csv(capsys.readouterr().out)
        assert rows[0] == ["side", "j", "mu_re", "mu_im", "re", "im"]
        assert float(rows[1][4]) == pytest.approx(math.pi)
        assert float(rows[1][5]) == pytest.approx(0.0, abs=1e-12)

    def test_c_function_pole_is_a_usage_error(self):
        assert main(["eval", "c-function", "--j", "0", "--mu", "0"]) == EXIT_USAGE

    def test_norm(self, capsys):
        assert main(["eval", "norm", "--g", "2,0,0,0.5"]) == EXIT_OK
        assert float(read_csv(capsys.readouterr().out)[1][1]) == pytest.approx(2.0)

    def test_non_unimodular_matrix(self):
        assert main(["eval", "norm", "--g", "2,0,0,2"]) == EXIT_USAGE

    def test_gamma(self, capsys):
        assert main(["eval", "gamma", "--z", "5"]) == EXIT_OK
        assert float(read_csv(capsys.readouterr().out)[1][2]) == pytest.approx(24.0)

    def test_plancherel(self, capsys):
        assert main(["eval", "plancherel", "--parity", "odd", "--mu", "0"]) == EXIT_OK
        assert float(read_csv(capsys.readouterr().out)[1][2]) == pytest.approx(1 / math.pi ** 2)

    def test_malformed_numbers(self):
        assert main(["eval", "xi", "--t", "zero"]) == EXIT_USAGE

    def test_unknown_object(self):
        assert main(["eval", "zeta"]) == EXIT_USAGE

    def test_output_file(self, tmp_path):
        path = tmp_path / "delta.csv"
        assert main(["eval", "delta", "--g", "2,0,0,0.5", "--out", str(path)]) == EXIT_OK
        rows = read_csv(path.read_text())
        assert rows[1][1] == "upper"
        assert float(rows[1][2]) == pytest.approx(4.0)


class TestTable:
    def test_plancherel_table_starts_at_zero(self, capsys):
        assert main(["table", "plancherel-table", "--jmax", "2", "--dmu", "0.5", "--mu-max", "2"]) == EXIT_OK
        rows = read_csv(capsys.readouterr().out)
        assert rows[0] == ["mu", "even", "odd"]
        assert float(rows[1][0]) == 0.0
        assert float(rows[1][1]) == 0.0
        assert float(rows[1][2]) == pytest.approx(1 / math.pi ** 2)
        assert len(rows) == 6

    def test_single_parity(self, capsys):
        assert main(["table", "plancherel-table", "even", "--dmu", "0.5", "--mu-max", "1"]) == EXIT_OK
        assert read_csv(capsys.readouterr().out)[0] == ["mu", "density"]

    def test_c_table_to_file(self, tmp_path):
        path = tmp_path / "c.csv"
        argv = ["table", "c-table", "--jmax", "2", "--dmu", "0.5", "--mu-max", "1", "--out", str(path)]
        assert main(argv) == EXIT_OK
        rows = read_csv(path.read_text())
        assert rows[0] == ["side", "j", "mu", "re", "im", "pole"]
        poles = [row for row in rows[1:] if row[-1] in ("1", "True")]
        assert {int(row[1]) for row in poles} == {-2, 0, 2}

    def test_grid_with_no_nodes_is_rejected(self):
        assert main(["table", "c-table", "--dmu", "0.3", "--mu-max", "1"]) == EXIT_USAGE
        assert main(["table", "c-table", "--jmax", "-1"]) == EXIT_USAGE


class TestConfig:
    def test_dotted_keys(self, tmp_path):
        path = tmp_path / "suite.env"
        path.write_text("quadrature.k_nodes=48\ngrid.jmax=6\nsuite.seed=7\n")
        overrides = load_config_file(str(path))
        assert overrides == {"quadrature": {"k_nodes": "48"}, "grid": {"jmax": "6"}, "seed": "7"}

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "suite.env"
        path.write_text("quadrature.k_nodes=48\nplotting.dpi=300\n")
        with pytest.raises(ConfigError):
            load_config_file(str(path))

    def test_unknown_key_exit_code(self, tmp_path):
        path = tmp_path / "suite.env"
        path.write_text("suite.colour=blue\n")
        assert main(["verify", "group-core", "--config", str(path)]) == EXIT_USAGE

    def test_missing_file(self):
        assert main(["verify", "group-core", "--config", "/nonexistent/suite.env"]) == EXIT_USAGE

    def test_flags_override_the_file(self, tmp_path):
        path = tmp_path / "suite.env"
        path.write_text("suite.seed=7\nsuite.tolerance_scale=2\ngrid.jmax=6\n")
        args = build_parser().parse_args(["verify", "intertwiner", "--config", str(path), "--seed", "11"])
        config = build_suite_config(args)
        assert config.seed == 11
        assert config.tolerance_scale == 2.0
        assert config.grid.jmax == 6
        assert config.suite == "intertwiner"

    def test_environment_seed(self, monkeypatch):
        monkeypatch.setenv("SL2_SEED", "5")
        config = build_suite_config(build_parser().parse_args(["verify", "frobenius"]))
        assert config.seed == 5

    def test_invalid_value(self, tmp_path):
        path = tmp_path / "suite.env"
        path.write_text("suite.tolerance_scale=-1\n")
        args = build_parser().parse_args(["verify", "all", "--config", str(path)])
        with pytest.raises(ConfigError):
            build_suite_config(args)


@pytest.mark.slow
def test_verify_writes_a_report(tmp_path):
    out = tmp_path / "report.json"
    summary = tmp_path / "report.csv"
    config = tmp_path / "suite.env"
    config.write_text(f"suite.csv_path={summary}\n")
    code = main(["verify", "group-core", "--coarse", "--config", str(config), "--out", str(out)])
    report = json.loads(out.read_text())
    assert code == (EXIT_OK if report["pass"] else 1)
    assert report["suite"] == "group-core"
    assert report["seed"] == 42
    names = [check["test-name"] for check in report["checks"]]
    assert names == sorted(names)
    assert "xi-at-identity" in names
    assert read_csv(summary.read_text())[0][0] == "test-name"


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["group-core", "intertwiner", "frobenius", "wave-packet", "second-adjoint"])
def test_verify_suite_passes(tmp_path, suite):
    out = tmp_path / f"{suite}.json"
    assert main(["verify", suite, "--seed", "42", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["pass"]
    assert all(check["pass"] for check in report["checks"])


@pytest.mark.slow
def test_verify_all_is_reproducible(tmp_path):
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    assert main(["verify", "all", "--seed", "42", "--out", str(first)]) == EXIT_OK
    assert main(["verify", "all", "--seed", "42", "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
