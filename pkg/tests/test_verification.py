import math

import numpy as np
import pytest

from exceptions import ConfigError, PoleError
from models import SuiteConfig
from verification import SUITES, VerificationRunner, failed_report, run_suite, scaled_report


@pytest.fixture
def runner() -> VerificationRunner:
    return VerificationRunner(SuiteConfig(suite="intertwiner", coarse=True))


def test_every_suite_lists_its_checks(runner):
    for suite in SUITES:
        method = getattr(runner, suite.replace("-", "_") + "_checks")
        names = [name for name, _ in method()]
        assert names
        assert len(names) == len(set(names))


def test_scaled_report():
    report = scaled_report("demo", "x = 0", np.array([1e-3, -2e-3j]), 2.0, 1e-2)
    assert report.residual_sup == pytest.approx(1e-3)
    assert report.samples == 2
    assert report.passed


def test_failed_report_carries_the_error():
    report = failed_report("demo", PoleError("pole at 0", {"mu": 0.0}), tolerance=1e-3)
    assert not report.passed
    assert math.isinf(report.residual_sup)
    assert report.anchor == "raised PoleError"
    assert report.grid_params == {"error": "pole at 0", "mu": 0.0}


def test_library_errors_are_recorded_as_failures(runner):
    def broken():
        raise PoleError("pole at 0")

    runner._run("broken", broken)
    assert runner.results[-1].name == "broken"
    assert not runner.results[-1].passed


def test_config_errors_propagate(runner):
    def misconfigured():
        raise ConfigError("unknown key")

    with pytest.raises(ConfigError):
        runner._run("misconfigured", misconfigured)


def test_tolerance_scale():
    runner = VerificationRunner(SuiteConfig(suite="intertwiner", tolerance_scale=3.0))
    assert runner.tolerance(1e-4) == pytest.approx(3e-4)


def test_fast_checks_pass(runner):
    for check in (runner.check_gamma, runner.check_c_at_zero, runner.check_c_pole, runner.check_c_conjugation,
                  runner.check_w_involution, runner.check_w_unitary, runner.check_w_at_zero,
                  runner.check_plancherel_values, runner.check_plancherel_evenness):
        result = check()
        assert result.passed, (result.name, result.residual_sup)


def test_sampled_checks_are_deterministic():
    first = VerificationRunner(SuiteConfig(suite="group-core", seed=42)).check_decompositions()
    second = VerificationRunner(SuiteConfig(suite="group-core", seed=42)).check_decompositions()
    assert first.to_report_dict() == second.to_report_dict()
    assert first.passed


@pytest.mark.slow
def test_group_core_suite():
    report = run_suite(SuiteConfig(suite="group-core"))
    assert report.passed, [c.name for c in report.checks if not c.passed]
    assert report.to_report_dict()["checks"][0]["test-name"] == "decomposition-reconstruction"


def test_report_config_leaves_out_output_paths(runner):
    runner.config = SuiteConfig(suite="intertwiner", coarse=True, json_path="a.json", csv_path="a.csv")
    runner.intertwiner_checks = lambda: []
    config = runner.run().to_report_dict()["config"]
    assert "json_path" not in config
    assert "csv_path" not in config
    assert config["seed"] == 42
