"""
Command line tests: exit codes, outputs and reproducibility.
"""

import pytest

import main
from main import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_ORACLE_VIOLATION, EXIT_RUNTIME_ERROR
from sampling_model import ContractViolation

SMALL_CONFIG = """\
experiment.name = small_rw
experiment.technique = MTM-rw
target.id = bimodal
proposal.0 = rw_gauss(2) x 5
sampler.tries = 5
sampler.init = 0
run.iterations = 200
run.replications = 6
run.seed = 3
output.statistics = accept_rate, mean_alpha, lag1_corr
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CONFIG)
    return path


class TestRun:

    def test_writes_csv(self, small_cfg, tmp_path):
        out = tmp_path / "small.csv"
        assert main.main(["run", "--config", str(small_cfg), "--out", str(out)]) == EXIT_OK
        header, row = out.read_text().splitlines()
        assert header.startswith("technique,N,accept_rate_mean,accept_rate_std")
        assert row.startswith("MTM-rw,5,")

    def test_workers_do_not_change_output(self, small_cfg, tmp_path):
        outputs = []
        for workers in ("1", "3"):
            out = tmp_path / f"w{workers}.csv"
            main.main(["run", "--config", str(small_cfg), "--out", str(out), "--workers", workers])
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_seed_override_changes_output(self, small_cfg, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main.main(["run", "--config", str(small_cfg), "--out", str(a)])
        main.main(["run", "--config", str(small_cfg), "--out", str(b), "--seed", "4"])
        assert a.read_bytes() != b.read_bytes()

    def test_invalid_configuration(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text(SMALL_CONFIG.replace("sampler.tries = 5", "sampler.tries = 6"))
        assert main.main(["run", "--config", str(path)]) == EXIT_CONFIG_ERROR
        assert "Declared N=6" in capsys.readouterr().out

    def test_runtime_failure_is_not_a_config_error(self, small_cfg, monkeypatch, capsys):
        def failing(*args, **kwargs):
            raise ContractViolation("Current state has zero target density")

        monkeypatch.setattr(main, "run_experiment", failing)
        assert main.main(["run", "--config", str(small_cfg)]) == EXIT_RUNTIME_ERROR
        assert "[ERROR] Sampling failed: Current state" in capsys.readouterr().out

    def test_unparsable_configuration(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("target.id bimodal\n")
        assert main.main(["run", "--config", str(path)]) == EXIT_CONFIG_ERROR
        assert "[ERROR]" in capsys.readouterr().out


class TestOracle:

    def test_single_variant(self, capsys):
        code = main.main(["oracle", "--variant", "generalized", "--battery", "3", "--states", "3"])
        assert code == EXIT_OK
        assert "DETAILED BALANCE ORACLE: generalized" in capsys.readouterr().out

    def test_violation_exit_code(self, monkeypatch):
        class FailingReport:
            passed = False

            def print_report(self):
                pass

        monkeypatch.setattr(main, "run_battery", lambda *args, **kwargs: FailingReport())
        assert main.main(["oracle", "--variant", "noref"]) == EXIT_ORACLE_VIOLATION

    def test_budget_is_a_config_error(self):
        assert main.main(["oracle", "--variant", "generalized", "--states", "12"]) == EXIT_CONFIG_ERROR


class TestDumpAndTemplates:

    def test_dump(self, small_cfg, tmp_path):
        out = tmp_path / "chain.txt"
        assert main.main(["dump", "--config", str(small_cfg), "--steps", "25", "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 26
        assert lines[0] == "0 0"

    def test_templates(self, tmp_path):
        assert main.main(["templates", "--dir", str(tmp_path / "tpl")]) == EXIT_OK
        assert (tmp_path / "tpl" / "experiment_template.cfg").exists()


@pytest.mark.slow
def test_table_is_reproducible(tmp_path):
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    assert main.main(["table", "--id", "t7", "--runs", "2", "--out", str(first), "--workers", "1"]) == EXIT_OK
    assert main.main(["table", "--id", "t7", "--runs", "2", "--out", str(second), "--workers", "2"]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert len(first.read_text().splitlines()) == 6


@pytest.mark.slow
def test_bimodal_table_is_reproducible(tmp_path):
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    args = ["table", "--id", "t2", "--runs", "20", "--seed", "7"]
    assert main.main(args + ["--out", str(first), "--workers", "1"]) == EXIT_OK
    assert main.main(args + ["--out", str(second), "--workers", "2"]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert len(first.read_text().splitlines()) == 10
