import subprocess
import sys

import pytest

from diffbeam import cli
from diffbeam.errors import NumericError

CONFIG = """
[experiment]
L = 8
cluster_sizes = 2
symbols = 3
trials = 1
warmup = 20

[scenario white]
freq = white
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG)
    return path


def test_simulate_writes_outputs(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(config), "--out", str(out), "--seed", "3", "--no-plots"]) == 0
    assert (out / "table_white_pooled.csv").exists()
    assert "report.json" in capsys.readouterr().out


def test_simulate_with_generated_codebook(config, tmp_path):
    args = ["simulate", "--config", str(config), "--out", str(tmp_path / "o"), "--no-plots",
            "--generate-codebook", "4,16,1"]
    assert cli.main(args) == 0


def test_codebook_gen_and_check(tmp_path, capsys):
    path = tmp_path / "cb.txt"
    assert cli.main(["codebook", "gen", "--mt", "4", "--n", "16", "--kind", "cyclic", "--out", str(path)]) == 0
    assert cli.main(["codebook", "check", str(path)]) == 0
    out = capsys.readouterr().out
    assert "J = " in out and "property1_deviation = " in out


def test_exit_code_config_error(tmp_path, config):
    config.write_text(CONFIG.replace("cluster_sizes = 2", "cluster_sizes = 3"))
    assert cli.main(["simulate", "--config", str(config)]) == cli.EXIT_CONFIG
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.ini")]) == cli.EXIT_CONFIG


def test_exit_code_io_error(tmp_path, config):
    assert cli.main(["codebook", "check", str(tmp_path / "missing.txt")]) == cli.EXIT_IO
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert cli.main(["simulate", "--config", str(config), "--out", str(blocker / "x"), "--no-plots"]) == cli.EXIT_IO


def test_exit_code_numeric_failure(config, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericError("did not converge")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert cli.main(["simulate", "--config", str(config)]) == cli.EXIT_NUMERIC


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "diffbeam", "codebook", "check", str(tmp_path / "nope")],
                         capture_output=True, text=True)
    assert res.returncode == 3 and "I/O error" in res.stderr
