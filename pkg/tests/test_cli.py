"""Command-line interface: exit codes and artifact layout."""

import shutil
import subprocess

import pytest

from smcs.cli import main

TINY = """
[run]
n_particles = 64
seed = 3

[target]
dim = 1
"""

LOGISTIC = """
[run]
n_particles = 64

[target]
kind = "logistic_synthetic"
dim = 2
rows = 30
holdout = 5

[path]
kind = "partial_with_bridges"
batch_size = 10

[kernel]
kind = "mala"
"""


def write_cfg(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestRunCommand:
    def test_success_and_artifacts(self, tmp_path):
        cfg = write_cfg(tmp_path, TINY)
        out = tmp_path / "out"
        rc = main(["run", "--config", cfg, "--out", str(out)])
        assert rc == 0
        trace = out / "run" / "trace.csv"
        summary = out / "run" / "summary.csv"
        assert trace.exists() and summary.exists()
        assert trace.read_text().startswith(
            "t,lambda,ess_fraction,resampled,log_inc_z,root_count,accept,wall_time")
        assert summary.read_text().startswith("log_z,T,N,seed")

    def test_rerun_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path, TINY)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["run", "--config", cfg, "--out", str(out2)]) == 0
        for name in ("trace.csv", "summary.csv"):
            assert (out1 / "run" / name).read_bytes() == (out2 / "run" / name).read_bytes()

    def test_seed_override(self, tmp_path):
        cfg = write_cfg(tmp_path, TINY)
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--seed", "17", "--out", str(out)]) == 0
        last = (out / "run" / "summary.csv").read_text().strip().split("\n")[1]
        assert last.split(",")[3] == "17"

    def test_defaults_without_config(self, tmp_path):
        # empty config equals no config
        rc = main(["run", "--config", write_cfg(tmp_path, ""),
                   "--out", str(tmp_path / "out")])
        assert rc == 0


class TestExitCodes:
    def test_bad_config_key(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[run]\nwhat = 1\n")
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "configuration error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        rc = main(["run", "--config", str(tmp_path / "nope.toml"),
                   "--out", str(tmp_path / "out")])
        assert rc == 2

    def test_particle_death(self, tmp_path, capsys):
        text = TINY + '\n[path]\nkind = "truncated"\nlevels = [40.0]\n'
        cfg = write_cfg(tmp_path, text)
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
        assert rc == 3
        assert "particle death" in capsys.readouterr().err

    def test_wrong_target_for_logistic(self, tmp_path):
        cfg = write_cfg(tmp_path, TINY)
        rc = main(["logistic", "--config", cfg, "--out", str(tmp_path / "out")])
        assert rc == 2


class TestOtherCommands:
    def test_scaling(self, tmp_path):
        text = """
[scaling]
dimensions = [2, 3]
repeats = 2
iterations = 1
"""
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out"
        rc = main(["scaling", "--config", cfg, "--out", str(out), "--threads", "2"])
        assert rc == 0
        scaling = (out / "scaling" / "scaling.csv").read_text().strip().split("\n")
        assert scaling[0] == "d,regime,repeat,T,roots,mse_mean,log_z"
        assert len(scaling) == 1 + 2 * 3 * 2  # dims x regimes x repeats
        agg = (out / "scaling" / "aggregate.csv").read_text().strip().split("\n")
        assert agg[0] == "d,regime,T_mean,roots_mean,mse_mean,log_z_mean,log_z_var"
        assert len(agg) == 1 + 2 * 3

    def test_logistic(self, tmp_path):
        cfg = write_cfg(tmp_path, LOGISTIC)
        out = tmp_path / "out"
        rc = main(["logistic", "--config", cfg, "--out", str(out)])
        assert rc == 0
        seq = (out / "logistic" / "sequence.csv").read_text().strip().split("\n")
        assert seq[0].startswith("observations,log_ml,pred_score,mean_0")
        assert len(seq) == 1 + 4  # prior snapshot plus three batches

    def test_compare_paths(self, tmp_path):
        cfg = write_cfg(tmp_path, LOGISTIC.replace('kind = "partial_with_bridges"',
                                                   'kind = "geometric"'))
        out = tmp_path / "out"
        rc = main(["compare-paths", "--config", cfg, "--out", str(out)])
        assert rc == 0
        rows = (out / "compare-paths" / "comparison.csv").read_text().strip().split("\n")
        assert rows[0] == "path,step,param,coord,mean,var"
        names = {line.split(",")[0] for line in rows[1:]}
        assert names == {"geometric", "partial_posterior"}

    def test_pimh(self, tmp_path):
        text = TINY + "\n[pimh]\niterations = 10\n"
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out"
        rc = main(["pimh", "--config", cfg, "--out", str(out)])
        assert rc == 0
        chain = (out / "pimh" / "chain.csv").read_text().strip().split("\n")
        assert chain[0] == "iter,log_z,accepted,coord_0"
        assert len(chain) == 11
        assert (out / "pimh" / "acceptance.txt").exists()

    def test_combine(self, tmp_path):
        text = TINY + "\n[run]\nrepeats = 4\n"
        # toml forbids duplicate tables; rebuild instead
        text = """
[run]
n_particles = 64
seed = 3
repeats = 4

[target]
dim = 1
"""
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out"
        rc = main(["combine", "--config", cfg, "--out", str(out), "--threads", "2"])
        assert rc == 0
        runs = (out / "combine" / "runs.csv").read_text().strip().split("\n")
        assert runs[0] == "run,log_z,estimate_0"
        assert len(runs) == 5
        combined = (out / "combine" / "combined.txt").read_text()
        assert "estimate_0=" in combined and "ci_lo_0=" in combined


@pytest.mark.skipif(shutil.which("smcs") is None, reason="entry point not on PATH")
def test_console_script(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(TINY)
    proc = subprocess.run(["smcs", "run", "--config", str(cfg),
                           "--out", str(tmp_path / "out")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "out" / "run" / "summary.csv").exists()
