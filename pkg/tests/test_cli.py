"""CLI harness: config round-trip, dispatch, exit codes, idempotence."""

import os

import numpy as np
import pytest

from sbe import cli


BASE_CONFIG = """
# small smoke configuration
mode = kernel-check
alpha = 1.5
dim = 1
T = 1.0
steps = 4
paths = 20000
seed = 3
beta = -0.1
p = inf
q = inf
r = inf
drift.construction = zero
levels = 2,4,8,16
"""


def test_config_round_trip():
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    text = cfg.serialize()
    cfg2 = cli.ExperimentConfig.parse(text)
    assert cfg == cfg2
    assert cfg2.serialize() == text


def test_config_rejects_unknown_key():
    with pytest.raises(cli.ConfigError, match="unknown key"):
        cli.ExperimentConfig.parse("bogus = 1\n")
    with pytest.raises(cli.ConfigError, match="key = value"):
        cli.ExperimentConfig.parse("just some words\n")


def test_config_infinity_and_bool():
    cfg = cli.ExperimentConfig.parse("p = inf\nplot = true\n")
    assert cfg.p == np.inf and cfg.plot is True


def test_kernel_check_mode(tmp_path):
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    cfg.alpha = 1.0
    code = cli.run(cfg, str(tmp_path))
    assert code == cli.EXIT_OK
    text = (tmp_path / "kernel_check.csv").read_text()
    assert "cauchy" in text
    assert (tmp_path / "manifest.txt").exists()


def test_drift_check_mode(tmp_path):
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    cfg.mode = "drift-check"
    cfg.drift_construction = "single-mode"
    cfg.drift_length = 2 * np.pi
    code = cli.run(cfg, str(tmp_path))
    assert code == cli.EXIT_OK


def test_simulate_mode(tmp_path):
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    cfg.mode = "simulate"
    cfg.paths = 50
    code = cli.run(cfg, str(tmp_path))
    assert code == cli.EXIT_OK
    assert (tmp_path / "ensemble.csv").exists()


def test_rate_mode_zero_drift_reports_exact(tmp_path):
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    cfg.mode = "rate"
    cfg.paths = 20000
    code = cli.run(cfg, str(tmp_path))
    assert code == cli.EXIT_OK
    summary = (tmp_path / "rate_summary.txt").read_text()
    assert "exact" in summary


def test_rate_mode_idempotent_bytes(tmp_path):
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    cfg.mode = "rate"
    cfg.drift_construction = "single-mode"
    cfg.drift_length = 4.0
    cfg.paths = 20000
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert cli.run(cfg, str(out_a)) == cli.EXIT_OK
    assert cli.run(cfg, str(out_b)) == cli.EXIT_OK
    assert (out_a / "rate.csv").read_bytes() == (out_b / "rate.csv").read_bytes()


def test_invalid_besov_parameters_give_config_error(tmp_path):
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    cfg.mode = "rate"
    cfg.drift_construction = "random-fourier"
    cfg.beta = -0.3  # outside the well-posedness window at alpha = 1.5
    cfg.drift_cutoff = 2048
    code = cli.run(cfg, str(tmp_path))
    assert code == cli.EXIT_CONFIG


def test_inequalities_mode(tmp_path):
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    cfg.mode = "inequalities"
    cfg.sweep_size = 20
    code = cli.run(cfg, str(tmp_path))
    assert code == cli.EXIT_OK
    lines = (tmp_path / "inequalities.csv").read_text().splitlines()
    assert lines[0] == "variant,a,b,c,d,r_conj,ratio"
    assert len(lines) == 61


def test_duhamel_mode(tmp_path):
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    cfg.mode = "duhamel"
    cfg.paths = 20000
    code = cli.run(cfg, str(tmp_path))
    assert code == cli.EXIT_OK
    man = (tmp_path / "manifest.txt").read_text()
    assert "sup_normalized" in man


def test_decompose_mode(tmp_path):
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    cfg.mode = "decompose"
    cfg.steps = 4
    cfg.paths = 20000
    cfg.refinement = 4
    code = cli.run(cfg, str(tmp_path))
    assert code == cli.EXIT_OK
    header = (tmp_path / "decomposition.csv").read_text().splitlines()[0]
    assert header.startswith("y,delta_1")


def test_main_entry_point(tmp_path):
    cfg_path = tmp_path / "c.cfg"
    cfg_path.write_text(BASE_CONFIG)
    out = tmp_path / "out"
    code = cli.main(["kernel-check", "--config", str(cfg_path),
                     "--out", str(out), "--seed", "9"])
    assert code == cli.EXIT_OK
    assert "seed = 9" in (out / "manifest.txt").read_text()


def test_main_missing_config(tmp_path):
    code = cli.main(["kernel-check", "--config", str(tmp_path / "nope.cfg")])
    assert code == cli.EXIT_IO


def test_unwritable_output():
    cfg = cli.ExperimentConfig.parse(BASE_CONFIG)
    code = cli.run(cfg, "/proc/definitely/not/writable")
    assert code == cli.EXIT_IO
