from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from typer.testing import CliRunner

from main import app

runner = CliRunner()
FIG4_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "fig4.yaml"
FIG6_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "fig6.yaml"


@pytest.fixture(autouse=True)
def quiet_ui(monkeypatch):
    monkeypatch.setenv("SUPERRES_SHOW_UI", "false")


def write_config(path, text):
    path.write_text(text)
    return str(path)


def read_table(path):
    return pd.read_csv(path, comment="#")


def test_synth_then_recover_round_trip(tmp_path):
    config = write_config(tmp_path / "easy.yaml", "n: 64\ns: 3\nn_sep: 8.0\namplitudes: unit\n")
    synth = runner.invoke(app, ["synth", "--config", config, "--seed", "5", "--out", str(tmp_path / "data")])
    assert synth.exit_code == 0, synth.output

    recover = runner.invoke(
        app,
        ["recover", str(tmp_path / "data" / "samples.csv"), "--amplitude-floor", "1.0", "--out", str(tmp_path / "rec")],
    )
    assert recover.exit_code == 0, recover.output

    truth = np.sort(read_table(tmp_path / "data" / "truth.csv")["tau"].to_numpy())
    estimates = np.sort(read_table(tmp_path / "rec" / "estimates.csv")["omega"].to_numpy())
    np.testing.assert_allclose(estimates, truth, atol=1e-6)
    assert (tmp_path / "rec" / "trace.csv").exists()
    assert (tmp_path / "rec" / "summary.json").exists()


def test_recover_missing_file_is_an_io_error(tmp_path):
    result = runner.invoke(app, ["recover", str(tmp_path / "nope.csv"), "--gamma", "0.1", "--out", str(tmp_path)])
    assert result.exit_code == 3


def test_recover_asymmetric_mask_is_an_io_error(tmp_path):
    samples = tmp_path / "s.csv"
    samples.write_text("ell,re,im,observed\n-1,0,0,0\n0,1,0,1\n1,0,0,1\n")
    result = runner.invoke(app, ["recover", str(samples), "--gamma", "0.1", "--out", str(tmp_path)])
    assert result.exit_code == 3


def test_recover_without_threshold_is_a_config_error(tmp_path):
    runner.invoke(app, ["synth", "--n", "32", "--seed", "0", "--out", str(tmp_path)])
    result = runner.invoke(app, ["recover", str(tmp_path / "samples.csv"), "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_invalid_alpha_is_a_config_error(tmp_path):
    result = runner.invoke(app, ["certify", "--alpha", "3", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_unknown_config_key_is_a_config_error(tmp_path):
    config = write_config(tmp_path / "bad.yaml", "n: 64\nbandwidth: 3\n")
    result = runner.invoke(app, ["synth", "--config", config, "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_kernel_table_csv(tmp_path):
    result = runner.invoke(app, ["kernel-table", "--n", "32", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "kernel_table.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash: ")
    table = read_table(tmp_path / "kernel_table.csv")
    peak = table.loc[table["t"] == 0.0]
    assert np.allclose(peak[["K_alpha1", "K_alpha2", "K_alpha4"]].to_numpy(), 1.0)


def test_certify_csv(tmp_path):
    result = runner.invoke(app, ["certify", "--n", "64", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    report = read_table(tmp_path / "certify.csv")
    assert len(report) == 5
    assert report["passed"].all()


def test_sweep_dyn_is_reproducible(tmp_path):
    config = write_config(
        tmp_path / "sweep.yaml",
        "n: 64\nalgorithms: [omp]\nalphas: [1, 4]\nu_values: [1, 4]\n",
    )
    args = ["sweep-dyn", "--config", config, "--seed", "0", "--seeds", "2"]
    first = runner.invoke(app, args + ["--out", str(tmp_path / "a")])
    second = runner.invoke(app, args + ["--out", str(tmp_path / "b")])
    assert first.exit_code == 0, first.output
    assert second.exit_code == 0, second.output

    a = read_table(tmp_path / "a" / "sweep_dyn.csv")
    b = read_table(tmp_path / "b" / "sweep_dyn.csv")
    assert len(a) == 2 * 2 * 1 * 2
    pd.testing.assert_frame_equal(a.drop(columns="wall_time_s"), b.drop(columns="wall_time_s"))
    summary = read_table(tmp_path / "a" / "sweep_dyn_summary.csv")
    assert summary["failure_probability"].between(0.0, 1.0).all()


def test_sweep_sep_grid_is_fully_populated(tmp_path):
    config = write_config(
        tmp_path / "sep.yaml",
        "n: 64\nalgorithms: [sliding_omp]\nalphas: [4]\nv_values: [0.5, 1.5]\nn_sep_values: [2.0, 6.0]\n",
    )
    result = runner.invoke(app, ["sweep-sep", "--config", config, "--seeds", "2", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    summary = read_table(tmp_path / "sweep_sep_summary.csv")
    assert len(summary) == 4
    assert not summary.isna().any().any()
    transitions = read_table(tmp_path / "sweep_sep_transitions.csv")
    assert len(transitions) == 2


def test_adversarial_outputs(tmp_path):
    result = runner.invoke(app, ["adversarial", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    frame = read_table(tmp_path / "adversarial.csv")
    weakest = frame.loc[(frame["algorithm"] == "omp") & (frame["tau_index"] == 3)]
    assert weakest["outside_cell"].all()


def test_probe_concentration_outputs(tmp_path):
    config = write_config(tmp_path / "probe.yaml", "n: 128\nmeasurements: 100\ntrials: 4\n")
    result = runner.invoke(app, ["probe-concentration", "--config", config, "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    frame = read_table(tmp_path / "concentration.csv")
    assert len(frame) == 4 * 3
    assert (frame["deviation"] > 0).all()


@pytest.mark.slow
def test_reference_dynamic_range_sweep(tmp_path):
    out = tmp_path / "fig4"
    result = runner.invoke(app, ["sweep-dyn", "--config", str(FIG4_CONFIG), "--workers", "4", "--out", str(out)])
    assert result.exit_code == 0, result.output
    summary = read_table(out / "sweep_dyn_summary.csv")

    def failure(algorithm, alpha, u):
        cell = summary.loc[
            (summary["algorithm"] == algorithm) & (summary["alpha"] == alpha) & (summary["coordinate"] == u)
        ]
        return float(cell["failure_probability"].iloc[0])

    assert failure("sliding_omp", 4, 1.0) == 0.0
    assert failure("sliding_omp", 4, 8.0) == 0.0
    assert failure("omp", 1, 8.0) > failure("sliding_omp", 4, 8.0)

    # Grid-only OMP misses the 1e-4 tolerance at every u; its errors still order by alpha
    rows = read_table(out / "sweep_dyn.csv")
    plain = rows.loc[(rows["algorithm"] == "omp") & (rows["u"] == 8.0)]
    median_error = plain.groupby("alpha")["max_error"].median()
    assert median_error[4] < 0.5 * median_error[1]


@pytest.mark.slow
def test_recovery_time_scales_like_n_log_n(tmp_path):
    import time

    from Spectral.instances import default_n_grid, staircase_instance
    from Spectral.kernels import build_sigma
    from Spectral.solver import SolverConfig, sliding_omp

    timings = []
    for n in (2 ** 10, 2 ** 11, 2 ** 12, 2 ** 13):
        instance = staircase_instance(n, 10.0, "unit", seed=0)
        cfg = SolverConfig(pc=build_sigma(4, n), gamma=0.5, n_grid=default_n_grid(n), max_spikes=5)
        start = time.perf_counter()
        sliding_omp(instance.samples, cfg)
        timings.append(time.perf_counter() - start)
    ratios = [b / a for a, b in zip(timings, timings[1:])]
    assert max(ratios) <= 2.5


@pytest.mark.slow
def test_reference_separation_sweep_orders_transitions(tmp_path):
    out = tmp_path / "fig6"
    result = runner.invoke(app, ["sweep-sep", "--config", str(FIG6_CONFIG), "--workers", "4", "--out", str(out)])
    assert result.exit_code == 0, result.output
    transitions = read_table(out / "sweep_sep_transitions.csv")

    def transition(algorithm, alpha, v=1.5):
        cell = transitions.loc[
            (transitions["algorithm"] == algorithm) & (transitions["alpha"] == alpha) & (transitions["v"] == v)
        ]
        return float(cell["transition_n_sep"].iloc[0])

    assert len(transitions) == 3 * 3 * 3
    assert np.isfinite(transition("sliding_omp", 4))
    assert transition("sliding_omp", 4) <= transition("sliding_omp", 1)
