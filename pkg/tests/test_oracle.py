import numpy as np
import pytest

from Spectral.errors import InfeasibleInstanceError, ParameterError
from Spectral.kernels import build_sigma
from Spectral.oracle import (
    adversarial_instance,
    concentration_probe,
    contraction_profile,
    correlation_scan,
    dense_loss,
    finite_diff_gradient,
    landscape_scan,
)
from Spectral.signal_model import SpikeTrain, circular_distance, synthesize
from Spectral.solver import SolverConfig, omp, sliding, sliding_omp


def test_dense_loss_vanishes_at_the_truth():
    n = 32
    spikes = SpikeTrain(taus=[0.1, 0.4, 0.75], amps=[1.0, -2.0, 0.5j])
    y = synthesize(spikes, n)
    pc = build_sigma(4, n)
    assert dense_loss(spikes.taus, y, pc) <= 1e-18 * np.linalg.norm(pc.sqrt_sigma * y.values) ** 2


def test_dense_loss_with_empty_support():
    n = 16
    pc = build_sigma(2, n)
    y = synthesize(SpikeTrain(taus=[0.3], amps=[2.0]), n)
    assert dense_loss([], y, pc) == pytest.approx(0.5 * np.linalg.norm(pc.sqrt_sigma * y.values) ** 2)


def test_true_frequencies_are_biased_under_a_partial_fit():
    # Fixing one frequency and scanning a second leaves the other spikes leaking in
    n = 10
    spikes = SpikeTrain(taus=[0.6, 0.9, 0.1, 0.3], amps=[3.0, -2.0, 1.5, -1.0])
    scan = landscape_scan(synthesize(spikes, n), build_sigma(1, n), fixed=[0.6], resolution=2000, window=(0.8, 1.0))
    (minimizer,) = scan.minimizer()
    assert 0.8 < minimizer < 1.0
    assert abs(minimizer - 0.9) > 1e-4


def test_finite_differences_vanish_at_the_truth():
    n = 24
    spikes = SpikeTrain(taus=[0.2, 0.55], amps=[1.0, 1.0j])
    grad = finite_diff_gradient(spikes.taus, synthesize(spikes, n), build_sigma(4, n))
    np.testing.assert_allclose(grad, np.zeros(2), atol=1e-6)


def test_single_spike_gradient_is_odd():
    n, tau, delta = 30, 0.42, 0.2 / 30
    y = synthesize(SpikeTrain(taus=[tau], amps=[1.0 + 1.0j]), n)
    pc = build_sigma(4, n)
    ahead = finite_diff_gradient([tau + delta], y, pc)[0]
    behind = finite_diff_gradient([tau - delta], y, pc)[0]
    assert ahead == pytest.approx(-behind, rel=1e-5)


def test_finite_difference_step_range():
    n = 8
    y = synthesize(SpikeTrain(taus=[0.3], amps=[1.0]), n)
    with pytest.raises(ParameterError):
        finite_diff_gradient([0.3], y, build_sigma(1, n), step=1e-2)


def test_landscape_marks_collisions_as_invalid():
    n = 16
    y = synthesize(SpikeTrain(taus=[0.25, 0.6], amps=[1.0, 1.0]), n)
    scan = landscape_scan(y, build_sigma(4, n), fixed=[0.25], resolution=8)
    assert not scan.valid[2]
    assert np.isnan(scan.values[2])
    assert scan.valid.sum() == 7
    (minimizer,) = scan.minimizer()
    assert minimizer == pytest.approx(0.625)


def test_two_dimensional_landscape_frame():
    n = 16
    y = synthesize(SpikeTrain(taus=[0.25, 0.6], amps=[1.0, 1.0]), n)
    scan = landscape_scan(y, build_sigma(4, n), fixed=[], resolution=10, dims=2)
    frame = scan.to_frame()
    assert list(frame.columns) == ["omega_a", "omega_b", "loss", "valid"]
    assert len(frame) == 100
    # The diagonal is degenerate
    assert not frame.loc[frame["omega_a"] == frame["omega_b"], "valid"].any()


def test_correlation_scan_peaks_at_the_remaining_spike():
    n, n_grid = 32, 160
    y = synthesize(SpikeTrain(taus=[40 / n_grid, 100 / n_grid], amps=[2.0, 1.0]), n)
    scan = correlation_scan(y, build_sigma(4, n), n_grid, found=[40 / n_grid])
    (peak,) = scan.maximizer()
    assert peak == pytest.approx(100 / n_grid)


def test_contraction_profile_follows_the_path():
    n = 32
    truth = SpikeTrain(taus=[0.3], amps=[2.0])
    result = sliding([0.3 + 0.2 / n], synthesize(truth, n), build_sigma(4, n), T=5, record=True)
    profile = contraction_profile(result.path, truth)
    assert profile[0] == pytest.approx(2.0 * 0.2 / n)
    assert profile[-1] < profile[0]


# --- adversarial instance ---

def test_adversarial_instance_construction():
    c, L, n = 10.0, 4.0, 394
    instance = adversarial_instance(c, L, n)
    amps = np.abs(instance.spikes.amps)
    assert amps[0] / amps[2] > c
    assert amps[0] == pytest.approx(2 * amps[1])
    gaps = circular_distance(instance.spikes.taus[0], instance.spikes.taus[1:])
    np.testing.assert_allclose(gaps * n, [instance.ell1, L * instance.ell1])
    assert instance.failure_bound == pytest.approx(L / n)


@pytest.mark.parametrize(
    "c, L, n, c0",
    [(10.0, 0.5, 394, None), (10.0, 4.0, 394, 9.0), (10.0, 4.0, 40, None)],
)
def test_adversarial_instance_infeasible(c, L, n, c0):
    with pytest.raises(InfeasibleInstanceError):
        adversarial_instance(c, L, n, c0=c0)


def test_plain_omp_leaves_the_weak_spike_cell():
    n = 394
    instance = adversarial_instance(10.0, 4.0, n)
    y = synthesize(instance.spikes, n)
    result = omp(y, SolverConfig(pc=build_sigma(1, n), gamma=0.0, n_grid=1800, max_spikes=3))
    nearest = np.min(circular_distance(instance.spikes.taus[2], result.omegas))
    assert nearest > 1.0 / (2 * n + 4)


@pytest.mark.slow
def test_sliding_omp_recovers_a_widened_adversarial_instance():
    n = 394
    # Wider separation puts the instance in the regime where sliding succeeds
    instance = adversarial_instance(10.0, 4.0, n, c0=30.0)
    y = synthesize(instance.spikes, n)
    result = sliding_omp(y, SolverConfig(pc=build_sigma(4, n), gamma=0.0, n_grid=1800, max_spikes=3))
    errors = [np.min(circular_distance(tau, result.omegas)) for tau in instance.spikes.taus]
    assert max(errors) < 1e-4


# --- concentration ---

def test_full_observation_has_no_deviation():
    report = concentration_probe(64, 1.0, trials=3, seed=0)
    assert report.to_frame()["deviation"].abs().max() <= 1e-12


def test_probe_is_reproducible():
    a = concentration_probe(64, 0.3, trials=4, seed=5).to_frame()
    b = concentration_probe(64, 0.3, trials=4, seed=5, workers=2).to_frame()
    np.testing.assert_allclose(a["deviation"], b["deviation"])
    assert sorted(a["q"].unique()) == [0, 1, 2]


def test_probe_needs_enough_expected_samples():
    with pytest.raises(ParameterError):
        concentration_probe(10, 0.2, trials=2, seed=0)


@pytest.mark.slow
def test_deviation_ratio_stays_bounded():
    report = concentration_probe(256, 0.3, trials=50, seed=0)
    assert report.max_ratio(0) < 10.0


@pytest.mark.slow
def test_deviation_scales_with_sqrt_p():
    high = concentration_probe(256, 0.6, trials=50, seed=0).median_deviation(0)
    low = concentration_probe(256, 0.15, trials=50, seed=0).median_deviation(0)
    expected = np.sqrt(0.15 / 0.6)
    assert 0.5 * expected <= low / high <= 2.0 * expected
