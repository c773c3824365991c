import numpy as np
import pytest

from Spectral.errors import DimensionError, MaskError, MatchingError, ParameterError, SeparationError
from Spectral.signal_model import (
    ObservationMask,
    SampleVector,
    SpikeTrain,
    apply_mask,
    bernoulli_symmetric_mask,
    dynamic_range,
    exact_count_symmetric_mask,
    make_rng,
    match_frequencies,
    min_separation,
    synthesize,
    wrap,
)


def test_synthesize_quarter_frequency():
    y = synthesize(SpikeTrain(taus=[0.25], amps=[1.0]), 2)
    np.testing.assert_allclose(y.values, [-1, -1j, 1, 1j, -1], atol=1e-12)


def test_synthesize_zero_frequency_is_constant():
    y = synthesize(SpikeTrain(taus=[0.0], amps=[3.0]), 3)
    np.testing.assert_allclose(y.values, np.full(7, 3.0), atol=1e-12)


def test_synthesize_cancels_at_origin():
    y = synthesize(SpikeTrain(taus=[0.1, 0.3], amps=[1.0, -1.0]), 8)
    assert abs(y.values[8]) < 1e-12


def test_conjugate_symmetric_spikes_give_conjugate_samples():
    spikes = SpikeTrain(taus=[0.2, 0.8], amps=[1.5, 1.5])
    y = synthesize(spikes, 10)
    np.testing.assert_allclose(y.values[::-1], np.conj(y.values), atol=1e-12)


@pytest.mark.parametrize(
    "taus, amps",
    [
        ([1.0], [1.0]),
        ([-0.1], [1.0]),
        ([0.2, 0.2], [1.0, 1.0]),
        ([0.2], [0.0]),
    ],
)
def test_spike_train_rejects_invalid_input(taus, amps):
    with pytest.raises(ParameterError):
        SpikeTrain(taus=taus, amps=amps)


def test_spike_train_length_mismatch():
    with pytest.raises(DimensionError):
        SpikeTrain(taus=[0.1, 0.2], amps=[1.0])


def test_sample_vector_length_is_checked():
    with pytest.raises(DimensionError):
        SampleVector(n=3, values=np.zeros(6))


@pytest.mark.parametrize(
    "taus, expected",
    [([0.1, 0.9], 0.2), ([0.0, 0.5], 0.5), ([0.1, 0.2, 0.7], 0.1)],
)
def test_min_separation(taus, expected):
    spikes = SpikeTrain(taus=taus, amps=np.ones(len(taus)))
    assert min_separation(spikes) == pytest.approx(expected)


def test_min_separation_needs_two_spikes():
    with pytest.raises(SeparationError):
        min_separation(SpikeTrain(taus=[0.3], amps=[1.0]))


@pytest.mark.parametrize(
    "amps, expected",
    [([1, 1, 1], 1.0), ([1, 8, 4, 1, 8], 8.0), ([3, -2, 1.5, -1], 3.0)],
)
def test_dynamic_range(amps, expected):
    spikes = SpikeTrain(taus=np.linspace(0.05, 0.85, len(amps)), amps=amps)
    assert dynamic_range(spikes) == pytest.approx(expected)


def test_full_probability_mask_observes_everything():
    mask = bernoulli_symmetric_mask(20, 1.0, seed=7)
    assert mask.count == 41


def test_bernoulli_mask_count_near_reference():
    n, p = 394, 0.25
    mask = bernoulli_symmetric_mask(n, p, seed=3)
    # n+1 independent draws, pairs counted twice
    mean = p * (2 * n + 1)
    sd = 2 * np.sqrt((n + 1) * p * (1 - p))
    assert abs(mask.count - mean) <= 3 * sd
    np.testing.assert_array_equal(mask.observed, mask.observed[::-1])


@pytest.mark.parametrize("seed", range(5))
def test_masks_are_symmetric(seed):
    for mask in (bernoulli_symmetric_mask(31, 0.4, seed), exact_count_symmetric_mask(31, 20, seed)):
        np.testing.assert_array_equal(mask.observed, mask.observed[::-1])


def test_masks_are_reproducible():
    a = bernoulli_symmetric_mask(50, 0.3, seed=11)
    b = bernoulli_symmetric_mask(50, 0.3, seed=11)
    np.testing.assert_array_equal(a.observed, b.observed)


@pytest.mark.parametrize("count", [1, 180, 181])
def test_exact_count_mask(count):
    mask = exact_count_symmetric_mask(394, count, seed=0)
    assert mask.count == count


def test_asymmetric_mask_is_rejected():
    observed = np.ones(5, dtype=bool)
    observed[0] = False
    with pytest.raises(MaskError, match="symmetry"):
        ObservationMask(n=2, observed=observed)


def test_rng_streams_differ():
    a = make_rng(5, stream=0).random(4)
    b = make_rng(5, stream=1).random(4)
    assert not np.allclose(a, b)


def test_unknown_bit_generator():
    with pytest.raises(ParameterError):
        make_rng(0, name="mt19937")


def test_apply_full_mask_is_identity():
    y = synthesize(SpikeTrain(taus=[0.3], amps=[2.0]), 4)
    np.testing.assert_array_equal(apply_mask(y, ObservationMask.full(4)).values, y.values)


def test_apply_empty_mask_zeroes_everything():
    y = synthesize(SpikeTrain(taus=[0.3], amps=[2.0]), 4)
    masked = apply_mask(y, ObservationMask(n=4, observed=np.zeros(9, dtype=bool)))
    np.testing.assert_array_equal(masked.values, np.zeros(9))


def test_apply_origin_only_mask():
    y = synthesize(SpikeTrain(taus=[0.3], amps=[2.0]), 4)
    observed = np.zeros(9, dtype=bool)
    observed[4] = True
    masked = apply_mask(y, ObservationMask(n=4, observed=observed))
    assert masked.values[4] == y.values[4]
    assert np.count_nonzero(masked.values) == 1


def test_apply_mask_dimension_mismatch():
    y = synthesize(SpikeTrain(taus=[0.3], amps=[2.0]), 4)
    with pytest.raises(DimensionError):
        apply_mask(y, ObservationMask.full(5))


def test_match_identical_estimates():
    spikes = SpikeTrain(taus=[0.1, 0.4, 0.7], amps=[1, 1, 1])
    matching = match_frequencies([0.7, 0.1, 0.4], spikes)
    np.testing.assert_array_equal(matching.perm, [2, 0, 1])
    assert matching.eps == 0.0


def test_match_wraps_around():
    matching = match_frequencies([0.999], SpikeTrain(taus=[0.001], amps=[1.0]))
    assert matching.eps == pytest.approx(0.002)


def test_match_weighted_error():
    spikes = SpikeTrain(taus=[0.1, 0.3], amps=[2.0, 1.0])
    matching = match_frequencies([0.10002, 0.3], spikes)
    assert matching.eps == pytest.approx(2e-5, rel=1e-6)
    assert matching.eps_x == pytest.approx(4e-5, rel=1e-6)


def test_match_greedy_resolves_conflicts():
    spikes = SpikeTrain(taus=[0.2, 0.3], amps=[1.0, 1.0])
    # Both estimates are nearest to 0.2; the closer one keeps it
    matching = match_frequencies([0.21, 0.201], spikes)
    np.testing.assert_array_equal(matching.perm, [1, 0])


def test_match_rejects_too_many_estimates():
    with pytest.raises(MatchingError):
        match_frequencies([0.1, 0.2], SpikeTrain(taus=[0.1], amps=[1.0]))


def test_wrap_lands_in_unit_interval():
    w = wrap([-1e-18, 1.0, 2.25, -0.25])
    assert np.all((w >= 0.0) & (w < 1.0))
    np.testing.assert_allclose(w, [0.0, 0.0, 0.25, 0.75])
