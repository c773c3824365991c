import numpy as np
import pytest

from Spectral.errors import ParameterError, PreconditionError
from Spectral.kernels import (
    build_sigma,
    certify_envelopes,
    kernel_closed_form,
    kernel_from_sigma,
    kernel_table,
    precondition,
    tail_envelope,
)
from Spectral.signal_model import SampleVector, SpikeTrain, synthesize


def test_flat_window_for_alpha_one():
    np.testing.assert_allclose(build_sigma(1, 2).sigma, np.full(5, 0.2))


def test_triangular_window_for_alpha_two():
    np.testing.assert_allclose(build_sigma(2, 2).sigma, np.array([1, 2, 3, 2, 1]) / 9.0)


@pytest.mark.parametrize("alpha", [1, 2, 4])
@pytest.mark.parametrize("n", [4, 17, 100])
def test_sigma_is_a_symmetric_probability_vector(alpha, n):
    sigma = build_sigma(alpha, n).sigma
    assert np.all(sigma >= 0.0)
    assert sigma.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(sigma, sigma[::-1])


def test_sigma_rejects_unsupported_alpha():
    with pytest.raises(ParameterError):
        build_sigma(3, 10)


def test_sigma_needs_room_for_the_window():
    with pytest.raises(ParameterError):
        build_sigma(4, 3)


@pytest.mark.parametrize("alpha", [1, 2, 4])
def test_kernel_peak(alpha):
    k = kernel_closed_form(alpha, 50, 0.0)
    assert k.value == pytest.approx(1.0)
    assert k.d1 == pytest.approx(0.0, abs=1e-12)


def test_kernel_at_first_envelope_edge():
    n = 100
    assert kernel_closed_form(4, n, 1.0 / (2 * n + 4)).value <= 0.7


@pytest.mark.parametrize("alpha", [1, 2, 4])
@pytest.mark.parametrize("n", [16, 64, 256])
def test_closed_form_matches_direct_sum(alpha, n):
    t = np.linspace(-0.5, 0.5, 10_001)
    closed = kernel_closed_form(alpha, n, t).value
    direct = kernel_from_sigma(build_sigma(alpha, n), t)
    assert np.max(np.abs(closed - direct)) <= 1e-10


def test_closed_form_at_a_point():
    pc = build_sigma(4, 64)
    assert abs(kernel_closed_form(4, 64, 0.3).value - kernel_from_sigma(pc, 0.3)) <= 1e-10


def test_derivatives_match_finite_differences():
    n, h = 40, 1e-6
    t = np.array([0.013, 0.1, -0.27, 0.41])
    k = kernel_closed_form(4, n, t)
    ahead = kernel_closed_form(4, n, t + h)
    behind = kernel_closed_form(4, n, t - h)
    np.testing.assert_allclose(k.d1, (ahead.value - behind.value) / (2 * h), rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(k.d2, (ahead.d1 - behind.d1) / (2 * h), rtol=1e-5, atol=1e-3)


def test_taylor_branch_is_continuous():
    below = kernel_closed_form(4, 64, 0.9e-8)
    above = kernel_closed_form(4, 64, 1.1e-8)
    assert below.value == pytest.approx(above.value, abs=1e-10)
    assert below.d1 == pytest.approx(above.d1, abs=1e-4)
    assert below.d2 == pytest.approx(above.d2, rel=1e-2)


def test_kernel_rejects_offsets_outside_half_period():
    with pytest.raises(ParameterError):
        kernel_closed_form(2, 10, 0.6)


def test_direct_sum_alternating_at_half():
    assert kernel_from_sigma(build_sigma(1, 2), 0.5).real == pytest.approx(0.2)


def test_direct_sum_matches_closed_form_on_random_points():
    rng = np.random.default_rng(0)
    t = rng.uniform(-0.5, 0.5, 1000)
    pc = build_sigma(2, 30)
    np.testing.assert_allclose(kernel_from_sigma(pc, t), kernel_closed_form(2, 30, t).value, atol=1e-10)


def test_precondition_scales_flat_window_uniformly():
    n = 6
    y = synthesize(SpikeTrain(taus=[0.2], amps=[1.0]), n)
    yp = precondition(y, build_sigma(1, n))
    np.testing.assert_allclose(yp.values, y.values / np.sqrt(2 * n + 1))
    assert yp.preconditioned


@pytest.mark.parametrize("alpha", [1, 2, 4])
def test_weighted_inner_product_of_a_single_spike(alpha):
    n, tau, x = 24, 0.37, 1.5 - 0.5j
    pc = build_sigma(alpha, n)
    y = synthesize(SpikeTrain(taus=[tau], amps=[x]), n)
    atom = pc.sqrt_sigma * np.exp(2j * np.pi * np.arange(-n, n + 1) * tau)
    assert np.vdot(atom, precondition(y, pc).values) == pytest.approx(x)


def test_precondition_twice_is_refused():
    pc = build_sigma(2, 5)
    y = precondition(SampleVector(n=5, values=np.ones(11)), pc)
    with pytest.raises(PreconditionError):
        precondition(y, pc)


def test_higher_order_kernels_decay_faster():
    n = 64
    t = 5.0 / n
    # Ordered on the sup beyond t; pointwise K_4 exceeds K_2 at exactly 5/n
    tails = [tail_envelope(alpha, n, t) for alpha in (1, 2, 4)]
    assert tails[2] < tails[1] < tails[0]


def test_kernel_table_columns_and_peak():
    table = kernel_table([1, 2, 4], 32, 201)
    assert list(table.columns) == ["t", "K_alpha1", "K_alpha2", "K_alpha4"]
    peak = table.loc[table["t"] == 0.0]
    assert len(peak) == 1
    for column in ("K_alpha1", "K_alpha2", "K_alpha4"):
        assert peak[column].iloc[0] == pytest.approx(1.0)


def test_kernel_table_keeps_origin_for_even_resolution():
    table = kernel_table([4], 16, 100)
    assert len(table) == 101
    assert (table["t"] == 0.0).any()


@pytest.mark.parametrize("n", [64, 100, 256])
def test_envelopes_hold_for_fourth_order_kernel(n):
    report = certify_envelopes(n, max(10 * n, 10_000))
    assert [c.check_id for c in report.checks] == ["K_tail", "K_peak", "dK", "dK_slope", "d2K"]
    assert report.all_passed, report.to_frame()


def test_certification_grid_must_be_fine_enough():
    with pytest.raises(ParameterError):
        certify_envelopes(100, 500)


def test_certification_failures_are_reported_not_raised():
    report = certify_envelopes(100, 10_000, alpha=1)
    assert not report.all_passed
    assert len(report.to_frame()) == 5


@pytest.mark.parametrize("n", [66, 101, 102, 130])
def test_short_box_tail_misses_only_by_a_hair(n):
    report = certify_envelopes(n, max(10 * n, 10_000))
    tail = report.checks[0]
    assert tail.check_id == "K_tail"
    assert tail.worst_margin > -1e-3
