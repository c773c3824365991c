# Spectral/instances.py

from dataclasses import dataclass
from typing import Optional

import numpy as np
from agno.utils.log import log_debug

from Spectral.errors import ParameterError
from Spectral.signal_model import (
    ObservationMask,
    SampleVector,
    SpikeTrain,
    apply_mask,
    bernoulli_symmetric_mask,
    exact_count_symmetric_mask,
    make_rng,
    synthesize,
    wrap,
)

# Reference experiment: 2n+1 = 789 samples, 180 observed, 1800 grid points.
REFERENCE_N = 394
REFERENCE_MEASUREMENTS = 180
REFERENCE_N_GRID = 1800
REFERENCE_N_SEP = 1.15

AMPLITUDE_PRESETS = ("fig4", "fig6-v0.5", "fig6-v1", "fig6-v1.5", "unit", "random")

# RNG streams under one seed
STREAM_AMPLITUDES = 0
STREAM_MASK = 1
STREAM_PLACEMENT = 3


def default_n_grid(n: int) -> int:
    """Grid size scaled from the reference 1800 points for 789 samples."""
    return max(int(round(REFERENCE_N_GRID / (2 * REFERENCE_N + 1) * (2 * n + 1))), 2 * n + 1)


def reference_p(n: int, measurements: int = REFERENCE_MEASUREMENTS) -> float:
    return min(measurements / (2 * n + 1), 1.0)


def staircase_taus(n: int, n_sep: float, s: int = 5) -> np.ndarray:
    """tau_i = (1 + i) * n_sep / n for i = 1..s."""
    if n_sep <= 0:
        raise ParameterError(f"n*Delta must be positive, got {n_sep}.")
    if (s + 1) * n_sep / n >= 1.0 - n_sep / n:
        raise ParameterError(f"{s} spikes at n*Delta={n_sep} do not fit on the circle for n={n}.")
    return wrap((1.0 + np.arange(1, s + 1)) * n_sep / n)


def random_separated_taus(s: int, delta: float, rng: np.random.Generator) -> np.ndarray:
    """s frequencies with wrap-around separation of at least delta."""
    slack = 1.0 - s * delta
    if slack <= 0:
        raise ParameterError(f"Cannot place {s} spikes with separation {delta} on the unit circle.")
    start = rng.random()
    extras = np.sort(rng.random(s)) * slack
    return np.sort(wrap(start + delta * np.arange(s) + extras))


def amplitude_magnitudes(
    preset: str,
    s: int,
    rng: np.random.Generator,
    u: Optional[float] = None,
    dyn: Optional[float] = None,
) -> np.ndarray:
    if preset == "fig4":
        if u is None or u < 1:
            raise ParameterError("Amplitude preset 'fig4' needs u >= 1.")
        if s != 5:
            raise ParameterError(f"Amplitude preset 'fig4' is defined for 5 spikes, got {s}.")
        return np.array([1.0, u, max(u / 2.0, 1.0), 1.0, u])
    if preset.startswith("fig6-v"):
        v = float(preset[len("fig6-v"):])
        return 1.0 + 10.0 ** rng.uniform(0.0, v, size=s)
    if preset == "unit":
        return np.ones(s)
    if preset == "random":
        top = 2.0 if dyn is None else float(dyn)
        if top < 1:
            raise ParameterError(f"Dynamic range must be >= 1, got {top}.")
        return rng.uniform(1.0, top, size=s)
    raise ParameterError(f"Unknown amplitude preset '{preset}'. Choose one of {AMPLITUDE_PRESETS}.")


def draw_amplitudes(
    preset: str,
    s: int,
    seed: int,
    u: Optional[float] = None,
    dyn: Optional[float] = None,
    rng_name: str = "philox",
) -> np.ndarray:
    """Preset magnitudes with phases uniform on [0, 2 pi)."""
    rng = make_rng(seed, stream=STREAM_AMPLITUDES, name=rng_name)
    magnitudes = amplitude_magnitudes(preset, s, rng, u=u, dyn=dyn)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=s)
    return magnitudes * np.exp(1j * phases)


@dataclass(frozen=True)
class Instance:
    spikes: SpikeTrain
    samples: SampleVector
    mask: ObservationMask
    seed: int


def draw_mask(
    n: int,
    seed: int,
    p: float = 1.0,
    exact_count: Optional[int] = None,
    rng_name: str = "philox",
) -> ObservationMask:
    if exact_count is not None:
        return exact_count_symmetric_mask(n, exact_count, seed, rng_name=rng_name)
    if p >= 1.0:
        return ObservationMask.full(n)
    return bernoulli_symmetric_mask(n, p, seed, stream=STREAM_MASK, rng_name=rng_name)


def make_instance(
    n: int,
    taus,
    preset: str,
    seed: int,
    p: float = 1.0,
    u: Optional[float] = None,
    dyn: Optional[float] = None,
    exact_count: Optional[int] = None,
    rng_name: str = "philox",
) -> Instance:
    taus = np.asarray(taus, dtype=float)
    amps = draw_amplitudes(preset, taus.size, seed, u=u, dyn=dyn, rng_name=rng_name)
    spikes = SpikeTrain(taus=taus, amps=amps)
    mask = draw_mask(n, seed, p=p, exact_count=exact_count, rng_name=rng_name)
    samples = apply_mask(synthesize(spikes, n), mask)
    log_debug(f"Instance seed={seed}: s={spikes.s}, preset={preset}, {mask.count}/{2 * n + 1} observed")
    return Instance(spikes=spikes, samples=samples, mask=mask, seed=seed)


def staircase_instance(
    n: int,
    n_sep: float,
    preset: str,
    seed: int,
    p: float = 1.0,
    u: Optional[float] = None,
    exact_count: Optional[int] = None,
    s: int = 5,
    rng_name: str = "philox",
) -> Instance:
    """Five-spike staircase used by the dynamic-range and separation sweeps."""
    return make_instance(
        n, staircase_taus(n, n_sep, s), preset, seed,
        p=p, u=u, exact_count=exact_count, rng_name=rng_name,
    )


def random_instance(
    n: int,
    s: int,
    n_sep: float,
    seed: int,
    dyn: float = 2.0,
    p: float = 1.0,
    rng_name: str = "philox",
) -> Instance:
    """Uniformly placed spikes with n*Delta >= n_sep and magnitudes in [1, dyn]."""
    rng = make_rng(seed, stream=STREAM_PLACEMENT, name=rng_name)
    taus = random_separated_taus(s, n_sep / n, rng)
    return make_instance(n, taus, "random", seed, p=p, dyn=dyn, rng_name=rng_name)
