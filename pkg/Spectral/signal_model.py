# Spectral/signal_model.py

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from agno.utils.log import log_debug

from Spectral.errors import DimensionError, MaskError, MatchingError, ParameterError, SeparationError

BIT_GENERATORS = {
    "philox": np.random.Philox,
    "pcg64": np.random.PCG64,
}


def make_rng(seed: int, stream: int = 0, name: str = "philox") -> np.random.Generator:
    """Seeded generator for one named stream; (seed, stream) pairs never share state."""
    if name not in BIT_GENERATORS:
        raise ParameterError(f"Unknown bit generator '{name}'. Choose one of {sorted(BIT_GENERATORS)}.")
    sequence = np.random.SeedSequence([int(seed), int(stream)])
    return np.random.Generator(BIT_GENERATORS[name](sequence))


def wrap(freqs) -> np.ndarray:
    """Map frequencies onto [0, 1)."""
    wrapped = np.mod(np.asarray(freqs, dtype=float), 1.0)
    # np.mod can return exactly 1.0 for tiny negative inputs
    wrapped[wrapped >= 1.0] = 0.0
    return wrapped


def circular_distance(a, b) -> np.ndarray:
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def ell_range(n: int) -> np.ndarray:
    return np.arange(-n, n + 1)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class SpikeTrain:
    taus: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        taus = np.atleast_1d(np.asarray(self.taus, dtype=float))
        amps = np.atleast_1d(np.asarray(self.amps, dtype=complex))
        if taus.ndim != 1 or taus.size == 0:
            raise ParameterError("A spike train needs at least one frequency.")
        if taus.shape != amps.shape:
            raise DimensionError(f"Got {taus.size} frequencies but {amps.size} amplitudes.")
        if np.any(taus < 0.0) or np.any(taus >= 1.0):
            raise ParameterError("Every frequency must lie in [0, 1).")
        if taus.size > 1:
            gaps = circular_distance(taus[:, None], taus[None, :])
            np.fill_diagonal(gaps, np.inf)
            if np.min(gaps) == 0.0:
                raise ParameterError("Frequencies must be pairwise distinct.")
        if np.any(np.abs(amps) == 0.0):
            raise ParameterError("Every amplitude must be nonzero.")
        object.__setattr__(self, "taus", _frozen(taus))
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def s(self) -> int:
        return int(self.taus.size)


@dataclass(frozen=True)
class SampleVector:
    """Samples y_l for l = -n..n; `values[l + n]` holds y_l."""

    n: int
    values: np.ndarray
    preconditioned: bool = False

    def __post_init__(self):
        if int(self.n) < 1:
            raise ParameterError("Half-bandwidth n must be a positive integer.")
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (2 * int(self.n) + 1,):
            raise DimensionError(f"Expected {2 * int(self.n) + 1} samples for n={self.n}, got shape {values.shape}.")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "values", _frozen(values))

    @property
    def ell(self) -> np.ndarray:
        return ell_range(self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class ObservationMask:
    n: int
    observed: np.ndarray
    p: float = 1.0

    def __post_init__(self):
        observed = np.asarray(self.observed, dtype=bool)
        if observed.shape != (2 * int(self.n) + 1,):
            raise DimensionError(f"Mask for n={self.n} needs {2 * int(self.n) + 1} entries, got {observed.shape}.")
        if not 0.0 < float(self.p) <= 1.0:
            raise ParameterError(f"Bernoulli rate p must lie in (0, 1], got {self.p}.")
        if not np.array_equal(observed, observed[::-1]):
            bad = int(np.flatnonzero(observed != observed[::-1])[0]) - int(self.n)
            raise MaskError(
                f"Mask violates the symmetry rule observed[l] == observed[-l] (first mismatch at l={bad})."
            )
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "observed", _frozen(observed))

    @classmethod
    def full(cls, n: int) -> "ObservationMask":
        return cls(n=n, observed=np.ones(2 * n + 1, dtype=bool), p=1.0)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.observed))


@dataclass(frozen=True)
class Matching:
    perm: np.ndarray
    errors: np.ndarray
    weighted_errors: np.ndarray
    eps: float = field(init=False)
    eps_x: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "perm", _frozen(np.asarray(self.perm, dtype=int)))
        object.__setattr__(self, "errors", _frozen(np.asarray(self.errors, dtype=float)))
        object.__setattr__(self, "weighted_errors", _frozen(np.asarray(self.weighted_errors, dtype=float)))
        object.__setattr__(self, "eps", float(np.max(self.errors)) if self.errors.size else 0.0)
        object.__setattr__(self, "eps_x", float(np.max(self.weighted_errors)) if self.weighted_errors.size else 0.0)


def synthesize(spikes: SpikeTrain, n: int) -> SampleVector:
    if n < 1:
        raise ParameterError("Half-bandwidth n must be at least 1.")
    ell = ell_range(n)
    atoms = np.exp(2j * np.pi * np.outer(ell, spikes.taus))
    return SampleVector(n=n, values=atoms @ spikes.amps)


def min_separation(spikes: SpikeTrain) -> float:
    if spikes.s < 2:
        raise SeparationError("Separation is undefined for a single spike.")
    gaps = circular_distance(spikes.taus[:, None], spikes.taus[None, :])
    np.fill_diagonal(gaps, np.inf)
    return float(np.min(gaps))


def dynamic_range(spikes: SpikeTrain) -> float:
    magnitudes = np.abs(spikes.amps)
    return float(np.max(magnitudes) / np.min(magnitudes))


def bernoulli_symmetric_mask(
    n: int, p: float, seed: int, stream: int = 1, rng_name: str = "philox"
) -> ObservationMask:
    """One Bernoulli(p) draw per l = 0..n, mirrored onto -l."""
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"Bernoulli rate p must lie in (0, 1], got {p}.")
    rng = make_rng(seed, stream=stream, name=rng_name)
    half = rng.random(n + 1) < p
    observed = np.concatenate([half[:0:-1], half])
    log_debug(f"Symmetric Bernoulli mask n={n} p={p:.4f}: {int(observed.sum())} of {2 * n + 1} observed")
    return ObservationMask(n=n, observed=observed, p=p)


def exact_count_symmetric_mask(n: int, count: int, seed: int, rng_name: str = "philox") -> ObservationMask:
    """Uniform symmetric subset with exactly `count` observed indices.

    An odd count includes l = 0; the remaining indices come in (l, -l) pairs.
    """
    if not 1 <= count <= 2 * n + 1:
        raise ParameterError(f"Observed count must lie in [1, {2 * n + 1}], got {count}.")
    rng = make_rng(seed, stream=1, name=rng_name)
    pairs = rng.choice(np.arange(1, n + 1), size=count // 2, replace=False)
    observed = np.zeros(2 * n + 1, dtype=bool)
    observed[n + pairs] = True
    observed[n - pairs] = True
    if count % 2 == 1:
        observed[n] = True
    return ObservationMask(n=n, observed=observed, p=count / (2 * n + 1))


def apply_mask(y: SampleVector, mask: ObservationMask) -> SampleVector:
    if y.n != mask.n:
        raise DimensionError(f"Samples have n={y.n} but the mask has n={mask.n}.")
    return SampleVector(n=y.n, values=np.where(mask.observed, y.values, 0.0), preconditioned=y.preconditioned)


def match_frequencies(estimates: Sequence[float], truth: SpikeTrain) -> Matching:
    """Greedy matching by ascending wrap-around error.

    Each estimate claims its nearest truth; when a truth is already taken by a
    closer estimate the loser falls back to its next-nearest unclaimed truth.
    """
    est = np.atleast_1d(np.asarray(estimates, dtype=float))
    if est.size == 0:
        raise MatchingError("Nothing to match: the estimate list is empty.")
    if est.size > truth.s:
        raise MatchingError(f"Cannot match {est.size} estimates injectively onto {truth.s} true frequencies.")

    dist = circular_distance(est[:, None], truth.taus[None, :])
    order = sorted(
        ((dist[i, k], i, k) for i in range(est.size) for k in range(truth.s)),
    )
    perm = -np.ones(est.size, dtype=int)
    claimed = np.zeros(truth.s, dtype=bool)
    for _, i, k in order:
        if perm[i] < 0 and not claimed[k]:
            perm[i] = k
            claimed[k] = True

    errors = dist[np.arange(est.size), perm]
    weighted = np.abs(truth.amps[perm]) * errors
    return Matching(perm=perm, errors=errors, weighted_errors=weighted)


def as_list(values: np.ndarray) -> List[float]:
    return [float(v) for v in np.asarray(values).ravel()]


def mask_or_full(mask: Optional[ObservationMask], n: int) -> ObservationMask:
    if mask is None:
        return ObservationMask.full(n)
    if mask.n != n:
        raise DimensionError(f"Mask has n={mask.n} but the samples have n={n}.")
    return mask
