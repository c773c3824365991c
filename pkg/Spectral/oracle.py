# Spectral/oracle.py
# Brute-force references for the solver: dense loss, finite differences,
# landscape scans and instance generators that stress the pursuit.

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from agno.utils.log import log_debug, log_info
from joblib import Parallel, delayed

from Spectral.errors import FiniteDifferenceError, GramError, InfeasibleInstanceError, ParameterError
from Spectral.kernels import Preconditioner, build_sigma
from Spectral.signal_model import (
    ObservationMask,
    SampleVector,
    SpikeTrain,
    bernoulli_symmetric_mask,
    ell_range,
    match_frequencies,
    wrap,
)
from Spectral.solver import grid_correlations, residual, solve_gram


def dense_loss(
    omegas: Sequence[float],
    y: SampleVector,
    pc: Preconditioner,
    mask: Optional[ObservationMask] = None,
    cond_limit: float = 1e10,
) -> float:
    """1/2 ||y - F(omega) c||^2 with c the least-squares amplitudes."""
    gs = solve_gram(omegas, y, pc, cond_limit, mask)
    return 0.5 * residual(y, gs).norm() ** 2


def finite_diff_gradient(
    omegas: Sequence[float],
    y: SampleVector,
    pc: Preconditioner,
    step: float = 1e-7,
    mask: Optional[ObservationMask] = None,
) -> np.ndarray:
    """Central differences of 2 * dense_loss, one coordinate at a time."""
    if not 1e-9 <= step <= 1e-4:
        raise ParameterError(f"Finite-difference step must lie in [1e-9, 1e-4], got {step}.")
    omegas = np.asarray(omegas, dtype=float)
    grad = np.zeros(omegas.size)
    for i in range(omegas.size):
        bump = np.zeros(omegas.size)
        bump[i] = step
        try:
            ahead = dense_loss(wrap(omegas + bump), y, pc, mask)
            behind = dense_loss(wrap(omegas - bump), y, pc, mask)
        except GramError as e:
            raise FiniteDifferenceError(f"Gram failure while perturbing coordinate {i}: {e}", coordinate=i) from e
        grad[i] = (ahead - behind) / step
    return grad


# --- Landscape scans ---

@dataclass(frozen=True)
class LandscapeScan:
    """Loss or correlation values over a 1-D or 2-D frequency slice.

    Points where the Gram system is degenerate (a scanned frequency collides
    with a fixed one) are NaN and flagged False in `valid`.
    """

    axes: List[np.ndarray]
    values: np.ndarray
    valid: np.ndarray
    kind: str = "loss"

    def minimizer(self) -> Tuple[float, ...]:
        index = np.unravel_index(np.nanargmin(self.values), self.values.shape)
        return tuple(float(axis[i]) for axis, i in zip(self.axes, index))

    def maximizer(self) -> Tuple[float, ...]:
        index = np.unravel_index(np.nanargmax(self.values), self.values.shape)
        return tuple(float(axis[i]) for axis, i in zip(self.axes, index))

    def to_frame(self) -> pd.DataFrame:
        if len(self.axes) == 1:
            return pd.DataFrame({"omega": self.axes[0], self.kind: self.values, "valid": self.valid})
        grid_a, grid_b = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
        return pd.DataFrame(
            {
                "omega_a": grid_a.ravel(),
                "omega_b": grid_b.ravel(),
                self.kind: self.values.ravel(),
                "valid": self.valid.ravel(),
            }
        )


def _safe_loss(omegas, y, pc, mask) -> float:
    try:
        return dense_loss(omegas, y, pc, mask)
    except GramError:
        return float("nan")


def landscape_scan(
    y: SampleVector,
    pc: Preconditioner,
    fixed: Sequence[float],
    resolution: int,
    dims: int = 1,
    mask: Optional[ObservationMask] = None,
    window: Tuple[float, float] = (0.0, 1.0),
) -> LandscapeScan:
    """Loss with `fixed` frequencies held and `dims` free ones scanned over `window`."""
    if dims not in (1, 2):
        raise ParameterError("Landscape scans support 1 or 2 free coordinates.")
    if resolution < 2:
        raise ParameterError("Landscape resolution must be at least 2.")
    lo, hi = window
    axis = lo + (hi - lo) * np.arange(resolution) / resolution
    fixed = list(fixed)

    if dims == 1:
        values = np.array([_safe_loss(fixed + [w], y, pc, mask) for w in axis])
        axes = [axis]
    else:
        values = np.array(
            [[_safe_loss(fixed + [a, b], y, pc, mask) for b in axis] for a in axis]
        )
        axes = [axis, axis]
    log_debug(f"Landscape scan: {values.size} points, {int(np.isnan(values).sum())} degenerate")
    return LandscapeScan(axes=axes, values=values, valid=~np.isnan(values), kind="loss")


def correlation_scan(
    y: SampleVector,
    pc: Preconditioner,
    n_grid: int,
    found: Sequence[float] = (),
    mask: Optional[ObservationMask] = None,
) -> LandscapeScan:
    """|<f(tau), r>| on the grid after projecting out `found` frequencies."""
    gs = solve_gram(list(found), y, pc, mask=mask, n_grid=n_grid)
    values = grid_correlations(residual(y, gs), pc, n_grid, mask)
    axis = np.arange(n_grid) / n_grid
    return LandscapeScan(axes=[axis], values=values, valid=np.ones(n_grid, dtype=bool), kind="correlation")


def contraction_profile(path: Sequence[np.ndarray], truth: SpikeTrain) -> np.ndarray:
    """Amplitude-weighted sup error of every iterate on a sliding path."""
    return np.array([match_frequencies(omegas, truth).eps_x for omegas in path])


# --- Adversarial instance for plain OMP ---

@dataclass(frozen=True)
class AdversarialInstance:
    spikes: SpikeTrain
    ell1: int
    c0: float
    L: float
    failure_bound: float


def adversarial_instance(
    c: float,
    L: float,
    n: int,
    c0: Optional[float] = None,
    offset: float = 0.37,
) -> AdversarialInstance:
    """Three spikes that lure plain OMP away from the weakest one.

    tau_2 sits ell1/n to the right of tau_1 and tau_3 sits L*ell1/n to the left,
    with x_1 = 2 x_2 and x_3 small enough that x_1 / x_3 > c.
    """
    if c <= 0:
        raise InfeasibleInstanceError(f"Amplitude ratio bound c must be positive, got {c}.")
    if L < 1:
        raise InfeasibleInstanceError(f"L must be at least 1 so that tau_1, tau_2 set the separation, got {L}.")
    c0 = c + 1.0 if c0 is None else float(c0)
    if c0 <= c:
        raise InfeasibleInstanceError(f"c0 must exceed c ({c0} <= {c}).")

    ell1 = int(math.ceil(c0))
    if ell1 > n or (1.0 + L) * ell1 / n >= 0.5:
        raise InfeasibleInstanceError(
            f"n={n} is too small for ell1={ell1} and L={L}: the spikes would wrap around the circle."
        )

    delta1 = ell1 / n
    delta2 = L * delta1
    tau1 = 0.5 + offset / n
    taus = wrap([tau1, tau1 + delta1, tau1 - delta2])
    amps = np.array([2.0, 1.0, 1.0 / (2.0 * max(c, 1.0))])
    return AdversarialInstance(
        spikes=SpikeTrain(taus=taus, amps=amps),
        ell1=ell1,
        c0=c0,
        L=float(L),
        failure_bound=L / n,
    )


# --- Concentration of the subsampled kernel ---

@dataclass(frozen=True)
class ConcentrationReport:
    n: int
    p: float
    trials: int
    alpha: int
    rows: List[Dict[str, float]] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["trial", "q", "deviation", "ratio"])

    def median_deviation(self, q: int = 0) -> float:
        frame = self.to_frame()
        return float(frame.loc[frame["q"] == q, "deviation"].median())

    def max_ratio(self, q: int = 0) -> float:
        frame = self.to_frame()
        return float(frame.loc[frame["q"] == q, "ratio"].max())


def _probe_trial(n: int, p: float, seed: int, trial: int, orders: Sequence[int], sigma: np.ndarray):
    mask = bernoulli_symmetric_mask(n, p, seed, stream=2 + trial)
    ell = ell_range(n)
    grid = 10 * n
    scale = math.sqrt(p / n * math.log(n))
    rows = []
    for q in orders:
        buffer = np.zeros(grid, dtype=complex)
        buffer[np.mod(ell, grid)] = (mask.observed - p) * sigma * (2j * np.pi * ell) ** q
        deviation = float(np.max(np.abs(np.fft.ifft(buffer) * grid))) / n ** q
        rows.append({"trial": trial, "q": q, "deviation": deviation, "ratio": deviation / scale})
    return rows


def concentration_probe(
    n: int,
    p: float,
    trials: int,
    seed: int,
    orders: Sequence[int] = (0, 1, 2),
    alpha: int = 4,
    workers: int = 1,
) -> ConcentrationReport:
    """Sup deviation of the masked kernel (and its derivatives) from p times the full one.

    Each trial draws an independent symmetric Bernoulli(p) mask and reports the
    deviation and its ratio to sqrt(p/n log n).
    """
    if n * p < 4:
        raise ParameterError(f"Concentration probe needs n*p >= 4, got {n * p:.3f}.")
    if trials < 1:
        raise ParameterError("Concentration probe needs at least one trial.")
    sigma = build_sigma(alpha, n).sigma
    per_trial = Parallel(n_jobs=workers)(
        delayed(_probe_trial)(n, p, seed, trial, tuple(orders), sigma) for trial in range(trials)
    )
    rows = [row for trial_rows in per_trial for row in trial_rows]
    report = ConcentrationReport(n=n, p=p, trials=trials, alpha=alpha, rows=rows)
    log_info(f"Concentration probe n={n} p={p}: median q=0 deviation {report.median_deviation(orders[0]):.3e}")
    return report
