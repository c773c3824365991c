# Spectral/solver.py

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from agno.utils.log import log_debug, log_info, log_warning

from Spectral.errors import (
    DegenerateDictionaryError,
    DimensionError,
    GramError,
    IllConditionedError,
    ParameterError,
    SolverError,
    SuperResolutionError,
)
from Spectral.kernels import Preconditioner
from Spectral.signal_model import ObservationMask, SampleVector, circular_distance, ell_range, mask_or_full, wrap

STOP_THRESHOLD = "threshold"
STOP_CAP = "cap"
STOP_STALL = "stall"

SLIDE_OK = "ok"
SLIDE_REVERTED_STALL = "reverted-stall"
SLIDE_REVERTED_LOSS = "reverted-loss"
SLIDE_SKIPPED = "skipped"

# Base sliding step; the effective step is eta0 / n^2
DEFAULT_ETA0 = 0.2

ALGORITHMS = ("omp", "sliding_omp", "two_stage_omp")


@dataclass(frozen=True)
class SolverConfig:
    pc: Preconditioner
    gamma: float
    n_grid: int
    eta0: Optional[float] = DEFAULT_ETA0
    t_slide: int = 200
    max_spikes: Optional[int] = None
    cond_limit: float = 1e10
    stop_tol: float = 1e-14
    mask: Optional[ObservationMask] = None

    def __post_init__(self):
        n = self.pc.n
        if self.gamma < 0:
            raise ParameterError(f"Stopping threshold gamma must be >= 0, got {self.gamma}.")
        if self.n_grid < 2 * n + 1:
            raise ParameterError(f"n_grid must be at least 2n+1 = {2 * n + 1}, got {self.n_grid}.")
        if self.eta0 is not None and self.eta0 <= 0:
            raise ParameterError(f"Sliding stepsize eta0 must be positive, got {self.eta0}.")
        if self.t_slide < 0:
            raise ParameterError(f"t_slide must be >= 0, got {self.t_slide}.")
        if self.max_spikes is not None and not 1 <= self.max_spikes <= self.n_grid:
            raise ParameterError(f"max_spikes must lie in [1, n_grid={self.n_grid}], got {self.max_spikes}.")
        if self.cond_limit <= 1.0:
            raise ParameterError("cond_limit must exceed 1.")
        if self.mask is not None and self.mask.n != n:
            raise DimensionError(f"Mask has n={self.mask.n} but the preconditioner has n={n}.")

    @property
    def spike_cap(self) -> int:
        if self.max_spikes is not None:
            return self.max_spikes
        return min(2 * self.pc.n + 1, self.n_grid)


def gamma_from_floor(amplitude_floor: float, factor: float = 0.5) -> float:
    """Stopping threshold from a known lower bound on |x_i|."""
    if amplitude_floor <= 0:
        raise ParameterError(f"Amplitude floor must be positive, got {amplitude_floor}.")
    return factor * amplitude_floor


def dictionary_weights(pc: Preconditioner, mask: Optional[ObservationMask] = None) -> np.ndarray:
    """sqrt(sigma) restricted to the observed indices."""
    mask = mask_or_full(mask, pc.n)
    return pc.sqrt_sigma * mask.observed


def prepare_samples(y: SampleVector, weights: np.ndarray) -> np.ndarray:
    """Weighted samples as seen by the dictionary; raw samples get weighted once."""
    if y.values.shape != weights.shape:
        raise DimensionError(f"Samples have n={y.n} but the dictionary has {weights.size} rows.")
    if y.preconditioned:
        return y.values * (weights > 0)
    return weights * y.values


def weighted_atoms(omegas: Sequence[float], weights: np.ndarray) -> np.ndarray:
    n = (weights.size - 1) // 2
    omegas = np.asarray(omegas, dtype=float)
    return weights[:, None] * np.exp(2j * np.pi * np.outer(ell_range(n), omegas))


def atom_derivatives(omegas: Sequence[float], weights: np.ndarray) -> np.ndarray:
    """z(tau)_l = w_l (2 pi j l) exp(2 pi j l tau), one column per frequency."""
    n = (weights.size - 1) // 2
    ell = ell_range(n)
    return (2j * np.pi * ell)[:, None] * weighted_atoms(omegas, weights)


# --- Grid search ---

def grid_correlations(
    residual: SampleVector,
    pc: Preconditioner,
    n_grid: int,
    mask: Optional[ObservationMask] = None,
) -> np.ndarray:
    """|<f(k/n_grid), r>| for every grid index k via one length-n_grid FFT."""
    n = residual.n
    if n_grid < 2 * n + 1:
        raise ParameterError(f"n_grid must be at least 2n+1 = {2 * n + 1}, got {n_grid}.")
    if pc.n != n:
        raise DimensionError(f"Residual has n={n} but the preconditioner has n={pc.n}.")
    weights = dictionary_weights(pc, mask)
    buffer = np.zeros(n_grid, dtype=complex)
    buffer[np.mod(ell_range(n), n_grid)] = weights * residual.values
    return np.abs(np.fft.fft(buffer))


def argmax_correlation(correlations: np.ndarray) -> Tuple[int, float]:
    """Lowest index attaining the maximum."""
    correlations = np.asarray(correlations)
    if correlations.size == 0:
        raise ParameterError("Cannot take the argmax of an empty correlation vector.")
    index = int(np.argmax(correlations))
    return index, float(correlations[index])


# --- Least squares over the found frequencies ---

@dataclass(frozen=True)
class GramSystem:
    omegas: np.ndarray
    A: np.ndarray
    Fy: np.ndarray
    coeffs: np.ndarray
    cond: float
    atoms: np.ndarray
    weights: np.ndarray

    @property
    def t(self) -> int:
        return int(self.omegas.size)


def solve_gram(
    omegas: Sequence[float],
    y: SampleVector,
    pc: Preconditioner,
    cond_limit: float = 1e10,
    mask: Optional[ObservationMask] = None,
    n_grid: Optional[int] = None,
) -> GramSystem:
    if pc.n != y.n:
        raise DimensionError(f"Samples have n={y.n} but the preconditioner has n={pc.n}.")
    weights = dictionary_weights(pc, mask)
    y_p = prepare_samples(y, weights)
    omegas = wrap(np.atleast_1d(np.asarray(omegas, dtype=float)))
    t = omegas.size

    if t == 0:
        empty = np.zeros((0, 0), dtype=complex)
        atoms = np.zeros((weights.size, 0), dtype=complex)
        return GramSystem(omegas, empty, np.zeros(0, complex), np.zeros(0, complex), 1.0, atoms, weights)

    if t > 1:
        gaps = circular_distance(omegas[:, None], omegas[None, :])
        np.fill_diagonal(gaps, np.inf)
        min_gap = float(np.min(gaps))
        resolution = 1.0 / (10.0 * y.n * (n_grid or 2 * y.n + 1))
        if min_gap < resolution:
            raise DegenerateDictionaryError(
                f"Frequencies closer than {resolution:.3e} (gap {min_gap:.3e}); dictionary is degenerate."
            )

    atoms = weighted_atoms(omegas, weights)
    A = atoms.conj().T @ atoms
    Fy = atoms.conj().T @ y_p
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(f"Gram condition number {cond:.3e} exceeds the limit {cond_limit:.1e}.")
    try:
        factor = scipy.linalg.cho_factor(A, lower=True)
        coeffs = scipy.linalg.cho_solve(factor, Fy)
    except np.linalg.LinAlgError as e:
        raise IllConditionedError(f"Gram matrix is not positive definite: {e}") from e
    return GramSystem(omegas, A, Fy, coeffs, cond, atoms, weights)


def residual(y: SampleVector, gs: GramSystem) -> SampleVector:
    """r = y - F(omega) c, recomputed from the samples."""
    y_p = prepare_samples(y, gs.weights)
    fitted = gs.atoms @ gs.coeffs if gs.t else 0.0
    return SampleVector(n=y.n, values=y_p - fitted, preconditioned=True)


def _gradient(gs: GramSystem, r: SampleVector) -> np.ndarray:
    if gs.t == 0:
        return np.zeros(0)
    z = atom_derivatives(gs.omegas, gs.weights)
    # d||r||^2 / d omega_m = -2 Re[c_m r^H z_m]
    return -2.0 * np.real((z.T @ r.values.conj()) * gs.coeffs)


def sliding_gradient(
    omegas: Sequence[float],
    y: SampleVector,
    pc: Preconditioner,
    mask: Optional[ObservationMask] = None,
    cond_limit: float = 1e10,
) -> np.ndarray:
    """Gradient of ||y - F(omega) c(omega)||^2 with c minimized out."""
    gs = solve_gram(omegas, y, pc, cond_limit, mask)
    return _gradient(gs, residual(y, gs))


# --- Sliding ---

@dataclass(frozen=True)
class SlidingResult:
    omegas: np.ndarray
    steps: int
    stalled: bool
    eta0: float
    path: List[np.ndarray] = field(default_factory=list)


def calibrated_eta0(weights: np.ndarray) -> float:
    """eta0 giving 0.8 of a Newton step for an isolated spike."""
    n = (weights.size - 1) // 2
    energy = float(np.sum((weights * 2.0 * np.pi * ell_range(n)) ** 2))
    if energy == 0.0:
        raise ParameterError("No observed index carries frequency information (only l = 0 is observed).")
    return 0.8 * n ** 2 / (2.0 * energy)


def sliding(
    omega0: Sequence[float],
    y: SampleVector,
    pc: Preconditioner,
    eta0: Optional[float] = None,
    T: int = 200,
    mask: Optional[ObservationMask] = None,
    cond_limit: float = 1e10,
    n_grid: Optional[int] = None,
    stop_tol: float = 1e-14,
    record: bool = False,
) -> SlidingResult:
    """Weighted gradient descent on the partial least-squares loss.

    Amplitude weights come from the least-squares fit at omega0 and stay fixed.
    With eta0=None the step is calibrated to the observed weights; pursuits
    default to DEFAULT_ETA0 instead.
    A Gram failure mid-run stops at the last valid iterate with `stalled=True`.
    """
    n = y.n
    gs = solve_gram(omega0, y, pc, cond_limit, mask, n_grid)
    omegas = gs.omegas
    weights = gs.weights
    eta0 = calibrated_eta0(weights) if eta0 is None else float(eta0)
    path = [omegas.copy()] if record else []

    amp2 = np.abs(gs.coeffs) ** 2
    if gs.t == 0 or T == 0:
        return SlidingResult(omegas, 0, False, eta0, path)
    if np.any(amp2 == 0.0):
        log_warning("Sliding skipped: a fitted amplitude is exactly zero.")
        return SlidingResult(omegas, 0, True, eta0, path)

    eta = eta0 / n ** 2
    steps = 0
    stalled = False
    for _ in range(T):
        step = eta * _gradient(gs, residual(y, gs)) / amp2
        if np.max(np.abs(step)) < stop_tol:
            break
        candidate = wrap(omegas - step)
        try:
            gs = solve_gram(candidate, y, pc, cond_limit, mask, n_grid)
        except GramError as e:
            log_warning(f"Sliding stalled after {steps} steps: {e}")
            stalled = True
            break
        omegas = gs.omegas
        steps += 1
        if record:
            path.append(omegas.copy())
    return SlidingResult(omegas, steps, stalled, eta0, path)


# --- Pursuit ---

@dataclass(frozen=True)
class RoundRecord:
    round: int
    grid_omega: Optional[float]
    correlation: float
    pre_slide_omegas: np.ndarray
    omegas: np.ndarray
    residual_norm: float
    slide_steps: int
    slide_status: str


@dataclass
class IterationTrace:
    initial_residual_norm: float = 0.0
    rounds: List[RoundRecord] = field(default_factory=list)

    @property
    def residual_norms(self) -> List[float]:
        return [self.initial_residual_norm] + [r.residual_norm for r in self.rounds]

    def __len__(self) -> int:
        return len(self.rounds)


@dataclass(frozen=True)
class RecoveryResult:
    omegas: np.ndarray
    coeffs: np.ndarray
    trace: IterationTrace
    stopped_reason: str
    residual: SampleVector
    algorithm: str = "omp"

    @property
    def rounds(self) -> int:
        return len(self.trace)


def _refine(pre: GramSystem, y_p: SampleVector, cfg: SolverConfig) -> Tuple[GramSystem, int, str]:
    """Slide a fitted frequency set; fall back to it on stall or loss increase."""
    slide = sliding(
        pre.omegas, y_p, cfg.pc,
        eta0=cfg.eta0, T=cfg.t_slide, mask=cfg.mask,
        cond_limit=cfg.cond_limit, n_grid=cfg.n_grid, stop_tol=cfg.stop_tol,
    )
    if slide.stalled:
        return pre, slide.steps, SLIDE_REVERTED_STALL
    try:
        post = solve_gram(slide.omegas, y_p, cfg.pc, cfg.cond_limit, cfg.mask, cfg.n_grid)
    except GramError:
        return pre, slide.steps, SLIDE_REVERTED_STALL
    if residual(y_p, post).norm() > residual(y_p, pre).norm():
        return pre, slide.steps, SLIDE_REVERTED_LOSS
    return post, slide.steps, SLIDE_OK


def _pursuit(y: SampleVector, cfg: SolverConfig, slide_each_round: bool, algorithm: str) -> RecoveryResult:
    if y.preconditioned:
        raise ParameterError("Pursuit expects raw samples; preconditioning happens inside the solver.")
    if y.n != cfg.pc.n:
        raise DimensionError(f"Samples have n={y.n} but the solver is configured for n={cfg.pc.n}.")

    weights = dictionary_weights(cfg.pc, cfg.mask)
    y_p = SampleVector(n=y.n, values=prepare_samples(y, weights), preconditioned=True)
    r = y_p
    gs = solve_gram([], y_p, cfg.pc, cfg.cond_limit, cfg.mask, cfg.n_grid)
    trace = IterationTrace(initial_residual_norm=y_p.norm())
    stopped = STOP_CAP

    try:
        while True:
            k, value = argmax_correlation(grid_correlations(r, cfg.pc, cfg.n_grid, cfg.mask))
            if value <= cfg.gamma:
                stopped = STOP_THRESHOLD
                break
            if gs.t >= cfg.spike_cap:
                stopped = STOP_CAP
                break

            grid_omega = k / cfg.n_grid
            candidate = np.append(gs.omegas, grid_omega)
            try:
                fitted = solve_gram(candidate, y_p, cfg.pc, cfg.cond_limit, cfg.mask, cfg.n_grid)
            except GramError as e:
                log_debug(f"Round {len(trace) + 1}: Gram failure at grid frequency {grid_omega:.6f}: {e}")
                stopped = STOP_STALL
                break

            steps, status = 0, SLIDE_SKIPPED
            if slide_each_round:
                gs, steps, status = _refine(fitted, y_p, cfg)
            else:
                gs = fitted
            r = residual(y_p, gs)
            trace.rounds.append(
                RoundRecord(
                    round=len(trace) + 1,
                    grid_omega=grid_omega,
                    correlation=value,
                    pre_slide_omegas=fitted.omegas,
                    omegas=gs.omegas,
                    residual_norm=r.norm(),
                    slide_steps=steps,
                    slide_status=status,
                )
            )
            log_debug(
                f"Round {len(trace)}: grid omega {grid_omega:.6f} |corr| {value:.3e} "
                f"residual {r.norm():.3e} slide {status} ({steps} steps)"
            )
    except SuperResolutionError as e:
        raise SolverError(f"{algorithm} failed in round {len(trace) + 1}: {e}", trace=trace) from e

    return RecoveryResult(gs.omegas, gs.coeffs, trace, stopped, r, algorithm)


def omp(y: SampleVector, cfg: SolverConfig) -> RecoveryResult:
    """Continuous OMP on the frequency grid, re-projecting after every pick."""
    result = _pursuit(y, cfg, slide_each_round=False, algorithm="omp")
    log_info(f"omp: {result.rounds} rounds, stopped on {result.stopped_reason}")
    return result


def sliding_omp(y: SampleVector, cfg: SolverConfig) -> RecoveryResult:
    """OMP with every found frequency refined by sliding after each pick."""
    result = _pursuit(y, cfg, slide_each_round=True, algorithm="sliding_omp")
    log_info(f"sliding_omp: {result.rounds} rounds, stopped on {result.stopped_reason}")
    return result


def two_stage_omp(y: SampleVector, cfg: SolverConfig) -> RecoveryResult:
    """Plain OMP for the support, then one joint sliding refinement at the end."""
    first = _pursuit(y, cfg, slide_each_round=False, algorithm="two_stage_omp")
    if first.rounds == 0:
        return first

    weights = dictionary_weights(cfg.pc, cfg.mask)
    y_p = SampleVector(n=y.n, values=prepare_samples(y, weights), preconditioned=True)
    try:
        pre = solve_gram(first.omegas, y_p, cfg.pc, cfg.cond_limit, cfg.mask, cfg.n_grid)
        gs, steps, status = _refine(pre, y_p, cfg)
    except SuperResolutionError as e:
        raise SolverError(f"two_stage_omp refinement failed: {e}", trace=first.trace) from e

    r = residual(y_p, gs)
    first.trace.rounds.append(
        RoundRecord(
            round=first.rounds + 1,
            grid_omega=None,
            correlation=float("nan"),
            pre_slide_omegas=pre.omegas,
            omegas=gs.omegas,
            residual_norm=r.norm(),
            slide_steps=steps,
            slide_status=status,
        )
    )
    log_info(f"two_stage_omp: {first.rounds} picks + joint slide ({status}), stopped on {first.stopped_reason}")
    return RecoveryResult(gs.omegas, gs.coeffs, first.trace, first.stopped_reason, r, "two_stage_omp")


SOLVERS = {
    "omp": omp,
    "sliding_omp": sliding_omp,
    "two_stage_omp": two_stage_omp,
}


def run_algorithm(name: str, y: SampleVector, cfg: SolverConfig) -> RecoveryResult:
    if name not in SOLVERS:
        raise ParameterError(f"Unknown algorithm '{name}'. Choose one of {sorted(SOLVERS)}.")
    return SOLVERS[name](y, cfg)
