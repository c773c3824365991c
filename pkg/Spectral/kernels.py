# Spectral/kernels.py

from dataclasses import dataclass
from typing import Dict, Iterable, List, Union

import numpy as np
import pandas as pd
from agno.utils.log import log_debug, log_info

from Spectral.errors import DimensionError, ParameterError, PreconditionError
from Spectral.signal_model import SampleVector, ell_range

SUPPORTED_ALPHAS = (1, 2, 4)
TAYLOR_CUTOFF = 1e-8

ArrayLike = Union[float, np.ndarray]


def _check_alpha(alpha: int) -> int:
    if int(alpha) not in SUPPORTED_ALPHAS:
        raise ParameterError(f"Unsupported kernel order alpha={alpha}. Choose one of {SUPPORTED_ALPHAS}.")
    return int(alpha)


def box_length(alpha: int, n: int) -> int:
    """Length m = 2*floor(n/alpha) + 1 of the flat window convolved alpha times."""
    return 2 * (int(n) // int(alpha)) + 1


@dataclass(frozen=True)
class Preconditioner:
    alpha: int
    n: int
    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (2 * int(self.n) + 1,):
            raise DimensionError(f"sigma for n={self.n} needs {2 * int(self.n) + 1} entries, got {sigma.shape}.")
        if np.any(sigma < 0.0):
            raise ParameterError("Preconditioner weights must be non-negative.")
        sigma = np.array(sigma, copy=True)
        sigma.flags.writeable = False
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "n", int(self.n))

    @property
    def sqrt_sigma(self) -> np.ndarray:
        return np.sqrt(self.sigma)

    @property
    def m(self) -> int:
        return box_length(self.alpha, self.n)


@dataclass(frozen=True)
class KernelEval:
    value: ArrayLike
    d1: ArrayLike
    d2: ArrayLike


def build_sigma(alpha: int, n: int) -> Preconditioner:
    alpha = _check_alpha(alpha)
    half = int(n) // alpha
    if half < 1:
        raise ParameterError(f"n={n} is too small for alpha={alpha}: need floor(n/alpha) >= 1.")

    box = np.ones(2 * half + 1)
    weights = box
    for _ in range(alpha - 1):
        weights = np.convolve(weights, box)
    weights = weights / weights.sum()

    # Center the (alpha*2*half + 1)-long window inside l = -n..n
    sigma = np.zeros(2 * n + 1)
    offset = n - alpha * half
    sigma[offset:offset + weights.size] = weights
    # Enforce exact mirror symmetry against floating round-off in the convolution
    sigma = 0.5 * (sigma + sigma[::-1])
    sigma = sigma / sigma.sum()
    return Preconditioner(alpha=alpha, n=n, sigma=sigma)


def _ratio_with_derivatives(m: int, t: np.ndarray):
    """D(t) = sin(m pi t) / (m sin(pi t)) with first and second derivatives."""
    D = np.empty_like(t)
    D1 = np.empty_like(t)
    D2 = np.empty_like(t)

    small = np.abs(t) < TAYLOR_CUTOFF
    if np.any(small):
        ts = t[small]
        a = np.pi ** 2 * (m ** 2 - 1) / 6.0
        b = np.pi ** 4 * (m ** 2 - 1) * (3 * m ** 2 - 7) / 360.0
        D[small] = 1.0 - a * ts ** 2 + b * ts ** 4
        D1[small] = -2.0 * a * ts + 4.0 * b * ts ** 3
        D2[small] = -2.0 * a + 12.0 * b * ts ** 2

    big = ~small
    if np.any(big):
        tb = t[big]
        u = np.sin(m * np.pi * tb)
        du = m * np.pi * np.cos(m * np.pi * tb)
        ddu = -(m * np.pi) ** 2 * u
        v = m * np.sin(np.pi * tb)
        dv = m * np.pi * np.cos(np.pi * tb)
        ddv = -np.pi ** 2 * v

        ratio = u / v
        d_ratio = (du * v - u * dv) / v ** 2
        D[big] = ratio
        D1[big] = d_ratio
        D2[big] = (ddu - 2.0 * dv * d_ratio - ratio * ddv) / v
    return D, D1, D2


def kernel_closed_form(alpha: int, n: int, t: ArrayLike) -> KernelEval:
    """K(t) = [sin(m pi t) / (m sin(pi t))]^alpha and its first two derivatives.

    Accepts a scalar or an array of offsets in [-1/2, 1/2]; the result mirrors
    the input shape.
    """
    alpha = _check_alpha(alpha)
    scalar = np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(np.abs(t_arr) > 0.5):
        raise ParameterError("Kernel offsets must lie in [-1/2, 1/2].")

    m = box_length(alpha, n)
    D, D1, D2 = _ratio_with_derivatives(m, t_arr)
    if alpha == 1:
        value, d1, d2 = D, D1, D2
    else:
        value = D ** alpha
        d1 = alpha * D ** (alpha - 1) * D1
        d2 = alpha * (alpha - 1) * D ** (alpha - 2) * D1 ** 2 + alpha * D ** (alpha - 1) * D2

    if scalar:
        return KernelEval(value=float(value[0]), d1=float(d1[0]), d2=float(d2[0]))
    return KernelEval(value=value, d1=d1, d2=d2)


def kernel_from_sigma(pc: Preconditioner, t: ArrayLike) -> Union[complex, np.ndarray]:
    """Direct sum of sigma_l exp(2 pi j l t)."""
    scalar = np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    values = np.exp(2j * np.pi * np.outer(t_arr, ell_range(pc.n))) @ pc.sigma
    return complex(values[0]) if scalar else values


def precondition(y: SampleVector, pc: Preconditioner) -> SampleVector:
    """Multiply samples entrywise by sqrt(sigma).

    Not idempotent: a second pass would weight by sigma instead of sqrt(sigma),
    so already-weighted vectors are refused.
    """
    if y.preconditioned:
        raise PreconditionError("Samples are already preconditioned; refusing to weight them twice.")
    if y.n != pc.n:
        raise DimensionError(f"Samples have n={y.n} but the preconditioner has n={pc.n}.")
    return SampleVector(n=y.n, values=pc.sqrt_sigma * y.values, preconditioned=True)


def tail_envelope(alpha: int, n: int, t: float, points_per_unit: int = 0) -> float:
    """sup |K(tau)| over t <= |tau| <= 1/2, evaluated on a dense grid."""
    if not 0.0 <= t <= 0.5:
        raise ParameterError("Tail offset must lie in [0, 1/2].")
    density = points_per_unit or 40 * int(n)
    count = max(int(np.ceil((0.5 - t) * density)) + 2, 2)
    grid = np.linspace(t, 0.5, count)
    return float(np.max(np.abs(kernel_closed_form(alpha, n, grid).value)))


def kernel_table(alphas: Iterable[int], n: int, resolution: int) -> pd.DataFrame:
    """Kernel values on [-1/2, 1/2], one column per alpha (plot-ready)."""
    if resolution < 3:
        raise ParameterError("Kernel table needs at least 3 sample points.")
    # Odd count keeps t = 0 on the grid
    count = resolution if resolution % 2 == 1 else resolution + 1
    t = np.linspace(-0.5, 0.5, count)
    t[count // 2] = 0.0
    table: Dict[str, np.ndarray] = {"t": t}
    for alpha in alphas:
        table[f"K_alpha{_check_alpha(alpha)}"] = kernel_closed_form(alpha, n, t).value
    log_debug(f"Kernel table: n={n}, {count} points, alphas={list(alphas)}")
    return pd.DataFrame(table)


# --- Envelope certification ---

@dataclass(frozen=True)
class EnvelopeCheck:
    check_id: str
    description: str
    tau_range: str
    worst_margin: float
    worst_tau: float
    passed: bool


@dataclass(frozen=True)
class CertificationReport:
    alpha: int
    n: int
    grid_size: int
    checks: List[EnvelopeCheck]

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "check_id": c.check_id,
                    "description": c.description,
                    "range": c.tau_range,
                    "worst_margin": c.worst_margin,
                    "worst_tau": c.worst_tau,
                    "passed": c.passed,
                }
                for c in self.checks
            ]
        )


def _judge(check_id, description, tau_range, taus, margins, bounds) -> EnvelopeCheck:
    if taus.size == 0:
        return EnvelopeCheck(check_id, description, tau_range, float("inf"), float("nan"), True)
    tolerance = -1e-10 * (1.0 + np.abs(bounds))
    worst = int(np.argmin(margins))
    passed = bool(np.all(margins >= tolerance))
    return EnvelopeCheck(check_id, description, tau_range, float(margins[worst]), float(taus[worst]), passed)


def certify_envelopes(n: int, grid_size: int, alpha: int = 4) -> CertificationReport:
    """Check the five concentration envelopes of K and its derivatives on a grid.

    Bounds use N = n + 2. Near region: |tau| <= 1/(2N); tail: 1/(2N) <= |tau| <= 1/2.
    A failing envelope is reported, never raised.

    When n is odd or n % 4 == 2 the alpha=4 box has 2*floor(n/4)+1 taps, one
    short of n/2+1. K_tail then fails by a margin near -0.0 (n = 66, 101, 102,
    130), and n = 394 passes only within tolerance. Such rows are expected.
    """
    alpha = _check_alpha(alpha)
    if grid_size < 10 * n:
        raise ParameterError(f"grid_size must be at least 10*n = {10 * n}, got {grid_size}.")

    N = n + 2.0
    edge = 1.0 / (2.0 * N)
    taus = np.linspace(-0.5, 0.5, grid_size)
    k = kernel_closed_form(alpha, n, taus)
    a = np.abs(taus)
    near = a <= edge
    tail = a >= edge
    pi2 = np.pi ** 2

    checks = []

    tn, kt = taus[tail], k.value[tail]
    bound = np.minimum(0.7, 1.0 / (N * a[tail]) ** 4)
    checks.append(_judge("K_tail", "|K| <= min(0.7, 1/(N tau)^4)", "[1/(2N), 1/2]", tn, bound - np.abs(kt), bound))

    tn, kn = taus[near], k.value[near]
    upper = pi2 / 6.0 * N ** 2 * tn ** 2
    lower = N ** 2 * tn ** 2
    gap = np.abs(1.0 - kn)
    margins = np.minimum(upper - gap, gap - lower)
    checks.append(_judge("K_peak", "N^2 tau^2 <= |1 - K| <= pi^2/6 N^2 tau^2", "[0, 1/(2N)]", tn, margins, upper))

    near_bound = np.full(tn.shape, pi2 / 3.0 * N)
    tail_bound = pi2 / (N ** 3 * a[tail] ** 4)
    taus_d1 = np.concatenate([tn, taus[tail]])
    margins = np.concatenate([near_bound - np.abs(k.d1[near]), tail_bound - np.abs(k.d1[tail])])
    bounds = np.concatenate([near_bound, tail_bound])
    checks.append(_judge("dK", "|K'| <= pi^2/3 N (near), pi^2/(N^3 tau^4) (tail)", "[0, 1/2]", taus_d1, margins, bounds))

    slope = -k.d1[near] * tn
    upper = pi2 / 3.0 * N ** 2 * tn ** 2
    lower = 1.9 * N ** 2 * tn ** 2
    margins = np.minimum(upper - slope, slope - lower)
    checks.append(_judge("dK_slope", "1.9 N^2 tau^2 <= -K' tau <= pi^2/3 N^2 tau^2", "[0, 1/(2N)]", tn, margins, upper))

    near_bound = np.full(tn.shape, pi2 / 3.0 * N ** 2)
    tail_bound = 4.0 * np.pi ** 4 / (N ** 2 * a[tail] ** 4)
    margins = np.concatenate([near_bound - np.abs(k.d2[near]), tail_bound - np.abs(k.d2[tail])])
    bounds = np.concatenate([near_bound, tail_bound])
    checks.append(
        _judge("d2K", "|K''| <= pi^2/3 N^2 (near), 4 pi^4/(N^2 tau^4) (tail)", "[0, 1/2]", taus_d1, margins, bounds)
    )

    report = CertificationReport(alpha=alpha, n=n, grid_size=grid_size, checks=checks)
    log_info(
        f"Envelope certification alpha={alpha} n={n}: "
        f"{sum(c.passed for c in checks)}/{len(checks)} passed"
    )
    return report
