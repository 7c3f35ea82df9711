"""Error-growth bounds for teleportation chains.

Every diagonal entry of the average channel evolves together with one entry of the delta
channel through an exact 2x2 transfer matrix built from PTM entries of the H-dressed error:

    ([N_t]_{P,P}, [dN_t]_{vP,P}) = M_t(P) @ ([N_{t-1}]_{P,P}, [dN_{t-1}]_{uP,P})

with (u, v) = (X, Z) at even t and (Z, X) at odd t. The second- and third-order factor
intervals bracket the one- and two-step ratios of the diagonal using only entries of M and the
coherence ratio epsilon.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from teleport_noise.core.chain import (
    ChainSpec,
    exact_average_series,
    exact_infidelity_series,
    frame_marginal,
    hadamard_dressed,
    iterate_conditional_states,
)
from teleport_noise.core.ptm import (
    PAULI_INDEX,
    PAULI_LABELS,
    average_infidelity,
    pauli_product_index,
)
from teleport_noise.utils.exceptions import DomainError, PreconditionError, SingularityError
from teleport_noise.utils.logger import log

EPSILON_LIMIT = 1.0 / 3.0
COROLLARY_R0_LIMIT = 1.0 / 100.0
SIMPLE_ESTIMATE_VALIDITY = 0.3

X = PAULI_INDEX["X"]
Z = PAULI_INDEX["Z"]

# (row, column) partners of P whose ratio to [E]_{P,P} defines epsilon.
_RATIO_PAIRS = (("P,XP", (None, X)), ("ZP,XP", (Z, X)), ("ZP,P", (Z, None)))


@dataclass(frozen=True)
class EpsilonReport:
    epsilon: float
    worst_location: tuple[int, str, str] | None


@dataclass(frozen=True)
class FactorInterval:
    pauli: str
    lo: float
    hi: float
    order: int
    span: tuple[int, int]

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= value <= self.hi + slack

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class RotationSchedule:
    """Rotation vectors theta_t of unitary errors exp(i theta_t . sigma)."""

    vectors: NDArray[np.float64]

    def __post_init__(self) -> None:
        arr = np.asarray(self.vectors, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] == 0:
            raise DomainError(f"rotation schedule must be a (T, 3) array, got {arr.shape}")
        object.__setattr__(self, "vectors", arr)

    @classmethod
    def homogeneous(cls, axis, theta: float, T: int) -> RotationSchedule:
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(vectors=np.tile(theta * n, (T, 1)))

    @property
    def T(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class InfidelityBand:
    t: NDArray[np.int64]
    r_lo: NDArray[np.float64]
    r_hi: NDArray[np.float64]
    order: int


def _partner(pauli: int, factor: int | None) -> int:
    return pauli if factor is None else pauli_product_index(factor, pauli)


# ============================================================
# EPSILON
# ============================================================


def epsilon_of(spec: ChainSpec) -> EpsilonReport:
    """Largest coherent-to-incoherent entry ratio over all steps and Paulis."""
    epsilon, worst = 0.0, None
    for t, e in enumerate(spec.errors, start=1):
        for p, label in enumerate(PAULI_LABELS):
            diagonal = e[p, p]
            if diagonal == 0.0:
                raise SingularityError(f"diagonal entry [E_{t}]_({label},{label}) is zero")
            for axis, (row_factor, col_factor) in _RATIO_PAIRS:
                ratio = abs(e[_partner(p, row_factor), _partner(p, col_factor)] / diagonal)
                if ratio > epsilon:
                    epsilon, worst = ratio, (t, label, axis)
    return EpsilonReport(epsilon=float(epsilon), worst_location=worst)


def _require_small_epsilon(spec: ChainSpec, epsilon: float | None) -> float:
    if epsilon is None:
        epsilon = epsilon_of(spec).epsilon
    if epsilon >= EPSILON_LIMIT:
        raise PreconditionError(f"epsilon = {epsilon:.4f} is not below 1/3")
    return epsilon


# ============================================================
# TRANSFER MATRICES
# ============================================================


def diagonal_transfer_matrix(spec: ChainSpec, t: int, pauli: str) -> NDArray[np.float64]:
    e = hadamard_dressed(spec, t)
    u, v = (X, Z) if t % 2 == 0 else (Z, X)
    p = PAULI_INDEX[pauli]
    up, vp = pauli_product_index(u, p), pauli_product_index(v, p)
    return np.array([[e[p, p], e[p, up]], [e[vp, p], e[vp, up]]])


def exact_diagonal_series(spec: ChainSpec) -> NDArray[np.float64]:
    """(T, 4) array of [N_t]_{P,P} propagated by the transfer matrices from (1, 0)."""
    out = np.zeros((spec.T, 4))
    for p, label in enumerate(PAULI_LABELS):
        state = np.array([1.0, 0.0])
        for t in range(1, spec.T + 1):
            state = diagonal_transfer_matrix(spec, t, label) @ state
            out[t - 1, p] = state[0]
    return out


def delta_smallness_ratio(spec: ChainSpec) -> float:
    """max |[dN_t]_{vP,P}| / (epsilon |[N_t]_{P,P}|); at most 3 when epsilon < 1/3."""
    epsilon = epsilon_of(spec).epsilon
    if epsilon == 0.0:
        return 0.0
    worst = 0.0
    for state in iterate_conditional_states(spec):
        average, delta = state.average(), state.delta()
        v = X if state.t % 2 == 1 else Z
        for p in range(4):
            vp = pauli_product_index(v, p)
            worst = max(worst, abs(delta[vp, p]) / (epsilon * abs(average[p, p])))
    return worst


# ============================================================
# FACTOR INTERVALS
# ============================================================


def second_order_factor(
    spec: ChainSpec, t: int, pauli: str, epsilon: float | None = None
) -> FactorInterval:
    """Interval for [N_t]_{P,P} / [N_{t-1}]_{P,P}, t > 2."""
    if t <= 2 or t > spec.T:
        raise DomainError(f"second-order factor needs 2 < t <= {spec.T}, got {t}")
    epsilon = _require_small_epsilon(spec, epsilon)
    eps2 = epsilon**2
    now = diagonal_transfer_matrix(spec, t, pauli)
    before = diagonal_transfer_matrix(spec, t - 1, pauli)
    leading = now[0, 0]
    cross = now[0, 1] * before[1, 0] / before[0, 0]
    d1 = 3 * epsilon**3 / (1 - 3 * eps2)
    d2_range = (-3 * eps2 / (1 + 3 * eps2), 3 * eps2 / (1 - 3 * eps2))
    corners = [(1 + d1s) * leading + (1 + d2) * cross for d1s in (-d1, d1) for d2 in d2_range]
    return FactorInterval(pauli, float(min(corners)), float(max(corners)), 2, (t - 1, t))


def third_order_factor(
    spec: ChainSpec, t: int, pauli: str, epsilon: float | None = None
) -> FactorInterval:
    """Interval for the two-step ratio [N_t]_{P,P} / [N_{t-2}]_{P,P}, t >= 4."""
    if t < 4 or t > spec.T:
        raise DomainError(f"third-order factor needs 4 <= t <= {spec.T}, got {t}")
    epsilon = _require_small_epsilon(spec, epsilon)
    m = {s: diagonal_transfer_matrix(spec, s, pauli) for s in range(t - 3, t + 1)}
    recent = m[t] @ m[t - 1]
    earlier = m[t - 2] @ m[t - 3]
    r_tilde, gamma_tilde = recent[0, 0], recent[0, 1]
    delta_tilde = earlier[1, 0]
    g = gamma_tilde * delta_tilde / (m[t - 2][0, 0] * m[t - 3][0, 0])
    tail = m[t][0, 0] * m[t - 2][0, 0]
    eta3, eta5 = 5 * epsilon**2, 18 * epsilon**4
    corners = [
        r_tilde + g / (1 + e3) + e5 * tail for e3, e5 in product((-eta3, eta3), (-eta5, eta5))
    ]
    return FactorInterval(pauli, float(min(corners)), float(max(corners)), 3, (t - 2, t))


def _interval_product(
    lo: float, hi: float, factor: FactorInterval, t: int
) -> tuple[float, float]:
    if lo > 0 and factor.lo > 0:
        return lo * factor.lo, hi * factor.hi
    candidates = [a * b for a in (lo, hi) for b in (factor.lo, factor.hi)]
    # diagonal PTM entries may be negative, so the lower end keeps its sign
    log.warning(
        f"Nonpositive endpoint for {factor.pauli} at t={t}; widening band to include zero"
    )
    return min(0.0, min(candidates)), max(candidates)


def infidelity_band(spec: ChainSpec, T: int | None = None, order: int = 2) -> InfidelityBand:
    """Infidelity band from cumulative factor intervals, seeded with exact early steps."""
    if order not in (2, 3):
        raise DomainError(f"band order must be 2 or 3, got {order}")
    T = spec.T if T is None else T
    if not 1 <= T <= spec.T:
        raise DomainError(f"band length {T} outside 1..{spec.T}")
    epsilon = _require_small_epsilon(spec, None)
    exact = exact_average_series(ChainSpec(spec.errors[: min(T, 2)], spec.first_row_tol))
    lo = np.zeros((T, 4))
    hi = np.zeros((T, 4))
    for t in range(1, T + 1):
        for p, label in enumerate(PAULI_LABELS):
            if t <= 2:
                lo[t - 1, p] = hi[t - 1, p] = exact[t - 1][p, p]
            elif order == 2 or t == 3:
                factor = second_order_factor(spec, t, label, epsilon)
                lo[t - 1, p], hi[t - 1, p] = _interval_product(
                    lo[t - 2, p], hi[t - 2, p], factor, t
                )
            else:
                factor = third_order_factor(spec, t, label, epsilon)
                lo[t - 1, p], hi[t - 1, p] = _interval_product(
                    lo[t - 3, p], hi[t - 3, p], factor, t
                )
    r_lo = 0.5 - hi[:, 1:].sum(axis=1) / 6.0
    r_hi = 0.5 - lo[:, 1:].sum(axis=1) / 6.0
    return InfidelityBand(t=np.arange(1, T + 1), r_lo=r_lo, r_hi=r_hi, order=order)


# ============================================================
# COROLLARY
# ============================================================


def _check_r0(r0: float) -> None:
    if r0 < 0:
        raise DomainError(f"r0 must be nonnegative, got {r0}")
    if r0 > COROLLARY_R0_LIMIT:
        raise PreconditionError(f"r0 = {r0} exceeds 1/100")


def corollary_linear_bound(r0: float, t: int) -> float:
    _check_r0(r0)
    return 8.5 * r0 * t


def corollary_exponential_bound(r0: float, t: int) -> float:
    """(1/2)[1 - (1 - 17 r0)^t], capped by the linear bound it never exceeds."""
    _check_r0(r0)
    return min(0.5 * (1.0 - (1.0 - 17.0 * r0) ** t), 8.5 * r0 * t)


def ptm_entry_bounds(r0: float) -> tuple[float, float]:
    """Lower bound on diagonal entries and upper bound on off-diagonal magnitudes."""
    _check_r0(r0)
    return 1.0 - 3.0 * r0, float(np.sqrt(6.0 * r0))


def corollary_epsilon_bound(r0: float) -> float:
    _check_r0(r0)
    return float(np.sqrt(6.0 * r0) / (1.0 - 3.0 * r0))


def corollary_step_lower_bound(r0: float) -> float:
    """Smallest per-step diagonal factor allowed by the second-order interval at this r0."""
    epsilon = corollary_epsilon_bound(r0)
    diagonal, off_diagonal = ptm_entry_bounds(r0)
    eps2 = epsilon**2
    leading = (1 - 3 * epsilon**3 / (1 - 3 * eps2)) * diagonal
    cross = (1 + 3 * eps2 / (1 - 3 * eps2)) * off_diagonal**2 / diagonal
    return float(leading - cross)


# ============================================================
# SMALL-ANGLE ESTIMATE
# ============================================================


def _adjacent_correlation(s: int) -> NDArray[np.float64]:
    """E[R_s R_{s+1}^T] over the joint law of consecutive frames."""
    total = np.zeros((3, 3))
    for frame, p in frame_marginal(s).items():
        for m in (0, 1):
            total += 0.5 * p * frame.signed_permutation() @ frame.advance(m).signed_permutation().T
    return total


def simple_proof_estimate(sched: RotationSchedule) -> NDArray[np.float64]:
    """Second-order small-angle infidelity estimate for t = 1..T."""
    vectors = sched.vectors
    scale = float(np.max(np.linalg.norm(vectors, axis=1))) * sched.T
    if scale > SIMPLE_ESTIMATE_VALIDITY:
        log.warning(
            f"max|theta| * T = {scale:.3f} exceeds {SIMPLE_ESTIMATE_VALIDITY}; "
            "the small-angle estimate may be inaccurate"
        )
    squares = np.cumsum(np.sum(vectors**2, axis=1))
    correlations = np.zeros(sched.T)
    for s in range(1, sched.T):
        correlations[s] = vectors[s - 1] @ _adjacent_correlation(s) @ vectors[s]
    return (2.0 / 3.0) * squares + (4.0 / 3.0) * np.cumsum(correlations)


# ============================================================
# TABLE
# ============================================================


def bounds_table(spec: ChainSpec, schedule: RotationSchedule | None = None) -> pd.DataFrame:
    """Per-step exact infidelity with both bands, the small-angle estimate and the corollary."""
    band2 = infidelity_band(spec, order=2)
    band3 = infidelity_band(spec, order=3)
    ts = np.arange(1, spec.T + 1)
    r_simple = simple_proof_estimate(schedule) if schedule is not None else np.full(spec.T, np.nan)
    r0 = max(average_infidelity(e) for e in spec.errors)
    if r0 <= COROLLARY_R0_LIMIT:
        r_corollary = 8.5 * r0 * ts
    else:
        log.info(f"r0 = {r0:.4f} exceeds 1/100; corollary column left empty")
        r_corollary = np.full(spec.T, np.nan)
    return pd.DataFrame(
        {
            "t": ts,
            "r_exact": exact_infidelity_series(spec),
            "r_lo2": band2.r_lo,
            "r_hi2": band2.r_hi,
            "r_lo3": band3.r_lo,
            "r_hi3": band3.r_hi,
            "r_simple": r_simple,
            "r_corollary": r_corollary,
        }
    )
