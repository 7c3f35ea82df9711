"""Average error channel of a single-qubit teleportation chain.

Each teleportation applies H Z^m (m a uniform random bit) followed by the error E_t. Working in
the interaction picture, the error seen at step t is E_t conjugated by the current Pauli frame,
and the quantity of interest is the outcome average of the ordered product of these conjugated
errors. Three routes compute it:

* an exact recursion over channels conditioned on the most recent frame,
* brute-force enumeration of all 2^t outcome strings,
* seeded Monte Carlo over outcome strings.

Free accumulation and randomized compiling are provided for comparison.
"""
from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Sequence

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from tqdm import tqdm

from teleport_noise.config.settings import settings
from teleport_noise.core.frames import ALL_FRAMES, IDENTITY_FRAME, PauliFrame
from teleport_noise.core.ptm import (
    Ptm,
    as_ptm,
    average_infidelity,
    check_first_row,
    conjugate,
    pauli_twirl,
)
from teleport_noise.utils.exceptions import DomainError, ResourceLimitError
from teleport_noise.utils.logger import log
from teleport_noise.utils.seeding import block_generators, block_sizes

HADAMARD_FRAME = PauliFrame(hadamard=True)


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Physical error channels E_1..E_T of the chain."""

    errors: tuple[Ptm, ...]
    first_row_tol: float | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.errors) == 0:
            raise DomainError("a chain needs at least one timestep")
        errors = tuple(as_ptm(e) for e in self.errors)
        for e in errors:
            check_first_row(e, self.first_row_tol)
        object.__setattr__(self, "errors", errors)

    @classmethod
    def homogeneous(cls, error: Ptm, T: int, first_row_tol: float | None = None) -> ChainSpec:
        if T < 1:
            raise DomainError(f"T must be positive, got {T}")
        return cls(errors=tuple(as_ptm(error) for _ in range(T)), first_row_tol=first_row_tol)

    @property
    def T(self) -> int:
        return len(self.errors)

    def error(self, t: int) -> Ptm:
        _check_step(self, t)
        return self.errors[t - 1]


def _check_step(spec: ChainSpec, t: int) -> None:
    if not 1 <= t <= spec.T:
        raise DomainError(f"timestep {t} outside 1..{spec.T}")


def hadamard_dressed(spec: ChainSpec, t: int) -> Ptm:
    """E_t with the Hadamard of odd steps absorbed: H E_t H for odd t, E_t for even t."""
    e = spec.error(t)
    return conjugate(e, HADAMARD_FRAME) if t % 2 == 1 else e


# ============================================================
# FRAMES
# ============================================================


def frame_after(outcomes: Sequence[int]) -> PauliFrame:
    frame = IDENTITY_FRAME
    for m in outcomes:
        frame = frame.advance(int(m))
    return frame


def frame_marginal(t: int) -> dict[PauliFrame, float]:
    """Exact distribution of the frame after t teleportations."""
    if t < 1:
        raise DomainError(f"frame marginal needs t >= 1, got {t}")
    dist = {IDENTITY_FRAME: 1.0}
    for _ in range(t):
        nxt: dict[PauliFrame, float] = defaultdict(float)
        for frame, p in dist.items():
            for m in (0, 1):
                nxt[frame.advance(m)] += 0.5 * p
        dist = dict(nxt)
    return dist


def frame_joint_distribution(s: int, t: int) -> dict[tuple[PauliFrame, PauliFrame], float]:
    """Joint law of (frame(s), frame(t)) by enumerating every outcome string."""
    if min(s, t) < 1:
        raise DomainError("frame times must be >= 1")
    n = max(s, t)
    if n > settings.max_enumeration_steps:
        raise ResourceLimitError(f"{n} steps exceed the enumeration cap")
    joint: dict[tuple[PauliFrame, PauliFrame], float] = defaultdict(float)
    weight = 0.5**n
    for outcomes in product((0, 1), repeat=n):
        joint[(frame_after(outcomes[:s]), frame_after(outcomes[:t]))] += weight
    return dict(joint)


# ============================================================
# EXACT RECURSION
# ============================================================


@dataclass(frozen=True)
class ConditionalChannelState:
    """Frame-conditioned average channels at step t.

    ``joint[f]`` holds Pr(f) times the channel averaged over histories ending in frame f;
    dividing by ``weights[f]`` gives the conditional channel.
    """

    t: int
    joint: dict[PauliFrame, Ptm]
    weights: dict[PauliFrame, float]

    @property
    def support(self) -> frozenset[PauliFrame]:
        return frozenset(f for f, w in self.weights.items() if w > 0)

    def conditional(self, frame: PauliFrame) -> Ptm:
        weight = self.weights.get(frame, 0.0)
        if weight <= 0:
            raise DomainError(f"frame {frame} has zero probability at t={self.t}")
        return self.joint[frame] / weight

    def average(self) -> Ptm:
        return sum(self.joint.values(), np.zeros((4, 4)))

    def delta(self) -> NDArray[np.float64]:
        """Signed combination of the conditionals.

        Odd t weighs frames by (-1)^z, even t by (-1)^x; with uniform frame weights this is the
        half-difference (t = 1) or quarter alternating sum (t > 1) of the conditional channels.
        """
        if self.t < 1:
            raise DomainError("delta channel is defined for t >= 1")
        total = np.zeros((4, 4))
        for frame, joint in self.joint.items():
            bit = frame.z if self.t % 2 == 1 else frame.x
            total += joint if bit == 0 else -joint
        return total


def initial_state() -> ConditionalChannelState:
    return ConditionalChannelState(
        t=0, joint={IDENTITY_FRAME: np.eye(4)}, weights={IDENTITY_FRAME: 1.0}
    )


def advance_conditional(state: ConditionalChannelState, error_t: Ptm) -> ConditionalChannelState:
    """One more teleportation followed by ``error_t``."""
    error_t = as_ptm(error_t)
    joint: dict[PauliFrame, Ptm] = {}
    weights: dict[PauliFrame, float] = defaultdict(float)
    for frame, history in state.joint.items():
        for m in (0, 1):
            successor = frame.advance(m)
            step = 0.5 * conjugate(error_t, successor) @ history
            joint[successor] = joint[successor] + step if successor in joint else step
            weights[successor] += 0.5 * state.weights[frame]
    return ConditionalChannelState(t=state.t + 1, joint=joint, weights=dict(weights))


def iterate_conditional_states(
    spec: ChainSpec, t_max: int | None = None
) -> Iterator[ConditionalChannelState]:
    """Yield the conditional states for t = 1..t_max (default spec.T)."""
    t_max = spec.T if t_max is None else t_max
    _check_step(spec, t_max)
    state = initial_state()
    for t in range(1, t_max + 1):
        state = advance_conditional(state, spec.errors[t - 1])
        yield state


def _state_at(spec: ChainSpec, t: int) -> ConditionalChannelState:
    _check_step(spec, t)
    state = initial_state()
    for state in iterate_conditional_states(spec, t):
        pass
    return state


def exact_average_channel(spec: ChainSpec, t: int) -> Ptm:
    return _state_at(spec, t).average()


def delta_channel(spec: ChainSpec, t: int) -> NDArray[np.float64]:
    return _state_at(spec, t).delta()


def exact_average_series(spec: ChainSpec) -> list[Ptm]:
    """Average channel for every t = 1..T in one pass."""
    return [state.average() for state in iterate_conditional_states(spec)]


def exact_infidelity_series(spec: ChainSpec) -> NDArray[np.float64]:
    return np.array([average_infidelity(n) for n in exact_average_series(spec)])


def z_like_closed_form(spec: ChainSpec, t: int) -> Ptm:
    """Ordered product of H-dressed twirls, exact when every error is Z-like."""
    total = np.eye(4)
    for s in range(1, t + 1):
        total = pauli_twirl(hadamard_dressed(spec, s)) @ total
    return total


# ============================================================
# ORACLES
# ============================================================


def enumerate_average_channel(spec: ChainSpec, t: int) -> Ptm:
    """Average over all 2^t outcome strings, sharing prefixes depth-first."""
    _check_step(spec, t)
    if t > settings.max_enumeration_steps:
        raise ResourceLimitError(
            f"enumerating 2^{t} outcome strings exceeds the cap of "
            f"{settings.max_enumeration_steps} steps"
        )

    def descend(step: int, frame: PauliFrame, accumulated: Ptm) -> Ptm:
        if step > t:
            return accumulated
        total = np.zeros((4, 4))
        for m in (0, 1):
            successor = frame.advance(m)
            step_channel = conjugate(spec.errors[step - 1], successor)
            total += descend(step + 1, successor, step_channel @ accumulated)
        return total

    return descend(1, IDENTITY_FRAME, np.eye(4)) / 2.0**t


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: Ptm
    stderr: NDArray[np.float64]
    samples: int


@dataclass(frozen=True)
class MonteCarloSeries:
    """Per-step infidelity estimates for t = 1..T."""

    r_mean: NDArray[np.float64]
    r_stderr: NDArray[np.float64]
    samples: int


def _conjugation_table(spec: ChainSpec, t: int) -> NDArray[np.float64]:
    """conj(E_s, frame) for s = 1..t and all 8 frames, indexed by frame index."""
    return np.array(
        [[conjugate(spec.errors[s], frame) for frame in ALL_FRAMES] for s in range(t)]
    )


def _sample_block(
    table: NDArray[np.float64], n: int, rng: np.random.Generator
) -> tuple[NDArray, NDArray, NDArray, NDArray]:
    """Sums and sums of squares of the sampled products (per step) and their infidelities."""
    t = table.shape[0]
    h = np.zeros(n, dtype=np.int64)
    x = np.zeros(n, dtype=np.int64)
    z = np.zeros(n, dtype=np.int64)
    products = np.broadcast_to(np.eye(4), (n, 4, 4)).copy()
    entry_sum = np.zeros((t, 4, 4))
    entry_sumsq = np.zeros((t, 4, 4))
    r_sum = np.zeros(t)
    r_sumsq = np.zeros(t)
    for s in range(t):
        m = rng.integers(0, 2, size=n)
        x ^= m & h
        z ^= m & (1 - h)
        h ^= 1
        index = 4 * h + 2 * x + z
        products = np.matmul(table[s][index], products)
        entry_sum[s] = products.sum(axis=0)
        entry_sumsq[s] = np.square(products).sum(axis=0)
        r = 0.5 - np.trace(products[:, 1:, 1:], axis1=1, axis2=2) / 6.0
        r_sum[s] = r.sum()
        r_sumsq[s] = np.square(r).sum()
    return entry_sum, entry_sumsq, r_sum, r_sumsq


def _run_blocks(
    spec: ChainSpec, t: int, samples: int, seed: int | None, workers: int | None, progress: bool
) -> tuple[NDArray, NDArray, NDArray, NDArray]:
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    table = _conjugation_table(spec, t)
    sizes = block_sizes(samples)
    generators = block_generators(seed, len(sizes))
    workers = workers or settings.max_workers
    log.debug(f"Monte Carlo: {samples} samples in {len(sizes)} blocks on {workers} lanes")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(
            tqdm(
                pool.map(
                    lambda b: _sample_block(table, sizes[b], generators[b]), range(len(sizes))
                ),
                total=len(sizes),
                disable=not progress,
                desc="monte carlo blocks",
            )
        )
    totals = [np.zeros_like(part) for part in results[0]]
    for result in results:
        for total, part in zip(totals, result):
            total += part
    return tuple(totals)  # type: ignore[return-value]


def _mean_and_stderr(total: NDArray, total_sq: NDArray, n: int) -> tuple[NDArray, NDArray]:
    mean = total / n
    if n < 2:
        return mean, np.zeros_like(mean)
    variance = np.maximum(total_sq - n * np.square(mean), 0.0) / (n - 1)
    return mean, np.sqrt(variance / n)


def monte_carlo_average_channel(
    spec: ChainSpec,
    t: int,
    samples: int,
    seed: int | None = None,
    workers: int | None = None,
    progress: bool = False,
) -> MonteCarloEstimate:
    """Sample mean of the frame-conjugated error product over uniform outcome strings.

    Deterministic for a fixed (seed, samples); the worker count only changes scheduling.
    """
    _check_step(spec, t)
    entry_sum, entry_sumsq, _, _ = _run_blocks(spec, t, samples, seed, workers, progress)
    mean, stderr = _mean_and_stderr(entry_sum[-1], entry_sumsq[-1], samples)
    return MonteCarloEstimate(mean=mean, stderr=stderr, samples=samples)


def monte_carlo_infidelity_series(
    spec: ChainSpec,
    samples: int,
    seed: int | None = None,
    workers: int | None = None,
    progress: bool = False,
) -> MonteCarloSeries:
    _, _, r_sum, r_sumsq = _run_blocks(spec, spec.T, samples, seed, workers, progress)
    mean, stderr = _mean_and_stderr(r_sum, r_sumsq, samples)
    return MonteCarloSeries(r_mean=mean, r_stderr=stderr, samples=samples)


# ============================================================
# COMPARISON CHANNELS
# ============================================================


def free_accumulation_channel(spec: ChainSpec, t: int) -> Ptm:
    """E_t ... E_1 with no frames and no Hadamards."""
    _check_step(spec, t)
    total = np.eye(4)
    for e in spec.errors[:t]:
        total = e @ total
    return total


def randomized_compiling_channel(spec: ChainSpec, t: int, dressed: bool = False) -> Ptm:
    """Product of per-step Pauli twirls.

    The default twirls each error in place; ``dressed=True`` twirls the H-dressed
    errors instead, which agrees with the default only for errors symmetric under X<->Z.
    """
    _check_step(spec, t)
    total = np.eye(4)
    for s in range(1, t + 1):
        e = hadamard_dressed(spec, s) if dressed else spec.errors[s - 1]
        total = pauli_twirl(e) @ total
    return total


def chain_table(
    spec: ChainSpec,
    samples: int = 0,
    seed: int | None = None,
    workers: int | None = None,
    progress: bool = False,
) -> pd.DataFrame:
    """Per-step infidelities: exact, free accumulation, randomized compiling, Monte Carlo."""
    r_exact = exact_infidelity_series(spec)
    free = np.eye(4)
    twirled = np.eye(4)
    r_free, r_rc = [], []
    for e in spec.errors:
        free = e @ free
        twirled = pauli_twirl(e) @ twirled
        r_free.append(average_infidelity(free))
        r_rc.append(average_infidelity(twirled))
    if samples > 0:
        series = monte_carlo_infidelity_series(spec, samples, seed, workers, progress)
        r_mc, mc_stderr = series.r_mean, series.r_stderr
    else:
        r_mc = np.full(spec.T, np.nan)
        mc_stderr = np.full(spec.T, np.nan)
    log.info(f"Chain table computed for T={spec.T} (Monte Carlo samples: {samples})")
    return pd.DataFrame(
        {
            "t": np.arange(1, spec.T + 1),
            "r_exact": r_exact,
            "r_free": r_free,
            "r_rc": r_rc,
            "r_mc": r_mc,
            "mc_stderr": mc_stderr,
        }
    )


def fit_growth_exponent(ts: Sequence[float], rs: Sequence[float]) -> float:
    """Least-squares slope of log r against log t."""
    ts_arr = np.asarray(ts, dtype=float)
    rs_arr = np.asarray(rs, dtype=float)
    if np.any(ts_arr <= 0) or np.any(rs_arr <= 0):
        raise DomainError("growth exponent needs positive times and infidelities")
    slope, _ = np.polyfit(np.log(ts_arr), np.log(rs_arr), 1)
    return float(slope)
