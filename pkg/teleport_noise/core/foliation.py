"""Foliated CSS codes under circuit-level pure Z-coherent noise.

Qubits of the foliated circuit are labelled gamma = 1..n (code qubits), then one ancilla per
X-check row, then one per Z-check row. Rounds run t = 1..2L: X-checks are measured at odd t and
Z-checks at even t. Every qubit carries W_gamma noise slots per round it is alive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Literal, Mapping, NamedTuple, Sequence, Union

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from teleport_noise.config.settings import resolve_tol, settings
from teleport_noise.core.ptm import (
    PAULI_MATRICES,
    KrausSet,
    Ptm,
    is_pure_z_coherent,
    ptm_from_kraus,
)
from teleport_noise.utils.exceptions import (
    DimensionError,
    DomainError,
    NoRealRootError,
    NumericConsistencyError,
    PurityViolationError,
    ResourceLimitError,
)
from teleport_noise.utils.logger import log

Parity = Literal["odd", "even"]

# ============================================================
# CODES
# ============================================================


def _binary_matrix(rows, n: int, name: str) -> NDArray[np.int64]:
    arr = np.asarray(rows, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, n)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise DimensionError(f"{name} must have {n} columns, got shape {arr.shape}")
    if np.any((arr != 0) & (arr != 1)):
        raise DimensionError(f"{name} must be binary")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CssCode:
    n: int
    k: int
    x_checks: NDArray[np.int64]
    z_checks: NDArray[np.int64]
    logical_x: NDArray[np.int64]
    logical_z: NDArray[np.int64]

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 0:
            raise DomainError(f"invalid code parameters n={self.n}, k={self.k}")
        for name in ("x_checks", "z_checks", "logical_x", "logical_z"):
            object.__setattr__(self, name, _binary_matrix(getattr(self, name), self.n, name))
        if self.logical_x.shape[0] != self.k or self.logical_z.shape[0] != self.k:
            raise DimensionError(f"expected {self.k} logical X and Z operators")

    @property
    def n_x_checks(self) -> int:
        return self.x_checks.shape[0]

    @property
    def n_z_checks(self) -> int:
        return self.z_checks.shape[0]

    @property
    def n_qubits(self) -> int:
        """Code qubits plus one ancilla per check row."""
        return self.n + self.n_x_checks + self.n_z_checks

    def checks_for_round(self, t: int) -> NDArray[np.int64]:
        return self.x_checks if t % 2 == 1 else self.z_checks


def same_code(a: CssCode, b: CssCode) -> bool:
    if a is b:
        return True
    fields = ("x_checks", "z_checks", "logical_x", "logical_z")
    return (a.n, a.k) == (b.n, b.k) and all(
        np.array_equal(getattr(a, name), getattr(b, name)) for name in fields
    )


class CodeViolation(NamedTuple):
    kind: str
    rows: tuple[int, int]


def validate_code(code: CssCode) -> list[CodeViolation]:
    """Every violated commutation relation; an empty list means the code is well formed."""
    violations: list[CodeViolation] = []

    def collect(kind: str, a: NDArray, b: NDArray, expected: NDArray | None = None) -> None:
        overlap = np.mod(a @ b.T, 2)
        target = np.zeros_like(overlap) if expected is None else expected
        for i, j in zip(*np.nonzero(overlap != target)):
            violations.append(CodeViolation(kind, (int(i), int(j))))

    collect("check_orthogonality", code.x_checks, code.z_checks)
    collect("logical_x_vs_z_check", code.logical_x, code.z_checks)
    collect("logical_z_vs_x_check", code.logical_z, code.x_checks)
    collect("logical_pairing", code.logical_x, code.logical_z, np.eye(code.k, dtype=np.int64))
    return violations


def four_qubit_code() -> CssCode:
    """The [[4,1,2]] code with checks XXXX, ZZII, IIZZ."""
    return CssCode(
        n=4,
        k=1,
        x_checks=[[1, 1, 1, 1]],
        z_checks=[[1, 1, 0, 0], [0, 0, 1, 1]],
        logical_x=[[1, 1, 0, 0]],
        logical_z=[[1, 0, 1, 0]],
    )


def repetition_code(n: int) -> CssCode:
    if n < 2:
        raise DomainError(f"repetition code needs n >= 2, got {n}")
    z_checks = np.zeros((n - 1, n), dtype=np.int64)
    for i in range(n - 1):
        z_checks[i, i] = z_checks[i, i + 1] = 1
    logical_z = np.zeros((1, n), dtype=np.int64)
    logical_z[0, 0] = 1
    return CssCode(
        n=n,
        k=1,
        x_checks=np.zeros((0, n), dtype=np.int64),
        z_checks=z_checks,
        logical_x=np.ones((1, n), dtype=np.int64),
        logical_z=logical_z,
    )


def stabilizer_supports(code: CssCode, kind: Literal["x", "z"]) -> list[tuple[int, ...]]:
    checks = code.x_checks if kind == "x" else code.z_checks
    return [tuple(int(q) for q in np.flatnonzero(row)) for row in checks]


class QubitRole(NamedTuple):
    kind: Literal["code", "x_ancilla", "z_ancilla"]
    index: int


def qubit_role(code: CssCode, gamma: int) -> QubitRole:
    if not 1 <= gamma <= code.n_qubits:
        raise DomainError(f"gamma {gamma} outside 1..{code.n_qubits}")
    if gamma <= code.n:
        return QubitRole("code", gamma - 1)
    if gamma <= code.n + code.n_x_checks:
        return QubitRole("x_ancilla", gamma - code.n - 1)
    return QubitRole("z_ancilla", gamma - code.n - code.n_x_checks - 1)


def ancilla_gamma(code: CssCode, t: int, row: int) -> int:
    """Label of the ancilla measuring check ``row`` of the type measured at round t."""
    return code.n + row + 1 if t % 2 == 1 else code.n + code.n_x_checks + row + 1


def active_rounds(code: CssCode, gamma: int, L: int) -> list[int]:
    role = qubit_role(code, gamma)
    if role.kind == "code":
        return list(range(1, 2 * L + 1))
    first = 1 if role.kind == "x_ancilla" else 2
    return list(range(first, 2 * L + 1, 2))


def default_slot_counts(code: CssCode) -> dict[int, int]:
    """W_gamma convention: check weight + 2 for ancillas, incident checks + 2 for code qubits."""
    incident = code.x_checks.sum(axis=0) + code.z_checks.sum(axis=0)
    slots = {j + 1: int(incident[j]) + 2 for j in range(code.n)}
    for gamma in range(code.n + 1, code.n_qubits + 1):
        role = qubit_role(code, gamma)
        row = (code.x_checks if role.kind == "x_ancilla" else code.z_checks)[role.index]
        slots[gamma] = int(row.sum()) + 2
    return slots


# ============================================================
# NOISE CHANNELS
# ============================================================


class SpacetimeLocation(NamedTuple):
    gamma: int
    t: int
    w: int

    def __str__(self) -> str:
        return f"(gamma={self.gamma}, t={self.t}, w={self.w})"


@dataclass(frozen=True)
class PureZKraus:
    """Rank-one channel N rho N^dagger with N = alpha I + beta Z.

    The global phase is fixed so that alpha is real and nonnegative.
    """

    alpha: complex
    beta: complex
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self) -> None:
        alpha, beta = complex(self.alpha), complex(self.beta)
        pivot = alpha if abs(alpha) > 0 else beta
        if abs(pivot) > 0:
            phase = pivot.conjugate() / abs(pivot)
            alpha, beta = alpha * phase, beta * phase
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if self.check:
            tol = settings.completeness_tol
            norm = abs(alpha) ** 2 + abs(beta) ** 2
            cross = (alpha.conjugate() * beta).real
            if abs(norm - 1.0) > tol or abs(cross) > tol:
                raise NumericConsistencyError(
                    f"alpha I + beta Z is not trace preserving: |a|^2+|b|^2={norm}, "
                    f"Re(a* b)={cross}"
                )

    @classmethod
    def rotation(cls, theta: float) -> PureZKraus:
        """exp(i theta Z)."""
        return cls(np.cos(theta), 1j * np.sin(theta))

    @property
    def flip_probability(self) -> float:
        return abs(self.beta) ** 2

    def operator(self) -> NDArray[np.complex128]:
        return self.alpha * PAULI_MATRICES[0] + self.beta * PAULI_MATRICES[3]

    def kraus_set(self) -> KrausSet:
        return KrausSet.single(self.operator())

    def ptm(self) -> Ptm:
        return ptm_from_kraus(self.kraus_set())


IDENTITY_Z = PureZKraus(1.0, 0.0)


@dataclass(frozen=True)
class GeneralPureZChannel:
    """sum_i c_i N_i rho N_i^dagger with N_i = alpha_i I + beta_i Z."""

    terms: tuple[tuple[float, complex, complex], ...]

    def __post_init__(self) -> None:
        if len(self.terms) == 0:
            raise DomainError("a general channel needs at least one term")
        terms = tuple((float(c), complex(a), complex(b)) for c, a, b in self.terms)
        for c, _, _ in terms:
            if c < 0:
                raise DomainError(f"negative channel coefficient c={c}")
        coefficients, alphas, betas = self.arrays(terms)
        norm = float(np.sum(coefficients * (np.abs(alphas) ** 2 + np.abs(betas) ** 2)))
        cross = float(np.sum(coefficients * (alphas.conj() * betas).real))
        tol = settings.completeness_tol
        if abs(norm - 1.0) > tol or abs(cross) > tol:
            raise NumericConsistencyError(
                f"general pure-Z channel is not trace preserving: norm={norm}, cross={cross}"
            )
        object.__setattr__(self, "terms", terms)

    @staticmethod
    def arrays(terms) -> tuple[NDArray[np.float64], NDArray[np.complex128], NDArray[np.complex128]]:
        c, a, b = zip(*terms)
        return np.array(c, dtype=float), np.array(a, dtype=complex), np.array(b, dtype=complex)

    def kraus_set(self) -> KrausSet:
        c, a, b = self.arrays(self.terms)
        ops = tuple(ai * PAULI_MATRICES[0] + bi * PAULI_MATRICES[3] for ai, bi in zip(a, b))
        return KrausSet(ops=ops, weights=tuple(c))

    def ptm(self) -> Ptm:
        return ptm_from_kraus(self.kraus_set())


LocationChannel = Union[PureZKraus, GeneralPureZChannel, KrausSet]


def pure_z_from_kraus(
    kraus: KrausSet, location: SpacetimeLocation | None = None, tol: float | None = None
) -> PureZKraus | GeneralPureZChannel:
    """Rewrite a Kraus channel as alpha I + beta Z terms after the purity gate.

    Channels that fix |0><0| and |1><1| have diagonal Kraus operators, so each operator K maps
    to alpha = (K00 + K11)/2, beta = (K00 - K11)/2.
    """
    tol = resolve_tol(tol, "purity_tol")
    where = f" at {location}" if location is not None else ""
    if not is_pure_z_coherent(ptm_from_kraus(kraus), tol):
        raise PurityViolationError(f"channel{where} is not pure Z-coherent")
    ops = kraus.stacked
    if np.max(np.abs(ops[:, 0, 1]), initial=0.0) > tol or np.max(
        np.abs(ops[:, 1, 0]), initial=0.0
    ) > tol:
        raise PurityViolationError(f"channel{where} has non-diagonal Kraus operators")
    alphas = (ops[:, 0, 0] + ops[:, 1, 1]) / 2
    betas = (ops[:, 0, 0] - ops[:, 1, 1]) / 2
    weights = kraus.weight_array
    if len(ops) == 1:
        scale = np.sqrt(weights[0])
        return PureZKraus(scale * alphas[0], scale * betas[0])
    return GeneralPureZChannel(terms=tuple(zip(weights, alphas, betas)))


# ============================================================
# COMBINATION AND REPLACEMENT
# ============================================================


def _as_rank_one(channel: PureZKraus | GeneralPureZChannel) -> PureZKraus | None:
    if isinstance(channel, PureZKraus):
        return channel
    if len(channel.terms) == 1:
        c, a, b = channel.terms[0]
        return PureZKraus(np.sqrt(c) * a, np.sqrt(c) * b)
    return None


def combine_round_errors(channels: Sequence[PureZKraus | GeneralPureZChannel]) -> PureZKraus:
    """Multiply the slot operators of one (gamma, t) into a single alpha I + beta Z."""
    alpha, beta = 1.0 + 0j, 0j
    for channel in channels:
        rank_one = _as_rank_one(channel)
        if rank_one is None:
            raise DomainError(
                "combine_round_errors takes rank-one channels; use convert_general_channel"
            )
        alpha, beta = (
            alpha * rank_one.alpha + beta * rank_one.beta,
            alpha * rank_one.beta + beta * rank_one.alpha,
        )
    return PureZKraus(alpha, beta)


def binary_symmetric_flip(p: float, W: int) -> float:
    """Total flip probability of W independent flips with probability p each."""
    return 0.5 * (1.0 - (1.0 - 2.0 * p) ** W)


def _replacement_probability(flip: float, W: int) -> float:
    if W < 1:
        raise DomainError(f"slot count W must be positive, got {W}")
    tol = settings.completeness_tol
    if flip > 1.0 + tol or flip < -tol:
        raise DomainError(f"flip probability {flip} outside [0, 1]")
    flip = min(max(flip, 0.0), 1.0)
    base = 1.0 - 2.0 * flip
    if base < 0 and W % 2 == 0:
        raise NoRealRootError(f"1 - 2|beta|^2 = {base:.6g} < 0 has no real root of even order {W}")
    root = np.sign(base) * abs(base) ** (1.0 / W)
    p = float(0.5 * (1.0 - root))
    if p > 0.5:
        log.warning(f"Replacement probability {p:.6g} exceeds 1/2 (odd root of {base:.6g})")
    return p


def _beta_flip(beta: complex) -> float:
    flip = abs(complex(beta)) ** 2
    if flip > 1.0 + settings.completeness_tol:
        raise DomainError(f"|beta|^2 = {flip} exceeds 1")
    return flip


def code_qubit_replacement(beta: complex, W: int, t_parity: Parity) -> tuple[str, float]:
    if t_parity not in ("odd", "even"):
        raise DomainError(f"t_parity must be 'odd' or 'even', got {t_parity!r}")
    axis = "X" if t_parity == "odd" else "Z"
    return axis, _replacement_probability(_beta_flip(beta), W)


def ancilla_replacement(beta: complex, W: int) -> tuple[str, float]:
    return "Z", _replacement_probability(_beta_flip(beta), W)


def composed_flip_probability(
    channels: Sequence[PureZKraus | GeneralPureZChannel], max_tuples: int | None = None
) -> float:
    """Weighted |beta|^2 of every composed Kraus tuple (i_1, .., i_W)."""
    max_tuples = settings.max_kraus_tuples if max_tuples is None else max_tuples
    sizes = [len(ch.terms) if isinstance(ch, GeneralPureZChannel) else 1 for ch in channels]
    n_tuples = int(np.prod(sizes, dtype=object))
    if n_tuples > max_tuples:
        raise ResourceLimitError(f"{n_tuples} Kraus tuples exceed the cap of {max_tuples}")
    if n_tuples > max_tuples // 2:
        log.warning(f"Enumerating {n_tuples} Kraus tuples (cap {max_tuples})")
    alpha = np.ones(1, dtype=complex)
    beta = np.zeros(1, dtype=complex)
    weight = np.ones(1)
    for channel in channels:
        if isinstance(channel, PureZKraus):
            c, a, b = np.ones(1), np.array([channel.alpha]), np.array([channel.beta])
        else:
            c, a, b = GeneralPureZChannel.arrays(channel.terms)
        alpha, beta = (
            (np.outer(alpha, a) + np.outer(beta, b)).ravel(),
            (np.outer(alpha, b) + np.outer(beta, a)).ravel(),
        )
        weight = np.outer(weight, c).ravel()
    return float(np.sum(weight * np.abs(beta) ** 2))


def convert_general_channel(
    channels: Sequence[PureZKraus | GeneralPureZChannel],
    axis: str = "Z",
    max_tuples: int | None = None,
) -> tuple[str, float]:
    """Per-slot Pauli probability for a (gamma, t) group that may contain rank>1 channels."""
    flip = composed_flip_probability(channels, max_tuples)
    return axis, _replacement_probability(flip, len(channels))


@dataclass(frozen=True, eq=False)
class FoliationNoiseModel:
    code: CssCode
    L: int
    channels: Mapping[SpacetimeLocation, LocationChannel]
    slots: Mapping[int, int]

    def __post_init__(self) -> None:
        if self.L < 0:
            raise DomainError(f"number of rounds L must be nonnegative, got {self.L}")
        for gamma in range(1, self.code.n_qubits + 1):
            if self.slots.get(gamma, 0) < 1:
                raise DomainError(f"missing or nonpositive slot count for gamma={gamma}")
        channels = {SpacetimeLocation(*loc): ch for loc, ch in self.channels.items()}
        for loc in channels:
            if not 1 <= loc.gamma <= self.code.n_qubits:
                raise DomainError(f"location {loc} has gamma outside 1..{self.code.n_qubits}")
            if loc.t not in active_rounds(self.code, loc.gamma, self.L):
                raise DomainError(f"qubit gamma={loc.gamma} is not active at t={loc.t}")
            if not 1 <= loc.w <= self.slots[loc.gamma]:
                raise DomainError(f"location {loc} has w outside 1..{self.slots[loc.gamma]}")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "slots", dict(self.slots))

    @classmethod
    def homogeneous(
        cls,
        code: CssCode,
        L: int,
        channel: LocationChannel,
        slots: Mapping[int, int] | None = None,
    ) -> FoliationNoiseModel:
        """The same channel at every spacetime location."""
        slots = default_slot_counts(code) if slots is None else slots
        locations = _iter_locations(code, L, slots)
        return cls(code=code, L=L, channels={loc: channel for loc in locations}, slots=slots)

    def channel_at(self, loc: SpacetimeLocation) -> LocationChannel:
        return self.channels.get(loc, IDENTITY_Z)

    def locations(self) -> Iterator[SpacetimeLocation]:
        return _iter_locations(self.code, self.L, self.slots)

    def round_channels(self, gamma: int, t: int) -> list[LocationChannel]:
        slots = range(1, self.slots[gamma] + 1)
        return [self.channel_at(SpacetimeLocation(gamma, t, w)) for w in slots]


def _iter_locations(
    code: CssCode, L: int, slots: Mapping[int, int]
) -> Iterator[SpacetimeLocation]:
    for gamma in range(1, code.n_qubits + 1):
        for t in active_rounds(code, gamma, L):
            for w in range(1, slots[gamma] + 1):
                yield SpacetimeLocation(gamma, t, w)


@dataclass(frozen=True)
class PauliReplacement:
    """Single-qubit Pauli channel (axis, p) at every active spacetime location."""

    probs: dict[SpacetimeLocation, tuple[str, float]]
    operation_count: int = 0

    def combined(self, gamma: int, t: int) -> tuple[str, float]:
        """Axis and total flip probability of all slots of (gamma, t)."""
        entries = [v for loc, v in self.probs.items() if loc.gamma == gamma and loc.t == t]
        if not entries:
            raise DomainError(f"no replacement recorded for gamma={gamma}, t={t}")
        axis = entries[0][0]
        flip = 0.0
        for _, p in entries:
            flip = flip + p - 2.0 * flip * p
        return axis, flip

    def above_half(self) -> list[SpacetimeLocation]:
        """Locations whose odd-root replacement probability exceeds 1/2."""
        return [loc for loc, (_, p) in sorted(self.probs.items()) if p > 0.5]

    def to_rows(self) -> list[dict]:
        return [
            {"gamma": loc.gamma, "t": loc.t, "w": loc.w, "axis": axis, "p": p}
            for loc, (axis, p) in sorted(self.probs.items())
        ]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.to_rows(), columns=["gamma", "t", "w", "axis", "p"])


def _gated(model: FoliationNoiseModel, loc: SpacetimeLocation, tol: float):
    channel = model.channel_at(loc)
    if isinstance(channel, KrausSet):
        return pure_z_from_kraus(channel, loc, tol)
    if not is_pure_z_coherent(channel.ptm(), tol):
        raise PurityViolationError(f"channel at {loc} is not pure Z-coherent")
    return channel


def convert_noise_model(
    model: FoliationNoiseModel, purity_tol: float | None = None
) -> PauliReplacement:
    """Exact per-location Pauli replacement of a pure Z-coherent foliation noise model."""
    tol = resolve_tol(purity_tol, "purity_tol")
    gated = {loc: _gated(model, loc, tol) for loc in model.channels}
    probs: dict[SpacetimeLocation, tuple[str, float]] = {}
    operations = 0
    for gamma in range(1, model.code.n_qubits + 1):
        role = qubit_role(model.code, gamma)
        W = model.slots[gamma]
        for t in active_rounds(model.code, gamma, model.L):
            locs = [SpacetimeLocation(gamma, t, w) for w in range(1, W + 1)]
            channels = [gated.get(loc, IDENTITY_Z) for loc in locs]
            axis = ("X" if t % 2 == 1 else "Z") if role.kind == "code" else "Z"
            if all(_as_rank_one(ch) is not None for ch in channels):
                combined = combine_round_errors(channels)
                if role.kind == "code":
                    axis, p = code_qubit_replacement(
                        combined.beta, W, "odd" if t % 2 == 1 else "even"
                    )
                else:
                    axis, p = ancilla_replacement(combined.beta, W)
            else:
                axis, p = convert_general_channel(channels, axis)
            operations += W
            for loc in locs:
                probs[loc] = (axis, p)
    log.info(f"Converted {len(probs)} spacetime locations with {operations} slot products")
    return PauliReplacement(probs=probs, operation_count=operations)


# ============================================================
# CLUSTER SYNDROMES
# ============================================================


@dataclass(frozen=True, eq=False)
class SyndromeRecord:
    """Raw check outcomes per round and teleportation outcomes m[i, t-1]."""

    s: Mapping[int, NDArray[np.int64]]
    m: NDArray[np.int64]

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=np.int64)
        if m.ndim != 2 or m.shape[1] % 2 != 0:
            raise DomainError(f"teleportation outcomes must be an n x 2L matrix, got {m.shape}")
        object.__setattr__(self, "m", m)
        object.__setattr__(
            self, "s", {int(t): np.asarray(bits, dtype=np.int64) for t, bits in self.s.items()}
        )

    @property
    def L(self) -> int:
        return self.m.shape[1] // 2


def cluster_stabilizer_outcomes(
    rec: SyndromeRecord, code: CssCode
) -> dict[int, NDArray[np.int64]]:
    """Corrected syndromes s_t + s_{t-2} + u_t(m) (mod 2), with s_{t-2} = 0 for t <= 2."""
    if rec.m.shape[0] != code.n:
        raise DomainError(f"record has {rec.m.shape[0]} code qubits, code has {code.n}")
    if set(rec.s) != set(range(1, 2 * rec.L + 1)):
        raise DomainError(f"record must hold outcomes for rounds 1..{2 * rec.L}")
    corrected: dict[int, NDArray[np.int64]] = {}
    for t in range(1, 2 * rec.L + 1):
        checks = code.checks_for_round(t)
        s_t = rec.s[t]
        if s_t.shape != (checks.shape[0],):
            raise DomainError(f"round {t} needs {checks.shape[0]} outcomes, got {s_t.shape}")
        previous = rec.s[t - 2] if t > 2 else np.zeros_like(s_t)
        parity = np.mod(checks @ rec.m[:, t - 1], 2)
        corrected[t] = np.mod(s_t + previous + parity, 2)
    return corrected


def syndrome_key(corrected: Mapping[int, Sequence[int]]) -> str:
    """Rounds separated by '|', one character per check."""
    return "|".join("".join(str(int(b)) for b in corrected[t]) for t in sorted(corrected))
