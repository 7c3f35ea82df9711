"""Dense density-matrix simulation of a foliated CSS code.

The circuit is simulated in the effective code-qubit picture: each teleportation of a code qubit
is the Kraus operator H Z^m / sqrt(2), and each check is measured by one ancilla prepared in
|+>, coupled by CZ gates and read out in the X basis. Because every code qubit sees one Hadamard
per round, the CZ fan-out always measures a Z-type product on the physical qubits; at odd rounds
that product is the code's X-check.

Qubit 0 is the most significant bit of the register and the ancilla, when present, is the last
qubit. States carry a leading batch axis holding the logical tomography inputs, so one pass
over the circuit gives the full logical channel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Literal, Union

import numpy as np
from numpy.typing import NDArray
from tqdm import tqdm

from teleport_noise.config.settings import resolve_tol, settings
from teleport_noise.core.foliation import (
    CssCode,
    FoliationNoiseModel,
    GeneralPureZChannel,
    PauliReplacement,
    PureZKraus,
    SyndromeRecord,
    active_rounds,
    ancilla_gamma,
    cluster_stabilizer_outcomes,
    convert_noise_model,
    same_code,
    syndrome_key,
)
from teleport_noise.core.frames import HADAMARD
from teleport_noise.core.ptm import PAULI_MATRICES, KrausSet, Ptm, off_diagonal_norm
from teleport_noise.utils.exceptions import DimensionError, DomainError, ResourceLimitError
from teleport_noise.utils.logger import log
from teleport_noise.utils.seeding import get_rng

_PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
_X_BASIS = (_PLUS, np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0))
_TELEPORT_KRAUS = tuple(
    HADAMARD @ np.linalg.matrix_power(PAULI_MATRICES[3], m) / np.sqrt(2.0) for m in (0, 1)
)

NoiseSource = Union[FoliationNoiseModel, PauliReplacement, None]


# ============================================================
# DENSITY MATRIX
# ============================================================


@lru_cache(maxsize=None)
def _bit_table(n_qubits: int) -> NDArray[np.int64]:
    """bits[b, q] of basis index b, qubit 0 most significant."""
    index = np.arange(2**n_qubits)
    return (index[:, None] >> (n_qubits - 1 - np.arange(n_qubits))[None, :]) & 1


class DensityMatrix:
    """Batch of (possibly subnormalized) density matrices on the same register."""

    def __init__(self, data: NDArray[np.complex128], n_qubits: int):
        data = np.asarray(data, dtype=complex)
        if data.ndim == 2:
            data = data[None]
        dim = 2**n_qubits
        if data.shape[1:] != (dim, dim):
            raise DimensionError(f"expected {dim}x{dim} matrices, got {data.shape[1:]}")
        self.data = data
        self.n_qubits = n_qubits

    @property
    def batch(self) -> int:
        return self.data.shape[0]

    def trace(self) -> NDArray[np.float64]:
        return np.einsum("xii->x", self.data).real

    def expectation(self, op: NDArray[np.complex128]) -> NDArray[np.float64]:
        """Tr[op rho] for every batch member."""
        return np.einsum("ij,xji->x", op, self.data).real

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().transpose(0, 2, 1))) <= tol)

    def __add__(self, other: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(self.data + other.data, self.n_qubits)

    def scaled(self, factor: float) -> DensityMatrix:
        return DensityMatrix(self.data * factor, self.n_qubits)

    def apply_kraus(self, ops: NDArray[np.complex128], qubit: int) -> DensityMatrix:
        """sum_k K_k rho K_k^dagger with every K_k acting on ``qubit``."""
        if not 0 <= qubit < self.n_qubits:
            raise DomainError(f"qubit {qubit} outside register of {self.n_qubits}")
        ops = np.asarray(ops, dtype=complex).reshape(-1, 2, 2)
        before, after = 2**qubit, 2 ** (self.n_qubits - qubit - 1)
        tensor = self.data.reshape(self.batch, before, 2, after, before, 2, after)
        out = np.einsum("nab,xibjkcl,ndc->xiajkdl", ops, tensor, ops.conj(), optimize=True)
        dim = 2**self.n_qubits
        return DensityMatrix(out.reshape(self.batch, dim, dim), self.n_qubits)

    def apply_diagonal(self, diagonal: NDArray[np.complex128]) -> DensityMatrix:
        """D rho D^dagger for a diagonal unitary D."""
        return DensityMatrix(
            self.data * diagonal[None, :, None] * diagonal.conj()[None, None, :], self.n_qubits
        )

    def with_plus_ancilla(self) -> DensityMatrix:
        ancilla = np.outer(_PLUS, _PLUS.conj())
        dim = 2 ** (self.n_qubits + 1)
        data = np.einsum("xij,ab->xiajb", self.data, ancilla).reshape(self.batch, dim, dim)
        return DensityMatrix(data, self.n_qubits + 1)

    def project_last(self, vector: NDArray[np.complex128]) -> DensityMatrix:
        """<v| rho |v> on the last qubit, which is removed."""
        dim = 2 ** (self.n_qubits - 1)
        tensor = self.data.reshape(self.batch, dim, 2, dim, 2)
        data = np.einsum("xiajb,a,b->xij", tensor, vector.conj(), vector)
        return DensityMatrix(data, self.n_qubits - 1)


def _pauli_string(n: int, support: Iterable[int], pauli: int) -> NDArray[np.complex128]:
    support = set(int(q) for q in support)
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = np.kron(out, PAULI_MATRICES[pauli] if q in support else PAULI_MATRICES[0])
    return out


def _fanout_phases(n_qubits: int, support: Iterable[int]) -> NDArray[np.complex128]:
    """CZ between the last qubit and each qubit of ``support``."""
    bits = _bit_table(n_qubits)
    parity = bits[:, list(support)].sum(axis=1) % 2 if support else np.zeros(len(bits), int)
    return np.where(bits[:, -1] * parity == 1, -1.0, 1.0).astype(complex)


def code_projector(code: CssCode) -> NDArray[np.complex128]:
    dim = 2**code.n
    projector = np.eye(dim, dtype=complex)
    for checks, pauli in ((code.x_checks, 1), (code.z_checks, 3)):
        for row in checks:
            stabilizer = _pauli_string(code.n, np.flatnonzero(row), pauli)
            projector = projector @ (np.eye(dim) + stabilizer) / 2.0
    return projector


def logical_operators(code: CssCode) -> NDArray[np.complex128]:
    """(k, 4, 2^n, 2^n) array of logical I, X, Y = iXZ, Z per logical qubit."""
    out = np.zeros((code.k, 4, 2**code.n, 2**code.n), dtype=complex)
    for a in range(code.k):
        x_bar = _pauli_string(code.n, np.flatnonzero(code.logical_x[a]), 1)
        z_bar = _pauli_string(code.n, np.flatnonzero(code.logical_z[a]), 3)
        out[a] = (np.eye(2**code.n), x_bar, 1j * x_bar @ z_bar, z_bar)
    return out


def code_state(code: CssCode, logical: Literal["0", "1", "+", "-"] = "0") -> DensityMatrix:
    """Logical eigenstate of Z (0, 1) or X (+, -) on every logical qubit."""
    if logical not in ("0", "1", "+", "-"):
        raise DomainError(f"unknown logical state {logical!r}")
    operators = logical_operators(code)
    pauli, sign = {"0": (3, 1), "1": (3, -1), "+": (1, 1), "-": (1, -1)}[logical]
    rho = code_projector(code)
    for a in range(code.k):
        rho = rho @ (np.eye(2**code.n) + sign * operators[a, pauli]) / 2.0
    return DensityMatrix(rho / np.trace(rho).real, code.n)


def _tomography_inputs(code: CssCode) -> NDArray[np.complex128]:
    """O_I = Pi/2^k followed by O_{a,P} = P_a Pi / 2^k for every a and P in X, Y, Z."""
    projector = code_projector(code) / 2**code.k
    operators = logical_operators(code)
    inputs = [projector]
    for a in range(code.k):
        inputs.extend(operators[a, p] @ projector for p in (1, 2, 3))
    return np.array(inputs)


def _input_index(a: int, pauli: int) -> int:
    return 0 if pauli == 0 else 1 + 3 * a + pauli - 1


# ============================================================
# CIRCUIT
# ============================================================


@dataclass(frozen=True)
class TeleportOp:
    t: int
    qubit: int


@dataclass(frozen=True)
class CodeNoiseOp:
    t: int
    qubit: int

    @property
    def gamma(self) -> int:
        return self.qubit + 1


@dataclass(frozen=True)
class AncillaPrepOp:
    t: int
    row: int
    gamma: int


@dataclass(frozen=True)
class CzFanoutOp:
    t: int
    row: int
    support: tuple[int, ...]


@dataclass(frozen=True)
class AncillaNoiseOp:
    t: int
    row: int
    gamma: int


@dataclass(frozen=True)
class MeasureOp:
    t: int
    row: int


@dataclass(frozen=True)
class FrameCorrectionOp:
    """Inverse of the final Pauli frame, applied in software at readout."""


CircuitOp = Union[
    TeleportOp, CodeNoiseOp, AncillaPrepOp, CzFanoutOp, AncillaNoiseOp, MeasureOp, FrameCorrectionOp
]


def _check_qubit_budget(code: CssCode, max_qubits: int | None) -> None:
    max_qubits = settings.densesim_max_qubits if max_qubits is None else max_qubits
    if code.n + 1 > max_qubits:
        raise ResourceLimitError(
            f"simulating {code.n} code qubits plus one ancilla exceeds the cap of {max_qubits}"
        )


def build_effective_circuit(
    code: CssCode, L: int, max_qubits: int | None = None
) -> list[CircuitOp]:
    if L < 0:
        raise DomainError(f"number of rounds L must be nonnegative, got {L}")
    _check_qubit_budget(code, max_qubits)
    ops: list[CircuitOp] = []
    for t in range(1, 2 * L + 1):
        ops.extend(TeleportOp(t, q) for q in range(code.n))
        ops.extend(CodeNoiseOp(t, q) for q in range(code.n))
        for row, check in enumerate(code.checks_for_round(t)):
            gamma = ancilla_gamma(code, t, row)
            ops.append(AncillaPrepOp(t, row, gamma))
            ops.append(CzFanoutOp(t, row, tuple(int(q) for q in np.flatnonzero(check))))
            ops.append(AncillaNoiseOp(t, row, gamma))
            ops.append(MeasureOp(t, row))
    if L > 0:
        ops.append(FrameCorrectionOp())
    return ops


def outcome_bit_count(code: CssCode, L: int) -> int:
    return 2 * L * code.n + L * (code.n_x_checks + code.n_z_checks)


# ============================================================
# NOISE
# ============================================================


def _weighted_kraus(channel: PureZKraus | GeneralPureZChannel | KrausSet) -> NDArray:
    kraus = channel if isinstance(channel, KrausSet) else channel.kraus_set()
    return np.sqrt(kraus.weight_array)[:, None, None] * kraus.stacked


def _pauli_flip_kraus(p: float) -> NDArray:
    p = min(max(p, 0.0), 1.0)
    return np.array([np.sqrt(1.0 - p) * PAULI_MATRICES[0], np.sqrt(p) * PAULI_MATRICES[3]])


def _noise_table(code: CssCode, L: int, noise: NoiseSource) -> dict[tuple[int, int], list]:
    """Weighted Kraus stacks per (gamma, t), in slot order.

    Replacement channels act as physical Z flips: a code-frame X at odd t is the physical Z
    seen through that round's Hadamard.
    """
    table: dict[tuple[int, int], list] = {}
    if noise is None:
        return table
    if isinstance(noise, PauliReplacement):
        for loc, (_, p) in sorted(noise.probs.items()):
            if p > 0:
                table.setdefault((loc.gamma, loc.t), []).append(_pauli_flip_kraus(p))
        return table
    for gamma in range(1, code.n_qubits + 1):
        for t in active_rounds(code, gamma, L):
            table[(gamma, t)] = [_weighted_kraus(ch) for ch in noise.round_channels(gamma, t)]
    return table


# ============================================================
# BRANCH SIMULATION
# ============================================================

# (grouping history, reference bits per check, logical sign bits X_a then Z_a)
BranchKey = tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]
TeleportChoice = Callable[[int, int], Iterable[int]]
MeasureChoice = Callable[[int, int, list], list]


@dataclass(frozen=True, eq=False)
class FoliationRun:
    code: CssCode
    L: int
    noise: NoiseSource = None
    policy: Literal["enumerate", "record", "sample"] = "enumerate"
    record: SyndromeRecord | None = None
    samples: int = 1000
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.policy not in ("enumerate", "record", "sample"):
            raise DomainError(f"unknown outcome policy {self.policy!r}")
        if self.policy == "record" and self.record is None:
            raise DomainError("the record policy needs a syndrome record")
        if isinstance(self.noise, FoliationNoiseModel) and (
            not same_code(self.noise.code, self.code) or self.noise.L != self.L
        ):
            raise DomainError("noise model was built for a different code or round count")
        _check_qubit_budget(self.code, None)


@dataclass(frozen=True)
class GroupChannel:
    probability: float
    logical_ptms: tuple[Ptm, ...] | None

    @property
    def defined(self) -> bool:
        return self.logical_ptms is not None


@dataclass(frozen=True)
class LogicalChannelReport:
    """Syndrome-conditioned logical channels keyed by ``syndrome_key`` strings."""

    groups: dict[str, GroupChannel]
    raw: bool = False

    def total_probability(self) -> float:
        return float(sum(g.probability for g in self.groups.values()))

    def is_pauli(self, tol: float = 1e-10) -> bool:
        return all(
            off_diagonal_norm(ptm) <= tol
            for group in self.groups.values()
            if group.defined
            for ptm in group.logical_ptms  # type: ignore[union-attr]
        )


class _BranchSimulator:
    """Runs the effective circuit over outcome branches, merging equal classical keys."""

    def __init__(
        self,
        run: FoliationRun,
        raw: bool = False,
        teleport_choice: TeleportChoice | None = None,
        measure_choice: MeasureChoice | None = None,
        prune_tol: float | None = None,
    ):
        self.code = run.code
        self.L = run.L
        self.raw = raw
        self.ops = build_effective_circuit(run.code, run.L)
        self.noise = _noise_table(run.code, run.L, run.noise)
        self.teleport_choice = teleport_choice or (lambda t, q: (0, 1))
        self.measure_choice = measure_choice or (lambda t, row, branches: branches)
        self.prune_tol = resolve_tol(prune_tol, "densesim_prune_tol")
        self.n_checks = self.code.n_x_checks + self.code.n_z_checks

    def _ref_index(self, t: int, row: int) -> int:
        return row if t % 2 == 1 else self.code.n_x_checks + row

    def _teleport_flips(self, t: int, qubit: int) -> tuple[list[int], list[int]]:
        checks = self.code.checks_for_round(t)
        refs = [self._ref_index(t, r) for r in np.flatnonzero(checks[:, qubit])]
        k = self.code.k
        if t % 2 == 1:
            signs = [a for a in range(k) if self.code.logical_x[a, qubit]]
        else:
            signs = [k + a for a in range(k) if self.code.logical_z[a, qubit]]
        return refs, signs

    @staticmethod
    def _flip(bits: tuple[int, ...], positions: list[int]) -> tuple[int, ...]:
        out = list(bits)
        for i in positions:
            out[i] ^= 1
        return tuple(out)

    @staticmethod
    def _merge(states: dict, key, dm: DensityMatrix) -> None:
        states[key] = states[key] + dm if key in states else dm

    def run(self) -> dict[BranchKey, DensityMatrix]:
        start = DensityMatrix(_tomography_inputs(self.code), self.code.n)
        states: dict[BranchKey, DensityMatrix] = {
            ((), (0,) * self.n_checks, (0,) * (2 * self.code.k)): start
        }
        for op in self.ops:
            states = self._apply(op, states)
        log.debug(f"Branch simulation finished with {len(states)} classical keys")
        return states

    def _apply(self, op: CircuitOp, states: dict) -> dict:
        if isinstance(op, TeleportOp):
            refs, signs = self._teleport_flips(op.t, op.qubit)
            out: dict = {}
            for (history, ref, sign), dm in states.items():
                for m in self.teleport_choice(op.t, op.qubit):
                    key = (history, ref, sign)
                    if m:
                        key = (history, self._flip(ref, refs), self._flip(sign, signs))
                    self._merge(out, key, dm.apply_kraus(_TELEPORT_KRAUS[m], op.qubit))
            return out
        if isinstance(op, (CodeNoiseOp, AncillaNoiseOp)):
            gamma = op.gamma
            qubit = op.qubit if isinstance(op, CodeNoiseOp) else self.code.n
            stacks = self.noise.get((gamma, op.t), [])
            if not stacks:
                return states
            out = {}
            for key, dm in states.items():
                for stack in stacks:
                    dm = dm.apply_kraus(stack, qubit)
                out[key] = dm
            return out
        if isinstance(op, AncillaPrepOp):
            return {key: dm.with_plus_ancilla() for key, dm in states.items()}
        if isinstance(op, CzFanoutOp):
            phases = _fanout_phases(self.code.n + 1, op.support)
            return {key: dm.apply_diagonal(phases) for key, dm in states.items()}
        if isinstance(op, MeasureOp):
            return self._measure(op, states)
        return states

    def _measure(self, op: MeasureOp, states: dict) -> dict:
        r = self._ref_index(op.t, op.row)
        out: dict = {}
        for (history, ref, sign), dm in states.items():
            branches = [(s, dm.project_last(_X_BASIS[s])) for s in (0, 1)]
            branches = [(s, b) for s, b in branches if b.trace()[0] > self.prune_tol]
            for s, branch in self.measure_choice(op.t, op.row, branches):
                bit = s if self.raw else s ^ ref[r]
                new_ref = ref[:r] + (s,) + ref[r + 1 :]
                self._merge(out, (history + (bit,), new_ref, sign), branch)
        return out


def _history_syndrome(code: CssCode, L: int, history: tuple[int, ...]) -> str:
    corrected: dict[int, list[int]] = {}
    position = 0
    for t in range(1, 2 * L + 1):
        count = code.checks_for_round(t).shape[0]
        corrected[t] = list(history[position : position + count])
        position += count
    return syndrome_key(corrected)


def _readout(
    code: CssCode, operators: NDArray, dm: DensityMatrix, sign: tuple[int, ...]
) -> tuple[NDArray[np.float64], float]:
    """Unnormalized logical PTMs (k, 4, 4) of one branch and its O_I trace."""
    expectations = np.einsum("aqij,xji->xaq", operators, dm.data).real
    ptms = np.zeros((code.k, 4, 4))
    for a in range(code.k):
        sx, sz = sign[a], sign[code.k + a]
        signs = np.array([1.0, (-1.0) ** sx, (-1.0) ** (sx + sz), (-1.0) ** sz])
        for p in range(4):
            ptms[a, :, p] = signs * expectations[_input_index(a, p), a, :]
    return ptms, float(dm.trace()[0])


def _group_report(
    code: CssCode, L: int, states: dict[BranchKey, DensityMatrix], raw: bool
) -> LogicalChannelReport:
    operators = logical_operators(code)
    numerators: dict[str, NDArray] = {}
    weights: dict[str, float] = {}
    for (history, _, sign), dm in states.items():
        key = _history_syndrome(code, L, history)
        ptms, weight = _readout(code, operators, dm, sign)
        numerators[key] = numerators.get(key, 0.0) + ptms
        weights[key] = weights.get(key, 0.0) + weight
    prune = settings.densesim_prune_tol
    groups = {
        key: GroupChannel(
            probability=weights[key],
            logical_ptms=tuple(numerators[key] / weights[key]) if weights[key] > prune else None,
        )
        for key in sorted(numerators)
    }
    return LogicalChannelReport(groups=groups, raw=raw)


def run_conditional(
    run: FoliationRun, record: SyndromeRecord | None = None
) -> tuple[float, tuple[Ptm, ...] | None]:
    """Probability of one full outcome record and the logical channels it implements."""
    record = run.record if record is None else record
    if record is None:
        raise DomainError("run_conditional needs a syndrome record")
    cluster_stabilizer_outcomes(record, run.code)
    if record.L != run.L:
        raise DomainError(f"record covers {record.L} rounds, run has {run.L}")

    def fixed_m(t: int, q: int) -> tuple[int]:
        return (int(record.m[q, t - 1]),)

    def fixed_s(t: int, row: int, branches: list) -> list:
        return [(s, b) for s, b in branches if s == int(record.s[t][row])]

    simulator = _BranchSimulator(run, raw=True, teleport_choice=fixed_m, measure_choice=fixed_s)
    states = simulator.run()
    if not states:
        return 0.0, None
    [((_, _, sign), dm)] = list(states.items())
    ptms, probability = _readout(run.code, logical_operators(run.code), dm, sign)
    if probability <= settings.densesim_prune_tol:
        return probability, None
    return probability, tuple(ptms / probability)


def averaged_logical_report(run: FoliationRun, raw: bool = False) -> LogicalChannelReport:
    """Logical channels averaged over teleportation outcomes, grouped by syndrome."""
    if run.policy == "sample":
        return sampled_logical_report(run, run.samples, run.seed)
    if run.policy == "record":
        probability, ptms = run_conditional(run)
        corrected = cluster_stabilizer_outcomes(run.record, run.code)  # type: ignore[arg-type]
        return LogicalChannelReport({syndrome_key(corrected): GroupChannel(probability, ptms)})
    bits = outcome_bit_count(run.code, run.L)
    if bits > settings.densesim_max_outcome_bits:
        raise ResourceLimitError(
            f"{bits} outcome bits exceed the enumeration cap of "
            f"{settings.densesim_max_outcome_bits}; use the sampling policy"
        )
    states = _BranchSimulator(run, raw=raw).run()
    report = _group_report(run.code, run.L, states, raw)
    log.info(
        f"Enumerated {bits} outcome bits into {len(report.groups)} syndrome groups "
        f"({len(states)} branches)"
    )
    return report


def sampled_logical_report(
    run: FoliationRun, samples: int, seed: int | None = None, progress: bool = False
) -> LogicalChannelReport:
    """Monte Carlo report: uniform teleport outcomes, Born-rule check outcomes.

    Group probabilities are sample frequencies; group channels are means of the
    per-trajectory normalized logical channels.
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    rng = get_rng(seed)
    operators = logical_operators(run.code)
    totals: dict[str, NDArray] = {}
    counts: dict[str, int] = {}
    for _ in tqdm(range(samples), disable=not progress, desc="densesim trajectories"):
        m = np.zeros((run.code.n, 2 * run.L), dtype=np.int64)
        s: dict[int, list[int]] = {t: [] for t in range(1, 2 * run.L + 1)}

        def draw_m(t: int, q: int) -> tuple[int]:
            m[q, t - 1] = rng.integers(0, 2)
            return (int(m[q, t - 1]),)

        def draw_s(t: int, row: int, branches: list) -> list:
            weights = np.array([b.trace()[0] for _, b in branches])
            choice = rng.choice(len(branches), p=weights / weights.sum())
            outcome, branch = branches[choice]
            s[t].append(outcome)
            return [(outcome, branch.scaled(1.0 / weights[choice]))]

        simulator = _BranchSimulator(run, raw=True, teleport_choice=draw_m, measure_choice=draw_s)
        states = simulator.run()
        [((_, _, sign), dm)] = list(states.items())
        ptms, weight = _readout(run.code, operators, dm, sign)
        record = SyndromeRecord(s={t: np.array(v, dtype=np.int64) for t, v in s.items()}, m=m)
        key = syndrome_key(cluster_stabilizer_outcomes(record, run.code))
        totals[key] = totals.get(key, 0.0) + ptms / weight
        counts[key] = counts.get(key, 0) + 1
    groups = {
        key: GroupChannel(counts[key] / samples, tuple(totals[key] / counts[key]))
        for key in sorted(totals)
    }
    return LogicalChannelReport(groups=groups)


# ============================================================
# VERIFICATION
# ============================================================


@dataclass(frozen=True)
class GroupComparison:
    syndrome: str
    prob_coherent: float
    prob_pauli: float
    max_ptm_delta: float | None


@dataclass(frozen=True)
class VerificationReport:
    groups: list[GroupComparison]
    max_probability_deviation: float
    max_ptm_deviation: float
    raw: dict | None = field(default=None)

    @property
    def max_deviation(self) -> float:
        return max(self.max_probability_deviation, self.max_ptm_deviation)

    def to_dict(self) -> dict:
        payload = {
            "groups": [
                {
                    "syndrome": g.syndrome,
                    "prob_coherent": g.prob_coherent,
                    "prob_pauli": g.prob_pauli,
                    "max_ptm_delta": g.max_ptm_delta,
                }
                for g in self.groups
            ],
            "max_deviation": self.max_deviation,
            "max_probability_deviation": self.max_probability_deviation,
            "max_ptm_deviation": self.max_ptm_deviation,
        }
        if self.raw is not None:
            payload["raw"] = self.raw
        return payload


def compare_reports(
    first: LogicalChannelReport, second: LogicalChannelReport, floor: float | None = None
) -> tuple[list[GroupComparison], float, float]:
    """Per-group deviations in probability and in the probability-weighted logical PTMs.

    PTM deviations compare p * Lambda, the unnormalized conditional channels.
    """
    floor = resolve_tol(floor, "verify_probability_floor")
    comparisons: list[GroupComparison] = []
    max_prob, max_ptm = 0.0, 0.0
    for key in sorted(set(first.groups) | set(second.groups)):
        a = first.groups.get(key, GroupChannel(0.0, None))
        b = second.groups.get(key, GroupChannel(0.0, None))
        max_prob = max(max_prob, abs(a.probability - b.probability))
        delta = None
        if a.defined and b.defined and min(a.probability, b.probability) >= floor:
            pairs = zip(a.logical_ptms, b.logical_ptms)  # type: ignore[arg-type]
            delta = float(
                max(np.max(np.abs(a.probability * x - b.probability * y)) for x, y in pairs)
            )
            max_ptm = max(max_ptm, delta)
        comparisons.append(GroupComparison(key, a.probability, b.probability, delta))
    return comparisons, max_prob, max_ptm


def verify_pauli_replacement(
    code: CssCode,
    L: int,
    model: FoliationNoiseModel,
    include_raw: bool = False,
    purity_tol: float | None = None,
) -> VerificationReport:
    """Compare the coherent model with its Pauli replacement, syndrome group by group."""
    replacement = convert_noise_model(model, purity_tol)
    coherent_run = FoliationRun(code, L, model)
    pauli_run = FoliationRun(code, L, replacement)
    groups, max_prob, max_ptm = compare_reports(
        averaged_logical_report(coherent_run), averaged_logical_report(pauli_run)
    )
    raw = None
    if include_raw:
        _, raw_prob, raw_ptm = compare_reports(
            averaged_logical_report(coherent_run, raw=True),
            averaged_logical_report(pauli_run, raw=True),
        )
        raw = {"max_probability_deviation": raw_prob, "max_ptm_deviation": raw_ptm}
    log.info(f"Verification over {len(groups)} groups: prob {max_prob:.3g}, ptm {max_ptm:.3g}")
    return VerificationReport(groups, max_prob, max_ptm, raw)


# ============================================================
# SINGLE MEASUREMENTS AND EIGENSTATES
# ============================================================


def measure_noisy_stabilizer(
    state: DensityMatrix,
    support: Iterable[int],
    ancilla_channel: PureZKraus | GeneralPureZChannel | KrausSet | None = None,
) -> dict[int, DensityMatrix]:
    """Measure the Z-type product on ``support`` through a noisy |+> ancilla.

    Returns the two unnormalized outcome branches; their traces are the outcome probabilities.
    """
    support = tuple(int(q) for q in support)
    dm = state.with_plus_ancilla().apply_diagonal(_fanout_phases(state.n_qubits + 1, support))
    if ancilla_channel is not None:
        dm = dm.apply_kraus(_weighted_kraus(ancilla_channel), state.n_qubits)
    return {s: dm.project_last(_X_BASIS[s]) for s in (0, 1)}


def stabilizer_eigenstate_check(
    code: CssCode,
    error: KrausSet,
    qubit: int,
    state: DensityMatrix | None = None,
    tol: float = 1e-12,
) -> bool:
    """Whether ``error`` on ``qubit`` leaves no coherence between different syndromes."""
    state = code_state(code) if state is None else state
    rho = state.apply_kraus(_weighted_kraus(error), qubit).data[0]
    dephased = rho
    for checks, pauli in ((code.x_checks, 1), (code.z_checks, 3)):
        for row in checks:
            stabilizer = _pauli_string(code.n, np.flatnonzero(row), pauli)
            dephased = (dephased + stabilizer @ dephased @ stabilizer) / 2.0
    return bool(np.max(np.abs(rho - dephased)) <= tol)
