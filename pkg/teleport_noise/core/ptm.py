"""Single-qubit channel algebra in the Pauli transfer matrix representation.

A PTM is a real 4x4 numpy array whose rows are indexed by output Paulis and whose columns are
indexed by input Paulis, both in the order (I, X, Y, Z):

    [E]_{P,P'} = sum_k w_k Tr[P E_k P' E_k^dagger] / 2

``compose(outer, inner)`` is the matrix product ``outer @ inner``, so ``inner`` acts first.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, Sequence

import numpy as np
from numpy.typing import NDArray

from teleport_noise.config.settings import resolve_tol
from teleport_noise.utils.exceptions import (
    DimensionError,
    DomainError,
    NumericConsistencyError,
)

Ptm = NDArray[np.float64]

PAULI_LABELS = ("I", "X", "Y", "Z")
PAULI_INDEX = {label: i for i, label in enumerate(PAULI_LABELS)}

# (x, z) symplectic bits per Pauli index; the Pauli difference of two indices is the XOR.
PAULI_BITS = ((0, 0), (1, 0), (1, 1), (0, 1))
BITS_TO_INDEX = {bits: i for i, bits in enumerate(PAULI_BITS)}

PAULI_MATRICES = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def pauli_product_index(a: int, b: int) -> int:
    """Index of the Pauli a*b up to phase."""
    xa, za = PAULI_BITS[a]
    xb, zb = PAULI_BITS[b]
    return BITS_TO_INDEX[(xa ^ xb, za ^ zb)]


# DIFFERENCE[i, j]: which Pauli relates row i and column j.
DIFFERENCE = np.array([[pauli_product_index(i, j) for j in range(4)] for i in range(4)])


class HasUnitary(Protocol):
    def unitary(self) -> NDArray[np.complex128]: ...


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Kraus operators with optional nonnegative weights (default all 1)."""

    ops: tuple[NDArray[np.complex128], ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.ops) == 0:
            raise DimensionError("KrausSet needs at least one operator")
        converted = []
        for i, op in enumerate(self.ops):
            arr = np.asarray(op, dtype=complex)
            if arr.shape != (2, 2):
                raise DimensionError(f"Kraus operator {i} has shape {arr.shape}, expected (2, 2)")
            converted.append(arr)
        object.__setattr__(self, "ops", tuple(converted))
        if self.weights is not None:
            if len(self.weights) != len(self.ops):
                raise DimensionError(
                    f"{len(self.weights)} weights given for {len(self.ops)} Kraus operators"
                )
            if any(w < 0 for w in self.weights):
                raise DomainError("Kraus weights must be nonnegative")
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @classmethod
    def single(cls, op: NDArray[np.complex128]) -> KrausSet:
        return cls(ops=(np.asarray(op, dtype=complex),))

    @property
    def stacked(self) -> NDArray[np.complex128]:
        return np.stack(self.ops)

    @property
    def weight_array(self) -> NDArray[np.float64]:
        if self.weights is None:
            return np.ones(len(self.ops))
        return np.asarray(self.weights, dtype=float)

    def completeness_residue(self) -> float:
        """max |sum_k w_k E_k^dagger E_k - I|."""
        ops = self.stacked
        total = np.einsum("k,kba,kbc->ac", self.weight_array, ops.conj(), ops)
        return float(np.max(np.abs(total - np.eye(2))))


@dataclass(frozen=True)
class CoherenceParts:
    """Split of a PTM by the Pauli relating row and column (I = diagonal)."""

    part_I: Ptm
    part_X: Ptm
    part_Y: Ptm
    part_Z: Ptm

    def as_tuple(self) -> tuple[Ptm, Ptm, Ptm, Ptm]:
        return (self.part_I, self.part_X, self.part_Y, self.part_Z)

    def reconstruct(self) -> Ptm:
        return self.part_I + self.part_X + self.part_Y + self.part_Z


def as_ptm(e: Sequence[Sequence[float]] | NDArray) -> Ptm:
    """Coerce to a float 4x4 array, raising DimensionError otherwise."""
    arr = np.asarray(e)
    if arr.shape != (4, 4):
        raise DimensionError(f"PTM must be 4x4, got shape {arr.shape}")
    if np.iscomplexobj(arr):
        arr = arr.real
    return arr.astype(float)


def ptm_from_kraus(
    k: KrausSet,
    *,
    check_completeness: bool = True,
    imaginary_tol: float | None = None,
    completeness_tol: float | None = None,
) -> Ptm:
    """PTM of a weighted Kraus set.

    Args:
        k: Kraus operators and weights.
        check_completeness: Set False for subnormalized conditional maps.
        imaginary_tol: Largest accepted imaginary residue (default from settings).
        completeness_tol: Largest accepted completeness residue (default from settings).

    Raises:
        NumericConsistencyError: imaginary residue or completeness violation.
    """
    imaginary_tol = resolve_tol(imaginary_tol, "imaginary_tol")
    if check_completeness:
        residue = k.completeness_residue()
        if residue > resolve_tol(completeness_tol, "completeness_tol"):
            raise NumericConsistencyError(
                f"Kraus set is not trace preserving (residue {residue:.3e})"
            )
    ops = k.stacked
    raw = (
        np.einsum(
            "iab,kbc,jcd,kad,k->ij",
            PAULI_MATRICES,
            ops,
            PAULI_MATRICES,
            ops.conj(),
            k.weight_array,
        )
        / 2.0
    )
    residue = float(np.max(np.abs(raw.imag)))
    if residue > imaginary_tol:
        raise NumericConsistencyError(f"PTM has imaginary residue {residue:.3e}")
    return raw.real.copy()


def ptm_from_unitary(u: NDArray[np.complex128], **kwargs) -> Ptm:
    return ptm_from_kraus(KrausSet.single(u), **kwargs)


def compose(outer: Ptm, inner: Ptm) -> Ptm:
    """Channel that applies ``inner`` then ``outer``."""
    return as_ptm(outer) @ as_ptm(inner)


def pauli_twirl(e: Ptm) -> Ptm:
    return np.diag(np.diag(as_ptm(e)))


def pauli_conjugation_signs(x: int, z: int) -> NDArray[np.float64]:
    """Signs picked up by (part_I, part_X, part_Y, part_Z) under conjugation by X^x Z^z."""
    return np.array([1.0, (-1.0) ** z, (-1.0) ** (x + z), (-1.0) ** x])


def pauli_twirl_explicit(e: Ptm) -> Ptm:
    """(1/4) sum_P P e P computed with the four conjugation matrices."""
    e = as_ptm(e)
    total = np.zeros((4, 4))
    for bits in PAULI_BITS:
        r = np.diag(pauli_conjugation_signs(*bits))
        total += r @ e @ r
    return total / 4.0


def coherence_decompose(e: Ptm) -> CoherenceParts:
    e = as_ptm(e)
    parts = [np.where(DIFFERENCE == d, e, 0.0) for d in range(4)]
    return CoherenceParts(*parts)


@lru_cache(maxsize=None)
def _frame_ptm(frame: HasUnitary) -> Ptm:
    out = ptm_from_unitary(frame.unitary())
    out = np.round(out, 15)
    out.setflags(write=False)
    return out


def frame_ptm(frame: HasUnitary) -> Ptm:
    """Signed permutation PTM of a Clifford frame (cached per frame)."""
    return _frame_ptm(frame)


def conjugate(e: Ptm, f: HasUnitary) -> Ptm:
    """f^-1 . e . f (f acts first)."""
    r = frame_ptm(f)
    return r.T @ as_ptm(e) @ r


def average_infidelity(e: Ptm) -> float:
    e = as_ptm(e)
    return 0.5 - (e[1, 1] + e[2, 2] + e[3, 3]) / 6.0


def is_pure_z_coherent(e: Ptm, tol: float | None = None) -> bool:
    """No X- or Y-type coherence and an untouched Z axis."""
    tol = resolve_tol(tol, "purity_tol")
    e = as_ptm(e)
    xy_mask = (DIFFERENCE == PAULI_INDEX["X"]) | (DIFFERENCE == PAULI_INDEX["Y"])
    if np.any(np.abs(e[xy_mask]) >= tol):
        return False
    return abs(e[3, 3] - 1.0) < tol


def off_diagonal_norm(e: Ptm) -> float:
    e = as_ptm(e)
    return float(np.max(np.abs(e - np.diag(np.diag(e)))))


def check_first_row(e: Ptm, tol: float | None = None) -> None:
    """Raise NumericConsistencyError unless the first row is (1, 0, 0, 0)."""
    tol = resolve_tol(tol, "equality_tol")
    row = as_ptm(e)[0]
    if np.max(np.abs(row - np.array([1.0, 0.0, 0.0, 0.0]))) > tol:
        raise NumericConsistencyError(f"PTM first row {row.tolist()} is not (1, 0, 0, 0)")


# ============================================================
# CHANNEL CONSTRUCTORS
# ============================================================


def pauli_ptm(label: str) -> Ptm:
    return ptm_from_unitary(PAULI_MATRICES[PAULI_INDEX[label]])


def identity_channel() -> KrausSet:
    return KrausSet.single(np.eye(2))


def unitary_kraus(u: NDArray[np.complex128]) -> KrausSet:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise DimensionError(f"unitary must be 2x2, got {u.shape}")
    return KrausSet.single(u)


def rotation_unitary(axis: Sequence[float], theta: float) -> NDArray[np.complex128]:
    """exp(i theta n.sigma) with n the normalized axis."""
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,):
        raise DimensionError(f"rotation axis must have 3 components, got {n.shape}")
    norm = np.linalg.norm(n)
    if norm == 0.0:
        raise DomainError("rotation axis must be nonzero")
    n = n / norm
    generator = np.einsum("i,iab->ab", n, PAULI_MATRICES[1:])
    return np.cos(theta) * np.eye(2) + 1j * np.sin(theta) * generator


def rot_axis(axis: Sequence[float], theta: float) -> KrausSet:
    return KrausSet.single(rotation_unitary(axis, theta))


def rot_z(theta: float) -> KrausSet:
    return rot_axis((0.0, 0.0, 1.0), theta)


def pauli_channel(px: float, py: float, pz: float) -> KrausSet:
    probs = np.array([px, py, pz], dtype=float)
    if np.any(probs < 0) or probs.sum() > 1.0 + 1e-12:
        raise DomainError(f"Pauli probabilities {probs.tolist()} are not a subdistribution")
    p_identity = max(0.0, 1.0 - probs.sum())
    ops = [np.sqrt(p_identity) * PAULI_MATRICES[0]]
    ops += [np.sqrt(p) * PAULI_MATRICES[i + 1] for i, p in enumerate(probs)]
    return KrausSet(ops=tuple(ops))


def amplitude_damping(gamma: float) -> KrausSet:
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"damping rate {gamma} outside [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return KrausSet(ops=(k0, k1))


def pauli_diagonal_ptm(px: float, py: float, pz: float) -> Ptm:
    """Pauli channel PTM built directly from flip probabilities."""
    return np.diag([1.0, 1.0 - 2 * (py + pz), 1.0 - 2 * (px + pz), 1.0 - 2 * (px + py)])


# ============================================================
# RANDOM CHANNELS
# ============================================================


def random_unitary(rng: np.random.Generator) -> NDArray[np.complex128]:
    """Haar-random 2x2 unitary."""
    z = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_channel(
    rng: np.random.Generator,
    infidelity: float,
    max_angle: float = 0.3,
    max_flip: float = 0.03,
) -> Ptm:
    """Random rotation followed by a random Pauli channel with a prescribed average infidelity.

    Both components share one scale ``s`` in [0, 1] (rotation angle ``s*max_angle``, total
    flip probability ``s*max_flip``); ``s`` is bisected to hit ``infidelity``.
    """
    if infidelity < 0:
        raise DomainError("infidelity must be nonnegative")
    axis = rng.normal(size=3)
    direction = rng.dirichlet(np.ones(3))

    def channel(scale: float) -> Ptm:
        rotation = ptm_from_unitary(rotation_unitary(axis, scale * max_angle))
        flips = scale * max_flip * direction
        return compose(pauli_diagonal_ptm(*flips), rotation)

    if infidelity == 0:
        return np.eye(4)
    if average_infidelity(channel(1.0)) < infidelity:
        raise DomainError(
            f"infidelity {infidelity} exceeds the generator range "
            f"{average_infidelity(channel(1.0)):.4f}"
        )
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if average_infidelity(channel(mid)) < infidelity:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-17:
            break
    return channel(0.5 * (lo + hi))
