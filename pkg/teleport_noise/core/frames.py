"""Pauli frames of a teleportation chain.

A frame is the Clifford H^h X^x Z^z accumulated by the measurement byproducts. Teleporting
with outcome m multiplies the frame by H Z^m on the left, which moves the Z^m past the
frame's Hadamard: an unmarked frame picks up a Z, a marked one an X.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from teleport_noise.core.ptm import PAULI_MATRICES, Ptm, frame_ptm
from teleport_noise.utils.exceptions import DomainError

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True, order=True)
class PauliFrame:
    hadamard: bool = False
    x: int = 0
    z: int = 0

    def __post_init__(self) -> None:
        if self.x not in (0, 1) or self.z not in (0, 1):
            raise DomainError(f"frame bits must be 0/1, got x={self.x}, z={self.z}")

    @classmethod
    def from_index(cls, index: int) -> PauliFrame:
        """Inverse of ``index`` (4h + 2x + z)."""
        if not 0 <= index < 8:
            raise DomainError(f"frame index {index} outside 0..7")
        return cls(hadamard=bool(index >> 2), x=(index >> 1) & 1, z=index & 1)

    @classmethod
    def from_label(cls, label: str) -> PauliFrame:
        for frame in ALL_FRAMES:
            if frame.label == label:
                return frame
        raise DomainError(f"unknown frame label {label!r}")

    @property
    def index(self) -> int:
        return 4 * int(self.hadamard) + 2 * self.x + self.z

    @property
    def pauli(self) -> str:
        return {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[(self.x, self.z)]

    @property
    def label(self) -> str:
        if not self.hadamard:
            return self.pauli
        return "H" if self.pauli == "I" else "H" + self.pauli

    def unitary(self) -> NDArray[np.complex128]:
        u = np.linalg.matrix_power(PAULI_MATRICES[1], self.x) @ np.linalg.matrix_power(
            PAULI_MATRICES[3], self.z
        )
        return HADAMARD @ u if self.hadamard else u

    def ptm(self) -> Ptm:
        return frame_ptm(self)

    def signed_permutation(self) -> NDArray[np.float64]:
        """Action on the Bloch vector (the lower-right 3x3 block of the PTM)."""
        return np.asarray(self.ptm()[1:, 1:])

    def advance(self, outcome: int) -> PauliFrame:
        """Frame after one more teleportation with measurement outcome ``outcome``."""
        if outcome not in (0, 1):
            raise DomainError(f"teleportation outcome must be 0/1, got {outcome}")
        if self.hadamard:
            return PauliFrame(False, self.x ^ outcome, self.z)
        return PauliFrame(True, self.x, self.z ^ outcome)

    def __str__(self) -> str:
        return self.label


ALL_FRAMES: tuple[PauliFrame, ...] = tuple(PauliFrame.from_index(i) for i in range(8))
IDENTITY_FRAME = ALL_FRAMES[0]

