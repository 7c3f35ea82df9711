"""Input schemas for configuration files and inline JSON."""
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from teleport_noise.core.bounds import RotationSchedule
from teleport_noise.core.chain import ChainSpec
from teleport_noise.core.foliation import (
    CssCode,
    FoliationNoiseModel,
    GeneralPureZChannel,
    LocationChannel,
    PureZKraus,
    SpacetimeLocation,
    active_rounds,
    default_slot_counts,
    four_qubit_code,
    qubit_role,
    repetition_code,
)
from teleport_noise.core.ptm import (
    KrausSet,
    Ptm,
    amplitude_damping,
    identity_channel,
    pauli_channel,
    ptm_from_kraus,
    rot_axis,
    rot_z,
)

# A complex number is a plain real or a [re, im] pair
ComplexValue = Union[float, Tuple[float, float]]

TOLERANCE_NAMES = {
    "equality": "equality_tol",
    "completeness": "completeness_tol",
    "imaginary": "imaginary_tol",
    "purity": "purity_tol",
}


def to_complex(value: ComplexValue) -> complex:
    if isinstance(value, (tuple, list)):
        return complex(value[0], value[1])
    return complex(value)


# ============================================================
# CHANNELS
# ============================================================

class ChannelSpec(BaseModel):
    """Single-qubit channel shared by every subcommand."""
    type: Optional[
        Literal["identity", "rot_z", "rot_axis", "pauli", "amplitude_damping", "kraus"]
    ] = None
    theta: Optional[float] = None
    axis: Optional[List[float]] = None
    px: float = Field(default=0.0, ge=0.0, le=1.0)
    py: float = Field(default=0.0, ge=0.0, le=1.0)
    pz: float = Field(default=0.0, ge=0.0, le=1.0)
    gamma: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    kraus: Optional[List[List[List[ComplexValue]]]] = None  # 2x2 matrices
    weights: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_fields(self) -> "ChannelSpec":
        if self.type is None:
            self.type = "kraus" if self.kraus is not None else "identity"
        needed = {
            "rot_z": ["theta"],
            "rot_axis": ["theta", "axis"],
            "amplitude_damping": ["gamma"],
            "kraus": ["kraus"],
        }.get(self.type, [])
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"channel type '{self.type}' needs {', '.join(missing)}")
        if self.axis is not None and len(self.axis) != 3:
            raise ValueError("axis must have three components")
        if self.px + self.py + self.pz > 1.0:
            raise ValueError("px + py + pz must not exceed 1")
        return self

    def to_kraus_set(self) -> KrausSet:
        if self.type == "rot_z":
            return rot_z(self.theta)
        if self.type == "rot_axis":
            return rot_axis(self.axis, self.theta)
        if self.type == "pauli":
            return pauli_channel(self.px, self.py, self.pz)
        if self.type == "amplitude_damping":
            return amplitude_damping(self.gamma)
        if self.type == "kraus":
            ops = tuple(
                np.array([[to_complex(v) for v in row] for row in op]) for op in self.kraus
            )
            weights = tuple(self.weights) if self.weights is not None else None
            return KrausSet(ops=ops, weights=weights)
        return identity_channel()

    def to_ptm(
        self, completeness_tol: Optional[float] = None, imaginary_tol: Optional[float] = None
    ) -> Ptm:
        return ptm_from_kraus(
            self.to_kraus_set(), completeness_tol=completeness_tol, imaginary_tol=imaginary_tol
        )

    def rotation_vector(self) -> Optional[np.ndarray]:
        """theta times the unit axis for rotations, None otherwise."""
        if self.type == "rot_z":
            return np.array([0.0, 0.0, self.theta])
        if self.type == "rot_axis":
            axis = np.asarray(self.axis, dtype=float)
            return self.theta * axis / np.linalg.norm(axis)
        return None


class ChainConfig(BaseModel):
    """Teleportation chain: one shared error or one error per step."""
    T: int = Field(ge=1)
    error: Optional[ChannelSpec] = None
    errors: Optional[List[ChannelSpec]] = None
    samples: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_errors(self) -> "ChainConfig":
        if (self.error is None) == (self.errors is None):
            raise ValueError("give exactly one of 'error' and 'errors'")
        if self.errors is not None and len(self.errors) != self.T:
            raise ValueError(f"'errors' has {len(self.errors)} entries, expected T={self.T}")
        return self

    def channel_specs(self) -> List[ChannelSpec]:
        return self.errors if self.errors is not None else [self.error] * self.T

    def to_chain_spec(self, tolerances: Optional[Dict[str, float]] = None) -> ChainSpec:
        tolerances = tolerances or {}
        ptms = [
            spec.to_ptm(tolerances.get("completeness_tol"), tolerances.get("imaginary_tol"))
            for spec in self.channel_specs()
        ]
        return ChainSpec(errors=tuple(ptms), first_row_tol=tolerances.get("equality_tol"))

    def rotation_schedule(self) -> Optional[RotationSchedule]:
        vectors = [spec.rotation_vector() for spec in self.channel_specs()]
        if any(v is None for v in vectors):
            return None
        return RotationSchedule(vectors=np.array(vectors))


# ============================================================
# CODES AND NOISE
# ============================================================

class LogicalsSpec(BaseModel):
    x: List[List[int]]
    z: List[List[int]]


class CodeSpec(BaseModel):
    """CSS code given by its check matrices or by a named preset."""
    preset: Optional[Literal["four_qubit", "repetition"]] = None
    n: Optional[int] = Field(default=None, ge=1)
    k: Optional[int] = Field(default=None, ge=0)
    x_checks: List[List[int]] = Field(default_factory=list)
    z_checks: List[List[int]] = Field(default_factory=list)
    logicals: Optional[LogicalsSpec] = None

    @model_validator(mode="after")
    def check_definition(self) -> "CodeSpec":
        if self.preset == "repetition" and self.n is None:
            raise ValueError("the repetition preset needs n")
        if self.preset is None and (self.n is None or self.k is None or self.logicals is None):
            raise ValueError("a code needs n, k and logicals unless a preset is named")
        return self

    def to_code(self) -> CssCode:
        if self.preset == "four_qubit":
            return four_qubit_code()
        if self.preset == "repetition":
            return repetition_code(self.n)
        return CssCode(
            n=self.n,
            k=self.k,
            x_checks=self.x_checks,
            z_checks=self.z_checks,
            logical_x=self.logicals.x,
            logical_z=self.logicals.z,
        )


class KrausTermSpec(BaseModel):
    c: float
    alpha: ComplexValue
    beta: ComplexValue


class NoiseChannelSpec(BaseModel):
    """Pure Z-coherent channel: theta, (alpha, beta), weighted terms or a shared channel."""
    theta: Optional[float] = None  # shorthand for exp(i theta Z)
    alpha: Optional[ComplexValue] = None
    beta: Optional[ComplexValue] = None
    terms: Optional[List[KrausTermSpec]] = None
    channel: Optional[ChannelSpec] = None

    @model_validator(mode="after")
    def check_form(self) -> "NoiseChannelSpec":
        forms = [
            self.theta is not None,
            self.alpha is not None or self.beta is not None,
            self.terms is not None,
            self.channel is not None,
        ]
        if sum(forms) != 1:
            raise ValueError("give exactly one of theta, alpha/beta, terms, channel")
        if forms[1] and (self.alpha is None or self.beta is None):
            raise ValueError("alpha and beta must be given together")
        return self

    def to_channel(self) -> LocationChannel:
        if self.theta is not None:
            return PureZKraus.rotation(self.theta)
        if self.terms is not None:
            return GeneralPureZChannel(
                terms=tuple((t.c, to_complex(t.alpha), to_complex(t.beta)) for t in self.terms)
            )
        if self.channel is not None:
            return self.channel.to_kraus_set()
        return PureZKraus(to_complex(self.alpha), to_complex(self.beta))


class LocationOverride(BaseModel):
    gamma: int = Field(ge=1)
    t: int = Field(ge=1)
    w: int = Field(ge=1)
    channel: NoiseChannelSpec


class NoiseSpec(BaseModel):
    code_qubits: Optional[NoiseChannelSpec] = None
    ancillas: Optional[NoiseChannelSpec] = None
    slots: Dict[int, int] = Field(default_factory=dict)  # W_gamma overrides
    overrides: List[LocationOverride] = Field(default_factory=list)

    def to_model(self, code: CssCode, L: int) -> FoliationNoiseModel:
        slots = default_slot_counts(code)
        slots.update(self.slots)
        code_channel = self.code_qubits.to_channel() if self.code_qubits else None
        ancilla_channel = self.ancillas.to_channel() if self.ancillas else None
        channels: Dict[SpacetimeLocation, LocationChannel] = {}
        for gamma in range(1, code.n_qubits + 1):
            is_code = qubit_role(code, gamma).kind == "code"
            channel = code_channel if is_code else ancilla_channel
            if channel is None:
                continue
            for t in active_rounds(code, gamma, L):
                for w in range(1, slots.get(gamma, 1) + 1):
                    channels[SpacetimeLocation(gamma, t, w)] = channel
        for override in self.overrides:
            location = SpacetimeLocation(override.gamma, override.t, override.w)
            channels[location] = override.channel.to_channel()
        return FoliationNoiseModel(code=code, L=L, channels=channels, slots=slots)


class FoliationConfig(BaseModel):
    """Input of the foliate and verify subcommands."""
    code: CodeSpec
    L: int = Field(ge=0)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)


# ============================================================
# THRESHOLD AND RUN
# ============================================================

class ThresholdInputs(BaseModel):
    B: int = Field(ge=2)
    n_locations: int = Field(default=5, ge=1)
    p_th_numeric: Optional[float] = Field(default=None, ge=0.0, le=1.0)


class RunConfig(BaseModel):
    """Options common to every subcommand."""
    subcommand: Literal["chain", "bounds", "foliate", "verify", "threshold"]
    input: Optional[str] = None
    output: Optional[str] = None
    seed: int
    tolerances: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_tolerances(self) -> "RunConfig":
        unknown = sorted(set(self.tolerances) - set(TOLERANCE_NAMES))
        if unknown:
            raise ValueError(
                f"unknown tolerance {', '.join(unknown)}; use {', '.join(TOLERANCE_NAMES)}"
            )
        return self

    def settings_overrides(self) -> Dict[str, float]:
        """Tolerances keyed by their settings field names."""
        return {TOLERANCE_NAMES[name]: value for name, value in self.tolerances.items()}
