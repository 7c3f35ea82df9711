"""Tests for foliated codes and the Pauli replacement of pure Z-coherent noise."""
import sys
import os

# Add the parent directory to sys.path
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.abspath(os.path.join(current_dir, "../../"))
sys.path.insert(0, parent_dir)

import numpy as np
import pytest
from teleport_noise.core.foliation import (
    CssCode,
    FoliationNoiseModel,
    GeneralPureZChannel,
    PureZKraus,
    SpacetimeLocation,
    SyndromeRecord,
    active_rounds,
    ancilla_replacement,
    binary_symmetric_flip,
    cluster_stabilizer_outcomes,
    code_qubit_replacement,
    combine_round_errors,
    composed_flip_probability,
    convert_general_channel,
    convert_noise_model,
    default_slot_counts,
    four_qubit_code,
    pure_z_from_kraus,
    qubit_role,
    repetition_code,
    stabilizer_supports,
    syndrome_key,
    validate_code,
)
from teleport_noise.core.ptm import pauli_channel, rot_axis, rot_z
from teleport_noise.utils.exceptions import (
    DimensionError,
    DomainError,
    NoRealRootError,
    NumericConsistencyError,
    PurityViolationError,
    ResourceLimitError,
)

DEPHASING = GeneralPureZChannel(terms=((0.9, 1.0, 0.0), (0.1, 0.0, 1.0)))


def test_builtin_codes_are_valid():
    """Test that the preset codes satisfy every commutation relation."""
    assert validate_code(four_qubit_code()) == []
    assert validate_code(repetition_code(5)) == []
    assert stabilizer_supports(four_qubit_code(), "z") == [(0, 1), (2, 3)]

def test_broken_code_is_reported():
    """Test that an anticommuting logical is listed as a violation."""
    code = CssCode(
        n=2, k=1, x_checks=[], z_checks=[[1, 0]], logical_x=[[1, 1]], logical_z=[[0, 1]]
    )
    kinds = {violation.kind for violation in validate_code(code)}
    assert "logical_x_vs_z_check" in kinds

def test_code_shapes_checked():
    """Test that check matrices must match the qubit count."""
    with pytest.raises(DimensionError):
        CssCode(
            n=3, k=1, x_checks=[[1, 1]], z_checks=[], logical_x=[[1, 1, 1]], logical_z=[[1, 0, 0]]
        )
    with pytest.raises(DomainError):
        repetition_code(1)

def test_qubit_roles_and_rounds():
    """Test qubit labels, active rounds and slot counts of the four-qubit code."""
    code = four_qubit_code()
    assert code.n_qubits == 7
    assert qubit_role(code, 1).kind == "code"
    assert qubit_role(code, 5) == ("x_ancilla", 0)
    assert qubit_role(code, 7) == ("z_ancilla", 1)
    with pytest.raises(DomainError):
        qubit_role(code, 8)
    assert active_rounds(code, 2, 2) == [1, 2, 3, 4]
    assert active_rounds(code, 5, 2) == [1, 3]
    assert active_rounds(code, 6, 2) == [2, 4]
    assert default_slot_counts(code) == {1: 4, 2: 4, 3: 4, 4: 4, 5: 6, 6: 4, 7: 4}

def test_pure_z_kraus_normalizes_phase():
    """Test that the global phase makes alpha real and nonnegative."""
    channel = PureZKraus(0.6j, 0.8)
    assert channel.alpha == pytest.approx(0.6)
    assert channel.beta == pytest.approx(-0.8j)
    assert channel.flip_probability == pytest.approx(0.64)
    assert PureZKraus.rotation(0.2).flip_probability == pytest.approx(np.sin(0.2) ** 2)

def test_pure_z_kraus_must_preserve_trace():
    """Test that non-unitary alpha I + beta Z is rejected."""
    with pytest.raises(NumericConsistencyError):
        PureZKraus(0.6, 0.8)
    with pytest.raises(DomainError):
        GeneralPureZChannel(terms=((-0.1, 1.0, 0.0), (1.1, 1.0, 0.0)))

def test_combine_rotations_adds_angles():
    """Test that consecutive Z rotations compose into one rotation."""
    combined = combine_round_errors([PureZKraus.rotation(0.1), PureZKraus.rotation(0.25)])
    assert combined.alpha == pytest.approx(np.cos(0.35))
    assert combined.beta == pytest.approx(1j * np.sin(0.35))
    with pytest.raises(DomainError):
        combine_round_errors([DEPHASING, DEPHASING])

def test_replacement_inverts_binary_symmetric_composition():
    """Test that W slots at the replacement probability reproduce the total flip."""
    flip = binary_symmetric_flip(0.01, 4)
    axis, p = code_qubit_replacement(np.sqrt(flip), 4, "odd")
    assert axis == "X"
    assert p == pytest.approx(0.01)
    assert code_qubit_replacement(np.sqrt(flip), 4, "even")[0] == "Z"
    assert ancilla_replacement(np.sqrt(flip), 4) == ("Z", pytest.approx(0.01))

def test_replacement_even_root_of_negative():
    """Test that an even slot count cannot invert a flip above one half."""
    beta = np.sin(1.2)
    with pytest.raises(NoRealRootError):
        code_qubit_replacement(beta, 4, "even")
    with pytest.raises(DomainError):
        code_qubit_replacement(beta, 0, "even")
    with pytest.raises(DomainError):
        code_qubit_replacement(beta, 3, "sideways")

def test_replacement_odd_root_of_negative():
    """Test that an odd slot count takes the real root above one half."""
    _, p = ancilla_replacement(np.sin(0.9), 3)
    assert p > 0.5
    assert binary_symmetric_flip(p, 3) == pytest.approx(np.sin(0.9) ** 2)

def test_general_channel_conversion():
    """Test rank>1 channels through the composed Kraus tuples."""
    assert composed_flip_probability([DEPHASING]) == pytest.approx(0.1)
    assert composed_flip_probability([DEPHASING, DEPHASING]) == pytest.approx(0.18)
    axis, p = convert_general_channel([DEPHASING, DEPHASING], "X")
    assert axis == "X"
    assert p == pytest.approx(0.1)
    with pytest.raises(ResourceLimitError):
        composed_flip_probability([DEPHASING, DEPHASING], max_tuples=3)

def test_purity_gate():
    """Test the conversion of Kraus channels to alpha I + beta Z form."""
    rotation = pure_z_from_kraus(rot_z(0.2))
    assert isinstance(rotation, PureZKraus)
    assert rotation.beta == pytest.approx(1j * np.sin(0.2))
    dephasing = pure_z_from_kraus(pauli_channel(0.0, 0.0, 0.1))
    assert composed_flip_probability([dephasing]) == pytest.approx(0.1)
    with pytest.raises(PurityViolationError):
        pure_z_from_kraus(rot_axis((1.0, 0.0, 0.0), 0.2))

def test_noise_model_locations_validated():
    """Test that channels may only sit at active slots."""
    code = four_qubit_code()
    slots = default_slot_counts(code)
    with pytest.raises(DomainError):
        FoliationNoiseModel(code, 1, {SpacetimeLocation(5, 2, 1): PureZKraus.rotation(0.1)}, slots)
    with pytest.raises(DomainError):
        FoliationNoiseModel(code, 1, {SpacetimeLocation(1, 1, 9): PureZKraus.rotation(0.1)}, slots)
    model = FoliationNoiseModel.homogeneous(code, 2, PureZKraus.rotation(0.01))
    assert len(list(model.locations())) == len(model.channels)

def test_convert_homogeneous_rotation():
    """Test replacement probabilities and axes of a homogeneous rotation model."""
    theta = 0.02
    code = four_qubit_code()
    model = FoliationNoiseModel.homogeneous(code, 1, PureZKraus.rotation(theta))
    replacement = convert_noise_model(model)
    expected = 0.5 * (1.0 - np.cos(2 * 4 * theta) ** 0.25)
    assert replacement.probs[SpacetimeLocation(1, 1, 1)] == ("X", pytest.approx(expected))
    assert replacement.probs[SpacetimeLocation(1, 2, 3)] == ("Z", pytest.approx(expected))
    assert replacement.probs[SpacetimeLocation(5, 1, 6)][0] == "Z"
    assert replacement.operation_count == 32 + 6 + 8
    axis, flip = replacement.combined(1, 1)
    assert flip == pytest.approx(np.sin(4 * theta) ** 2)
    frame = replacement.to_frame()
    assert list(frame.columns) == ["gamma", "t", "w", "axis", "p"]
    assert len(frame) == len(replacement.probs)

def test_convert_rejects_impure_and_large_angles():
    """Test the purity gate and the even-root failure inside a model conversion."""
    code = four_qubit_code()
    impure = FoliationNoiseModel.homogeneous(code, 1, rot_axis((1.0, 0.0, 0.0), 0.01))
    with pytest.raises(PurityViolationError):
        convert_noise_model(impure)
    large = FoliationNoiseModel.homogeneous(code, 1, PureZKraus.rotation(0.3))
    with pytest.raises(NoRealRootError):
        convert_noise_model(large)
    single = {gamma: 1 for gamma in range(1, 8)}
    model = FoliationNoiseModel.homogeneous(code, 1, PureZKraus.rotation(0.3), single)
    assert convert_noise_model(model).operation_count == 4 * 2 + 1 + 2

def test_replacement_flags_probabilities_above_half():
    """Test that odd-root probabilities above one half are listed by location."""
    code = four_qubit_code()
    single = {gamma: 1 for gamma in range(1, 8)}
    model = FoliationNoiseModel.homogeneous(code, 1, PureZKraus.rotation(0.9), single)
    replacement = convert_noise_model(model)
    assert replacement.above_half() == sorted(replacement.probs)
    assert all(p == pytest.approx(np.sin(0.9) ** 2) for _, p in replacement.probs.values())
    mild = FoliationNoiseModel.homogeneous(code, 1, PureZKraus.rotation(0.3), single)
    assert convert_noise_model(mild).above_half() == []

def test_cluster_stabilizer_outcomes():
    """Test the corrected syndromes of a short record."""
    code = four_qubit_code()
    m = np.zeros((4, 4), dtype=int)
    m[0, 0] = 1
    record = SyndromeRecord(s={1: [0], 2: [0, 1], 3: [0], 4: [0, 1]}, m=m)
    corrected = cluster_stabilizer_outcomes(record, code)
    assert corrected[1].tolist() == [1]
    assert corrected[2].tolist() == [0, 1]
    assert corrected[4].tolist() == [0, 0]
    assert syndrome_key(corrected) == "1|01|0|00"

def test_cluster_record_shape_checked():
    """Test that malformed records are rejected."""
    code = four_qubit_code()
    with pytest.raises(DomainError):
        cluster_stabilizer_outcomes(SyndromeRecord(s={1: [0], 2: [0, 0]}, m=np.zeros((3, 2))), code)
    with pytest.raises(DomainError):
        SyndromeRecord(s={}, m=np.zeros((4, 3)))
