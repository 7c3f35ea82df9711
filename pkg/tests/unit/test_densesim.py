"""Tests for the dense foliation simulator."""
import sys
import os

# Add the parent directory to sys.path
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.abspath(os.path.join(current_dir, "../../"))
sys.path.insert(0, parent_dir)

import numpy as np
import pytest
from teleport_noise.core.densesim import (
    DensityMatrix,
    FoliationRun,
    FrameCorrectionOp,
    GroupChannel,
    LogicalChannelReport,
    TeleportOp,
    averaged_logical_report,
    build_effective_circuit,
    code_state,
    compare_reports,
    logical_operators,
    measure_noisy_stabilizer,
    outcome_bit_count,
    run_conditional,
    sampled_logical_report,
    stabilizer_eigenstate_check,
    verify_pauli_replacement,
)
from teleport_noise.core.foliation import (
    FoliationNoiseModel,
    GeneralPureZChannel,
    PauliReplacement,
    PureZKraus,
    SpacetimeLocation,
    SyndromeRecord,
    four_qubit_code,
    repetition_code,
)
from teleport_noise.core.ptm import PAULI_MATRICES, pauli_channel, rot_z
from teleport_noise.utils.exceptions import DomainError, ResourceLimitError


@pytest.fixture
def code():
    return four_qubit_code()


def test_apply_kraus_targets_qubit():
    """Test that a Kraus operator acts on the requested qubit, qubit 0 most significant."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    flipped = DensityMatrix(rho, 2).apply_kraus(PAULI_MATRICES[1], 0)
    assert flipped.data[0, 2, 2] == pytest.approx(1.0)
    assert flipped.trace()[0] == pytest.approx(1.0)
    with pytest.raises(DomainError):
        DensityMatrix(rho, 2).apply_kraus(PAULI_MATRICES[1], 2)

def test_code_state_is_stabilized(code):
    """Test that the logical zero state is a +1 eigenstate of checks and logical Z."""
    state = code_state(code, "0")
    operators = logical_operators(code)
    assert state.trace()[0] == pytest.approx(1.0)
    assert state.expectation(operators[0, 3])[0] == pytest.approx(1.0)
    assert state.expectation(operators[0, 1])[0] == pytest.approx(0.0, abs=1e-12)
    assert code_state(code, "-").expectation(operators[0, 1])[0] == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        code_state(code, "2")

def test_effective_circuit_layout(code):
    """Test the per-round operation order and the final frame correction."""
    ops = build_effective_circuit(code, 1)
    assert len(ops) == (4 + 4 + 4) + (4 + 4 + 8) + 1
    assert isinstance(ops[0], TeleportOp)
    assert isinstance(ops[-1], FrameCorrectionOp)
    assert build_effective_circuit(code, 0) == []
    assert outcome_bit_count(code, 1) == 11
    with pytest.raises(ResourceLimitError):
        build_effective_circuit(repetition_code(12), 1)

def test_noisy_stabilizer_measurement(code):
    """Test that a rotated ancilla flips the outcome with probability sin^2(theta)."""
    theta = 0.2
    branches = measure_noisy_stabilizer(code_state(code), (0, 1), PureZKraus.rotation(theta))
    assert branches[1].trace()[0] == pytest.approx(np.sin(theta) ** 2)
    assert branches[0].trace()[0] == pytest.approx(np.cos(theta) ** 2)
    clean = measure_noisy_stabilizer(code_state(code), (0, 1))
    assert clean[0].trace()[0] == pytest.approx(1.0)

def test_stabilizer_eigenstate_check(code):
    """Test that only coherent errors leave coherence between syndromes."""
    assert not stabilizer_eigenstate_check(code, rot_z(0.1), 0)
    assert stabilizer_eigenstate_check(code, pauli_channel(0.0, 0.0, 0.1), 0)

def test_noise_free_report(code):
    """Test that a noise-free circuit gives a trivial syndrome and the identity channel."""
    report = averaged_logical_report(FoliationRun(code, 1))
    assert list(report.groups) == ["0|00"]
    group = report.groups["0|00"]
    assert group.probability == pytest.approx(1.0)
    np.testing.assert_allclose(group.logical_ptms[0], np.eye(4), atol=1e-12)
    empty = averaged_logical_report(FoliationRun(code, 0))
    assert list(empty.groups) == [""]
    np.testing.assert_allclose(empty.groups[""].logical_ptms[0], np.eye(4), atol=1e-12)

def test_injected_flip_is_detected(code):
    """Test that a certain Z flip on a code qubit fires the next X-check."""
    replacement = PauliReplacement({SpacetimeLocation(1, 2, 1): ("Z", 1.0)})
    report = averaged_logical_report(FoliationRun(code, 2, replacement))
    assert list(report.groups) == ["0|00|1|00"]
    assert report.groups["0|00|1|00"].probability == pytest.approx(1.0)
    assert report.is_pauli()

def test_conditional_run_of_trivial_record(code):
    """Test the probability of the all-zero record without noise."""
    record = SyndromeRecord(s={1: [0], 2: [0, 0]}, m=np.zeros((4, 2), dtype=int))
    probability, ptms = run_conditional(FoliationRun(code, 1), record)
    assert probability == pytest.approx(2.0**-8)
    np.testing.assert_allclose(ptms[0], np.eye(4), atol=1e-12)
    run = FoliationRun(code, 1, policy="record", record=record)
    report = averaged_logical_report(run)
    assert list(report.groups) == ["0|00"]
    with pytest.raises(DomainError):
        FoliationRun(code, 1, policy="record")

def test_sampled_report_is_seeded(code):
    """Test the sampling policy on a noiseless circuit."""
    run = FoliationRun(code, 1, policy="sample", samples=10, seed=4)
    report = averaged_logical_report(run)
    assert report.groups["0|00"].probability == pytest.approx(1.0)
    again = sampled_logical_report(run, 10, seed=4)
    np.testing.assert_allclose(
        again.groups["0|00"].logical_ptms[0], report.groups["0|00"].logical_ptms[0]
    )

def test_enumeration_cap(code):
    """Test that long records must be sampled."""
    with pytest.raises(ResourceLimitError):
        averaged_logical_report(FoliationRun(code, 3))

def test_noise_model_must_match_run(code):
    """Test that a model built for another round count is rejected."""
    model = FoliationNoiseModel.homogeneous(code, 2, PureZKraus.rotation(0.01))
    with pytest.raises(DomainError):
        FoliationRun(code, 1, model)

def test_coherent_report_probabilities_sum_to_one(code):
    """Test that syndrome group probabilities form a distribution."""
    model = FoliationNoiseModel.homogeneous(code, 1, PureZKraus.rotation(0.05))
    report = averaged_logical_report(FoliationRun(code, 1, model))
    assert report.total_probability() == pytest.approx(1.0)
    assert len(report.groups) > 1

@pytest.mark.parametrize("L", [1, 2])
@pytest.mark.parametrize("theta, single_slots", [(0.05, False), (0.1, False), (0.3, True)])
def test_pauli_replacement_reproduces_logical_channels(code, L, theta, single_slots):
    """Test that the replacement gives the same syndrome-conditioned logical channels."""
    slots = {gamma: 1 for gamma in range(1, 8)} if single_slots else None
    model = FoliationNoiseModel.homogeneous(code, L, PureZKraus.rotation(theta), slots)
    report = verify_pauli_replacement(code, L, model, include_raw=L == 1)
    assert report.max_probability_deviation < 1e-10
    assert report.max_ptm_deviation < 1e-10
    payload = report.to_dict()
    assert set(payload) >= {"groups", "max_deviation"}
    assert ("raw" in payload) == (L == 1)
    assert sum(g["prob_coherent"] for g in payload["groups"]) == pytest.approx(1.0)

def test_pauli_replacement_of_mixed_rank_ancilla_noise(code):
    """Test the replacement of an ancilla channel mixing identity and a rotation."""
    mixed = GeneralPureZChannel(terms=((0.5, 1.0, 0.0), (0.5, np.cos(0.2), 1j * np.sin(0.2))))
    base = FoliationNoiseModel.homogeneous(code, 1, PureZKraus.rotation(0.05))
    channels = {
        loc: (mixed if loc.gamma > code.n else channel) for loc, channel in base.channels.items()
    }
    model = FoliationNoiseModel(code=code, L=1, channels=channels, slots=base.slots)
    report = verify_pauli_replacement(code, 1, model)
    assert report.max_probability_deviation < 1e-10
    assert report.max_ptm_deviation < 1e-10

def test_sampled_noise_free_syndromes(code):
    """Test that every sampled outcome draw of a noiseless circuit has a trivial syndrome."""
    report = sampled_logical_report(FoliationRun(code, 2), 100, seed=8)
    assert list(report.groups) == ["0|00|0|00"]
    assert report.groups["0|00|0|00"].probability == pytest.approx(1.0)

def test_compare_reports_floor():
    """Test that rare groups only enter the probability comparison."""
    ptm = (np.eye(4),)
    first = LogicalChannelReport({"0": GroupChannel(1.0, ptm), "1": GroupChannel(1e-14, ptm)})
    shifted = (np.diag([1.0, 0.5, 0.5, 1.0]),)
    second = LogicalChannelReport({"0": GroupChannel(1.0, ptm), "1": GroupChannel(0.0, shifted)})
    groups, max_prob, max_ptm = compare_reports(first, second)
    assert max_prob == pytest.approx(1e-14)
    assert max_ptm == 0.0
    assert groups[1].max_ptm_delta is None

def test_compare_reports_weights_rare_groups():
    """Test that logical channels are compared after weighting by group probability."""
    ptm = (np.eye(4),)
    shifted = (np.diag([1.0, 1.0 - 1e-3, 1.0 - 1e-3, 1.0]),)
    first = LogicalChannelReport(
        {"0": GroupChannel(1.0 - 1e-8, ptm), "1": GroupChannel(1e-8, ptm)}
    )
    second = LogicalChannelReport(
        {"0": GroupChannel(1.0 - 1e-8, ptm), "1": GroupChannel(1e-8, shifted)}
    )
    groups, max_prob, max_ptm = compare_reports(first, second)
    assert max_prob == 0.0
    assert max_ptm == pytest.approx(1e-11)
    assert groups[1].max_ptm_delta == pytest.approx(1e-11)
