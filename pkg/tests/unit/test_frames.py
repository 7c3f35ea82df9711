"""Tests for Pauli frames."""
import sys
import os

# Add the parent directory to sys.path
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.abspath(os.path.join(current_dir, "../../"))
sys.path.insert(0, parent_dir)

import numpy as np
import pytest
from teleport_noise.core.chain import frame_after, frame_joint_distribution, frame_marginal
from teleport_noise.core.frames import ALL_FRAMES, IDENTITY_FRAME, PauliFrame
from teleport_noise.utils.exceptions import DomainError

def test_index_round_trip():
    """Test that every frame index maps back to itself."""
    assert len(set(ALL_FRAMES)) == 8
    for index in range(8):
        assert PauliFrame.from_index(index).index == index

def test_labels():
    """Test frame labels."""
    assert IDENTITY_FRAME.label == "I"
    assert PauliFrame(hadamard=True).label == "H"
    assert PauliFrame(hadamard=True, x=1, z=1).label == "HY"
    assert PauliFrame.from_label("HZ") == PauliFrame(True, 0, 1)
    with pytest.raises(DomainError):
        PauliFrame.from_label("Q")

def test_advance_toggles_hadamard():
    """Test that an unmarked frame gains Z and a marked frame gains X."""
    assert IDENTITY_FRAME.advance(1) == PauliFrame(True, 0, 1)
    assert PauliFrame(True, 0, 0).advance(1) == PauliFrame(False, 1, 0)
    assert frame_after([1, 1]) == PauliFrame(False, 1, 1)
    with pytest.raises(DomainError):
        IDENTITY_FRAME.advance(2)

def test_frame_ptm_is_signed_permutation():
    """Test that frame PTMs are orthogonal signed permutations."""
    for frame in ALL_FRAMES:
        r = frame.signed_permutation()
        np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-14)
        assert set(np.round(np.abs(r), 12).ravel()) <= {0.0, 1.0}

def test_frame_marginal_after_two_steps():
    """Test that two teleportations give a uniform Pauli frame without Hadamard."""
    first = frame_marginal(1)
    assert first == {PauliFrame(True, 0, 0): 0.5, PauliFrame(True, 0, 1): 0.5}
    second = frame_marginal(2)
    assert len(second) == 4
    assert all(not frame.hadamard for frame in second)
    assert all(p == pytest.approx(0.25) for p in second.values())

def test_joint_distribution_marginalizes():
    """Test that the joint frame law sums to the single-time marginal."""
    joint = frame_joint_distribution(2, 5)
    marginal = frame_marginal(5)
    for frame, p in marginal.items():
        total = sum(q for (_, later), q in joint.items() if later == frame)
        assert total == pytest.approx(p)
    assert sum(joint.values()) == pytest.approx(1.0)

def test_worked_example_frames():
    """Test the frame after three outcomes and the three-step marginal."""
    assert frame_after([]) == IDENTITY_FRAME
    assert frame_after([1, 1, 0]).label == "HY"
    third = frame_marginal(3)
    assert {frame.label for frame in third} == {"H", "HX", "HY", "HZ"}
    assert all(p == pytest.approx(0.25) for p in third.values())
