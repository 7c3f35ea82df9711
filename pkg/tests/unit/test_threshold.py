"""Tests for threshold arithmetic."""
import sys
import os

# Add the parent directory to sys.path
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.abspath(os.path.join(current_dir, "../../"))
sys.path.insert(0, parent_dir)

import numpy as np
import pytest
from teleport_noise.core.schemas import ThresholdInputs
from teleport_noise.core.threshold import (
    pauli_probability_from_angle,
    theta_threshold,
    threshold_lower_bound,
    threshold_report,
)
from teleport_noise.utils.exceptions import DomainError

def test_lower_bound_for_square_lattice_graph():
    """Test the bound for a decoding graph of degree six."""
    assert threshold_lower_bound(6) == pytest.approx(0.01)
    assert threshold_lower_bound(2) == pytest.approx(0.25)

def test_threshold_angles():
    """Test threshold angles for the bound and a numeric threshold."""
    assert theta_threshold(0.01, 5) == pytest.approx(0.020034, abs=1e-6)
    assert theta_threshold(0.03, 5) == pytest.approx(0.0349, abs=1e-4)
    theta = theta_threshold(0.02, 5)
    assert pauli_probability_from_angle(theta, 5) == pytest.approx(0.02)

def test_domain_checks():
    """Test argument domains."""
    with pytest.raises(DomainError):
        threshold_lower_bound(1)
    with pytest.raises(DomainError):
        theta_threshold(1.5)
    with pytest.raises(DomainError):
        pauli_probability_from_angle(0.1, 0)

def test_threshold_report():
    """Test the report with and without a numeric threshold."""
    report = threshold_report(ThresholdInputs(B=6))
    assert set(report) == {"p_th_bound", "theta_bound"}
    report = threshold_report(ThresholdInputs(B=6, p_th_numeric=0.03))
    assert report["theta_numeric"] == pytest.approx(np.arcsin(np.sqrt(0.03)) / 5)
