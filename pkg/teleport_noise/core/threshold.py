"""Threshold arithmetic for a teleported surface code under e^{i theta Z} noise.

Combining the coherent errors of the spacetime locations a qubit passes through gives a Pauli Z
error with probability sin^2(n theta), so any Pauli threshold converts to a threshold angle.
"""
import numpy as np

from teleport_noise.core.schemas import ThresholdInputs
from teleport_noise.utils.exceptions import DomainError


def pauli_probability_from_angle(theta: float, n_locations: int = 5) -> float:
    if n_locations < 1:
        raise DomainError(f"n_locations must be >= 1, got {n_locations}")
    return float(np.sin(n_locations * theta) ** 2)


def threshold_lower_bound(B: int) -> float:
    """1 / [2 (B - 1)]^2 for a decoding graph with at most B neighbours per vertex."""
    if B < 2:
        raise DomainError(f"B must be >= 2, got {B}")
    return 1.0 / (2.0 * (B - 1)) ** 2


def theta_threshold(p_th: float, n_locations: int = 5) -> float:
    if not 0.0 <= p_th <= 1.0:
        raise DomainError(f"p_th must lie in [0, 1], got {p_th}")
    if n_locations < 1:
        raise DomainError(f"n_locations must be >= 1, got {n_locations}")
    return float(np.arcsin(np.sqrt(p_th)) / n_locations)


def threshold_report(inputs: ThresholdInputs) -> dict[str, float]:
    p_th = threshold_lower_bound(inputs.B)
    report = {"p_th_bound": p_th, "theta_bound": theta_threshold(p_th, inputs.n_locations)}
    if inputs.p_th_numeric is not None:
        report["p_th_numeric"] = inputs.p_th_numeric
        report["theta_numeric"] = theta_threshold(inputs.p_th_numeric, inputs.n_locations)
    return report
