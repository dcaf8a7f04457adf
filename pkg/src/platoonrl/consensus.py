"""Linear distributed consensus controller used as the comparison baseline.

The control law sums, over all neighbors, a fixed gain row applied to the
(position, speed, acceleration) error. The spacing offset passed with each
neighbor is the desired value of own-minus-neighbor position, so for a
predecessor sitting one gap ahead the offset is negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import LinearState


@dataclass(frozen=True)
class ConsensusGains:
    """Gain row applied to the per-neighbor state error."""

    k_p: float = 1.0
    k_v: float = 2.0
    k_a: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.k_p, self.k_v, self.k_a])


def _state_vec(s: LinearState) -> np.ndarray:
    return np.array([s.position, s.speed, s.acceleration])


def consensus_control(own: LinearState, neighbors, gains: ConsensusGains) -> float:
    """Acceleration command u = -sum_j K . (x_i - x_j - [offset_j, 0, 0]).

    `neighbors` is a non-empty list of (LinearState, desired position offset)
    pairs, the offset being the desired own-minus-neighbor position.
    """
    if not neighbors:
        raise ValueError("consensus_control needs at least one neighbor")
    k = gains.as_array()
    own_v = _state_vec(own)
    u = 0.0
    for state_j, offset in neighbors:
        err = own_v - _state_vec(state_j)
        err[0] -= offset
        u -= float(k @ err)
    return u


def mean_form_decomposition(own: LinearState, neighbors,
                            gains: ConsensusGains) -> tuple[float, float]:
    """Split the consensus command into an average-neighbor term and the
    residue left over, so mean_term + residue equals consensus_control."""
    if not neighbors:
        raise ValueError("mean_form_decomposition needs at least one neighbor")
    k = gains.as_array()
    own_v = _state_vec(own)
    acc = 0.0
    for state_j, offset in neighbors:
        shifted = _state_vec(state_j)
        shifted[0] += offset
        acc += float(k @ shifted)
    mean_term = -float(k @ own_v) + acc / len(neighbors)
    residue = consensus_control(own, neighbors, gains) - mean_term
    return mean_term, residue
