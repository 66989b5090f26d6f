"""
Scripted environments for desk-scale runs
A seeded vector state nudged by the payload deltas of emitted actions
"""

import logging
from typing import Any, List, Protocol, Sequence, Tuple

import numpy as np

from authority.proposals import ActionProposal

logger = logging.getLogger(__name__)


class EnvironmentHook(Protocol):
    def observe(self, t: int) -> np.ndarray: ...

    def apply(self, actions: Sequence[ActionProposal], t: int) -> None: ...


def payload_delta(payload: Any, dim: int) -> np.ndarray:
    """Sum of every "delta" found in a payload, descending into composite member records"""
    total = np.zeros(dim)
    if isinstance(payload, dict):
        if "delta" in payload:
            delta = np.asarray(payload["delta"], dtype=float)
            if delta.shape == (dim,):
                total = total + delta
            else:
                logger.warning(f"Ignoring delta of shape {delta.shape}, environment has dim {dim}")
        if "payload" in payload:
            total = total + payload_delta(payload["payload"], dim)
    elif isinstance(payload, list):
        for item in payload:
            total = total + payload_delta(item, dim)
    return total


class ScriptedEnvironment:
    """
    Noisy observations of a hidden state; actions add their deltas.

    All randomness comes from one generator seeded at construction: the
    initial state, then one noise draw per observation.
    """

    def __init__(self, seed: int = 42, dim: int = 4, noise: float = 0.01):
        self.dim = dim
        self.noise = noise
        self.rng = np.random.default_rng(seed)
        self.state = self.rng.uniform(-1.0, 1.0, dim)
        self.trajectory: List[np.ndarray] = [self.state.copy()]
        self.history: List[Tuple[int, str]] = []

    def observe(self, t: int) -> np.ndarray:
        return self.state + self.rng.normal(0.0, self.noise, self.dim)

    def apply(self, actions: Sequence[ActionProposal], t: int) -> None:
        for action in actions:
            delta = payload_delta(action.payload, self.dim)
            self.state = self.state + delta
            self.history.append((t, action.id))
        self.trajectory.append(self.state.copy())
