"""Alternative (non-Bayes) prediction schemes.

Any causal rule mapping a history to an action qualifies.  The engines
evaluate their expected losses alongside the mixture and informed predictors
so the no-free-lunch certificates (no causal scheme beats the informed one;
none significantly beats the mixture one) can be checked against concrete
opponents.  Shipped: a constant action and past-majority vote.
"""
from __future__ import annotations

import numpy as np

from .losses import LossSpec, MatrixLoss


class PredictionScheme:
    label: str = "?"

    def actions(self, histories: np.ndarray, loss: LossSpec) -> np.ndarray:
        """Actions for a (K, t) batch of histories, typed to fit ``loss``."""
        raise NotImplementedError


class ConstantScheme(PredictionScheme):
    """Always play the same action (index for matrix losses, real otherwise)."""

    def __init__(self, action):
        self.action = action
        self.label = f"constant-{action}"

    def actions(self, histories, loss):
        k = histories.shape[0]
        if isinstance(loss, MatrixLoss):
            a = int(self.action)
            if not 0 <= a < loss.n_actions:
                raise ValueError(f"constant action {a} invalid for {loss!r}")
            return np.full(k, a, dtype=np.int64)
        a = float(self.action)
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"constant action {a} outside [0, 1]")
        return np.full(k, a)


class MajorityVoteScheme(PredictionScheme):
    """Predict the most frequent past symbol (lowest index on ties, 0 when
    the history is empty)."""

    label = "majority-vote"

    def __init__(self, alphabet_size: int = 2):
        self.alphabet_size = alphabet_size

    def actions(self, histories, loss):
        k, t = histories.shape
        if t == 0:
            votes = np.zeros(k, dtype=np.int64)
        else:
            counts = np.stack([(histories == s).sum(axis=1) for s in range(self.alphabet_size)])
            votes = np.argmax(counts, axis=0)
        if isinstance(loss, MatrixLoss):
            if self.alphabet_size > loss.n_actions:
                raise ValueError("majority vote needs one action per symbol")
            return votes
        return votes.astype(float)
