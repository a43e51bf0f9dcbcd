"""Weighted mixtures of sequence measures.

The mixture marginal is the prior-weighted sum of component marginals,

    mixture(x_1..x_n) = sum_k w_k * component_k(x_1..x_n),

computed by log-sum-exp over the components (linear-domain sums underflow at
long horizons).  This makes multiplicative dominance structural:

    mixture(x) >= w_k * component_k(x)  for every component k,

so the mixture never assigns zero probability where a positively-weighted
component assigns positive probability.  Mixture conditionals are computed as
marginal ratios (the defining identity), never by drifting incremental
updates.  A mixture is itself a SequenceMeasure.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .logdomain import NEG_INF, log_sum_exp
from .measures import SUM_TOL, SequenceMeasure, UndefinedConditionalError, as_symbols


class MixtureModel(SequenceMeasure):
    """Finite weighted family of candidate measures."""

    kind = "mixture"

    def __init__(self, components: Sequence[SequenceMeasure], weights):
        if len(components) == 0:
            raise ValueError("mixture needs at least one component")
        sizes = {c.alphabet.size for c in components}
        if len(sizes) != 1:
            raise ValueError(f"components disagree on alphabet size: {sorted(sizes)}")
        super().__init__(components[0].alphabet)
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(components),):
            raise ValueError("need exactly one weight per component")
        if (w <= 0).any():
            raise ValueError("all prior weights must be > 0")
        if abs(float(w.sum()) - 1.0) > SUM_TOL:
            raise ValueError(f"prior weights must sum to 1 within {SUM_TOL}, got {w.sum()!r}")
        self.components = tuple(components)
        self.weights = w
        self.log_weights = np.log(w)

    def __repr__(self):
        return f"MixtureModel({len(self.components)} components, N={self.alphabet.size})"

    def log_marginal(self, string) -> float:
        xs = as_symbols(string, self.alphabet)
        return log_sum_exp(self.log_weights + self._component_log_marginals(xs))

    def _component_log_marginals(self, xs) -> np.ndarray:
        return np.array([c.log_marginal(xs) for c in self.components])

    def _step_distribution(self, history):
        h = tuple(history)
        terms = self.log_weights + self._component_log_marginals(h)
        log_h = log_sum_exp(terms)
        if log_h == NEG_INF:
            raise UndefinedConditionalError(f"history {h} has zero probability under the mixture")
        out = np.empty(self.alphabet.size)
        for x in range(self.alphabet.size):
            out[x] = np.exp(log_sum_exp(self.log_weights + self._component_log_marginals(h + (x,))) - log_h)
        return out

    def posterior_weights(self, history) -> np.ndarray:
        """Per-component posterior mass w_k * component_k(h) / mixture(h).

        Diagnostic only; the engines never integrate these forward.
        """
        h = as_symbols(history, self.alphabet)
        terms = self.log_weights + self._component_log_marginals(h)
        log_h = log_sum_exp(terms)
        if log_h == NEG_INF:
            raise UndefinedConditionalError(f"history {h} has zero probability under the mixture")
        return np.exp(terms - log_h)
