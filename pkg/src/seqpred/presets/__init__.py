"""Shipped experiment presets.

Each preset is a complete JSON experiment config.  Documented choices:

* collapse            -- two point-mass coin components; the posterior
                         collapses after one symbol, making the cumulative-KL
                         bound tight (equality witness).
* three-bernoulli     -- three coins, uniform prior, biased truth; the
                         workhorse for the distance and regret bounds.
* markov-binary       -- order-1 chains plus a fair coin.  Chains have no
                         canonical start; these presets draw the first symbol
                         from an explicit initial distribution.
* three-symbol        -- two order-1 chains over three symbols, matrix losses.
* four-symbol         -- an order-1 chain vs the uniform i.i.d. measure over
                         four symbols, with an affinely-rescaled ladder loss.
* deterministic-plateau -- deterministic truth against a fair coin under a
                         zero-diagonal loss: total mixture loss stays finite.
* counterexample      -- the time-varying pair whose off-symbol conditional
                         ratio grows linearly even on a typical path.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

PRESET_NAMES = (
    "collapse",
    "three-bernoulli",
    "markov-binary",
    "three-symbol",
    "four-symbol",
    "deterministic-plateau",
    "counterexample",
)


def preset_path(name: str) -> Path:
    if name not in PRESET_NAMES:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    return Path(str(resources.files(__name__).joinpath(f"{name}.json")))


def load_preset_dict(name: str) -> dict:
    return json.loads(preset_path(name).read_text())


def load_preset(name: str):
    """Parse a shipped preset into a runnable ExperimentConfig."""
    from ..config import parse_config

    return parse_config(load_preset_dict(name))
