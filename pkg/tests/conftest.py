"""Shared fixtures: the default experiment profile at reduced sample sizes.

Session scope keeps the fading-pool construction out of every test; the
sizes here are large enough for the deterministic oracles yet small enough
that the whole unit suite stays fast. The acceptance tests build their own
full-size inputs.
"""

import pytest

from d2d_effcap.config import load_config
from d2d_effcap.harq import ZetaPools, build_decoding_profile
from d2d_effcap.markov import overlay_row, underlay_row
from d2d_effcap.modeselect import map_to_hypotheses
from d2d_effcap.montecarlo import detection_triple_db

UNIT_MC_SAMPLES = 20_000
UNIT_SEED = 1234


@pytest.fixture(autouse=True)
def _no_env_overrides(monkeypatch):
    """Keep ambient D2D_EFFCAP_* variables out of every test."""
    import os

    for name in list(os.environ):
        if name.startswith("D2D_EFFCAP_"):
            monkeypatch.delenv(name)


@pytest.fixture(scope="session")
def default_cfg():
    return load_config(env={})


@pytest.fixture(scope="session")
def params(default_cfg):
    return default_cfg.params


@pytest.fixture(scope="session")
def budget(default_cfg):
    return default_cfg.budget


@pytest.fixture(scope="session")
def detection(params, budget):
    return map_to_hypotheses(detection_triple_db(budget), 1.0)


@pytest.fixture(scope="session")
def markov_rows(params, budget, detection):
    return (
        overlay_row(params, budget, detection),
        underlay_row(params, budget, detection),
    )


@pytest.fixture(scope="session")
def profile(params, budget):
    return build_decoding_profile(params, budget, UNIT_MC_SAMPLES, UNIT_SEED)


@pytest.fixture(scope="session")
def pools(params, budget):
    return ZetaPools(params, budget, UNIT_MC_SAMPLES, UNIT_SEED)
