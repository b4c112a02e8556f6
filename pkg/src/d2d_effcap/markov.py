"""Rank-1 six-state transition structure of the D2D service process.

States are (mode, gate) pairs: s1 = direct-ON, s2 = direct-OFF, s3 = mC-ON,
s4 = mC-OFF, s5 = MC-ON, s6 = MC-OFF. ON means the block's instantaneous
capacity supports the fixed rate r. Because mode selection and fading are
drawn independently every block, all rows of the transition matrix are
identical and the chain has rank 1: the stationary law is the row itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import (
    LinkBudget,
    SystemParams,
    mean_snr_direct,
    mean_snr_two_hop,
    sir_outage_direct,
    sir_outage_two_hop,
)
from .errors import ClampWarning, DomainError
from .modeselect import DetectionProfile, hypothesis_distribution

STATE_NAMES = ("direct_on", "direct_off", "mc_on", "mc_off", "MC_on", "MC_off")


@dataclass(frozen=True)
class TransitionRow:
    """One row of the rank-1 transition matrix (= the stationary law)."""

    p: tuple
    scenario: str

    def __post_init__(self):
        if len(self.p) != 6:
            raise DomainError("a transition row has six states")
        if any(v < -1e-12 or v > 1.0 + 1e-12 for v in self.p):
            raise DomainError("state probabilities must lie in [0, 1]")
        if self.scenario not in ("overlay", "underlay"):
            raise DomainError("scenario must be 'overlay' or 'underlay'")

    @property
    def on_mass(self) -> tuple:
        return (self.p[0], self.p[2], self.p[4])

    @property
    def off_mass(self) -> tuple:
        return (self.p[1], self.p[3], self.p[5])


def gamma_req(params: SystemParams, r: float | None = None) -> float:
    """SNR threshold for ON blocks: 2^(r/B) - 1.

    Half-duplex relays carry r at half capacity, which is equivalent to a
    doubled rate in the threshold; that adjustment is applied per mode in
    the row builders, not here.
    """
    rate = params.rate_r if r is None else r
    if rate < 0:
        raise DomainError("rate must be nonnegative")
    return 2.0 ** (rate / params.bandwidth_B) - 1.0


def _mode_gamma_reqs(params: SystemParams, r: float | None = None) -> tuple:
    """Per-mode ON thresholds; relayed modes pay the half-duplex factor."""
    base = gamma_req(params, r)
    if params.duplex_mode == "half":
        rate = params.rate_r if r is None else r
        relay = 2.0 ** (2.0 * rate / params.bandwidth_B) - 1.0
    else:
        relay = base
    return (base, relay, relay)


def overlay_row(params: SystemParams, budget: LinkBudget,
                profile: DetectionProfile, weighting: str = "uniform") -> TransitionRow:
    """Row for the dedicated-resource (noise-limited) scenario.

    p_ON(mode i) = P(H_i) * exp(-gamma_req / E[gamma_i]) for exponential
    block SNR; p_OFF(mode i) carries the complementary outage mass.
    """
    weights = hypothesis_distribution(profile, weighting)
    means = (
        mean_snr_direct(params, budget),
        mean_snr_two_hop(params, budget, "mc"),
        mean_snr_two_hop(params, budget, "MC"),
    )
    reqs = _mode_gamma_reqs(params)
    p = []
    for w, mean, req in zip(weights, means, reqs):
        on = math.exp(-req / mean)
        p.extend((w * on, w * (1.0 - on)))
    return _normalized_row(p, "overlay", weighting)


def underlay_row(params: SystemParams, budget: LinkBudget,
                 profile: DetectionProfile, weighting: str = "uniform",
                 outage_mode: str = "exact") -> TransitionRow:
    """Row for the shared-resource (interference-limited) scenario.

    ON/OFF factors come from the SIR outage laws instead of the noise-only
    exponential tail.
    """
    weights = hypothesis_distribution(profile, weighting)
    reqs = _mode_gamma_reqs(params)
    outages = (
        sir_outage_direct(params, budget, reqs[0], mode=outage_mode),
        sir_outage_two_hop(params, budget, "mc", reqs[1], mode=outage_mode),
        sir_outage_two_hop(params, budget, "MC", reqs[2], mode=outage_mode),
    )
    p = []
    for w, out in zip(weights, outages):
        p.extend((w * (1.0 - out), w * out))
    return _normalized_row(p, "underlay", weighting)


def _normalized_row(p: list, scenario: str, weighting: str) -> TransitionRow:
    total = sum(p)
    if weighting == "uniform":
        # Uniform-prior weights make the row exact; don't touch it.
        return TransitionRow(p=tuple(p), scenario=scenario)
    if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-9):
        warnings.warn(
            f"{scenario} row mass {total:.6g} != 1 under {weighting!r} weighting; renormalized",
            ClampWarning,
            stacklevel=3,
        )
        p = [v / total for v in p]
    return TransitionRow(p=tuple(p), scenario=scenario)


def transition_matrix(row: TransitionRow) -> np.ndarray:
    """The full 6x6 matrix: six identical rows (rank 1, row-stochastic)."""
    return np.tile(np.asarray(row.p, dtype=float), (6, 1))


def stationary_distribution(row: TransitionRow) -> np.ndarray:
    """Stationary law of the rank-1 chain: the row itself."""
    return np.asarray(row.p, dtype=float)


if __name__ == "__main__":
    from .modeselect import map_to_hypotheses

    params = SystemParams()
    budget = LinkBudget.from_db(
        L_d=81.0, L_mc_ul=82.2, L_mc_dl=86.9, L_MC_ul=85.8, L_MC_dl=93.5,
        L_ut_dr=111.0, L_ut_mc=112.2, L_ut_MC=115.8,
    )
    profile = map_to_hypotheses((81.0, 84.0, 87.0), sigma=1.0)
    for build in (overlay_row, underlay_row):
        row = build(params, budget, profile)
        print(row.scenario, [f"{v:.5f}" for v in row.p], "sum", sum(row.p))
