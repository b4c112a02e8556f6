"""Pathloss, fading, SNR/SIR laws, and instantaneous capacities.

Covers the three communication modes of the link (direct device-to-device,
micro-cell relayed, macro-cell relayed) in both overlay (noise-limited) and
underlay (interference-limited) settings, for full- and half-duplex relays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ClampWarning, DomainError

LOG2E = math.log2(math.e)

# Urban macro pathloss model: 128.1 + 37.6 log10(d/km), d in km (3GPP TR 36.814).
PATHLOSS_INTERCEPT_DB = 128.1
PATHLOSS_SLOPE_DB = 37.6


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0:
        raise DomainError("linear value must be positive")
    return 10.0 * math.log10(value)


def dbm_to_watts(value_dbm: float) -> float:
    return 10.0 ** (value_dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class SystemParams:
    """System-level constants.

    Powers are in watts (convert dBm at the configuration boundary, not
    here); the class defaults are the 27/37/47 dBm transmit profile with a
    27 dBm interfering user. `rate_r` is bits per channel use, `qos_theta`
    is the QoS exponent in 1/bits, `block_len_l` the number of channel uses
    per block, `max_tx_M` the HARQ attempt budget per packet.
    """

    bandwidth_B: float = 1.0
    noise_N0: float = 1e-12
    p_dt: float = dbm_to_watts(27.0)
    p_mc: float = dbm_to_watts(37.0)
    p_MC: float = dbm_to_watts(47.0)
    p_ut: float = dbm_to_watts(27.0)
    si_alpha: float = 0.0
    si_beta: float = 0.5
    block_len_l: int = 100
    rate_r: float = 0.5
    qos_theta: float = 0.01
    max_tx_M: int = 2
    duplex_mode: str = "full"

    def __post_init__(self):
        for name in ("bandwidth_B", "noise_N0", "p_dt", "p_mc", "p_MC", "p_ut"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be strictly positive")
        if self.si_alpha < 0:
            raise DomainError("si_alpha must be nonnegative")
        if not 0.0 <= self.si_beta <= 1.0:
            raise DomainError("si_beta must lie in [0, 1]")
        if self.block_len_l < 1:
            raise DomainError("block_len_l must be >= 1")
        if self.max_tx_M < 1:
            raise DomainError("max_tx_M must be >= 1")
        if self.qos_theta <= 0:
            raise DomainError("qos_theta must be > 0")
        if self.rate_r <= 0:
            raise DomainError("rate_r must be > 0")
        if self.duplex_mode not in ("full", "half"):
            raise DomainError("duplex_mode must be 'full' or 'half'")


@dataclass(frozen=True)
class LinkBudget:
    """Linear-scale pathlosses for every link in the geometry.

    `L_d`: transmitter to receiver (direct). `L_mc_ul`/`L_mc_dl`: up/downlink
    through the micro BS. `L_MC_ul`/`L_MC_dl`: same through the macro BS.
    `L_ut_dr`, `L_ut_mc`, `L_ut_MC`: interfering cellular user to the D2D
    receiver, the micro BS, and the macro BS.
    """

    L_d: float
    L_mc_ul: float
    L_mc_dl: float
    L_MC_ul: float
    L_MC_dl: float
    L_ut_dr: float
    L_ut_mc: float
    L_ut_MC: float

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be strictly positive (linear scale)")

    @classmethod
    def from_db(cls, **kwargs_db: float) -> "LinkBudget":
        """Build from dB values (same field names)."""
        return cls(**{k: db_to_linear(v) for k, v in kwargs_db.items()})


@dataclass(frozen=True)
class FadingDraw:
    """A block's exponential(1) channel power gain with its stream identity."""

    z: float
    stream: str = ""

    def __post_init__(self):
        if self.z < 0:
            raise DomainError("channel power gain must be nonnegative")


def pathloss_db(distance_km: float) -> float:
    """Urban pathloss in dB at a distance in kilometres.

    Raises
    ------
    DomainError
        If the distance is not strictly positive.
    """
    if distance_km <= 0:
        raise DomainError("distance must be strictly positive")
    return PATHLOSS_INTERCEPT_DB + PATHLOSS_SLOPE_DB * math.log10(distance_km)


def mean_snr_direct(params: SystemParams, budget: LinkBudget) -> float:
    """Mean SNR of the direct link: P_dt / (L_d * N0)."""
    return params.p_dt / (budget.L_d * params.noise_N0)


def _uplink_mean_snr(params: SystemParams, l_ul: float, p_bs: float) -> float:
    # Residual self-interference at the full-duplex BS, normalized by the
    # uplink's noise floor: alpha_bar = alpha / (L_ul * N0). The signal term
    # carries the same normalization so that zero SI reduces to the plain
    # mean SNR P_dt / (L_ul * N0). A half-duplex BS never transmits while
    # receiving, so it pays no SI penalty (it pays the rate penalty instead).
    signal = params.p_dt / (l_ul * params.noise_N0)
    if params.duplex_mode == "half":
        return signal
    alpha_bar = params.si_alpha / (l_ul * params.noise_N0)
    return signal / (1.0 + alpha_bar * p_bs**params.si_beta)


def mean_snr_two_hop(params: SystemParams, budget: LinkBudget, tier: str) -> float:
    """Mean end-to-end SNR of a relayed mode.

    The block SNR is min(uplink, downlink); for exponential fading the mean
    of the minimum is the harmonic combination a*b/(a+b) of the two hop
    means. The uplink mean includes the residual self-interference penalty
    1 + alpha_bar * P_bs^beta of the full-duplex base station.
    """
    if tier == "mc":
        l_ul, l_dl, p_bs = budget.L_mc_ul, budget.L_mc_dl, params.p_mc
    elif tier == "MC":
        l_ul, l_dl, p_bs = budget.L_MC_ul, budget.L_MC_dl, params.p_MC
    else:
        raise DomainError(f"unknown tier {tier!r} (expected 'mc' or 'MC')")
    mean_ul = _uplink_mean_snr(params, l_ul, p_bs)
    mean_dl = p_bs / (l_dl * params.noise_N0)
    return mean_ul * mean_dl / (mean_ul + mean_dl)


def capacity_direct(params: SystemParams, snr) -> float:
    """Shannon capacity B*log2(1+snr) of the direct link."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise DomainError("snr must be nonnegative")
    out = params.bandwidth_B * np.log2(1.0 + snr)
    return float(out) if out.ndim == 0 else out

def capacity_two_hop(params: SystemParams, snr_ul, snr_dl) -> float:
    """Two-hop capacity B*log2(1+min(ul, dl)), halved in half-duplex mode."""
    snr_ul = np.asarray(snr_ul, dtype=float)
    snr_dl = np.asarray(snr_dl, dtype=float)
    if np.any(snr_ul < 0) or np.any(snr_dl < 0):
        raise DomainError("snr must be nonnegative")
    cap = params.bandwidth_B * np.log2(1.0 + np.minimum(snr_ul, snr_dl))
    if params.duplex_mode == "half":
        cap = 0.5 * cap
    return float(cap) if cap.ndim == 0 else cap


def _ratio_outage_exact(rate_sig: float, rate_int: float, gamma_req: float) -> float:
    # P(X/Y < g) for X ~ Exp(rate_sig), Y ~ Exp(rate_int):
    # integrate the joint density -> rate_sig*g / (rate_sig*g + rate_int).
    if gamma_req <= 0:
        return 0.0
    return rate_sig * gamma_req / (rate_sig * gamma_req + rate_int)


def _clamp_unit(value: float, label: str) -> float:
    if 0.0 <= value <= 1.0:
        return value
    clamped = min(max(value, 0.0), 1.0)
    warnings.warn(
        f"{label} evaluated to {value:.6g}, outside [0, 1]; clamped to {clamped:.0f}",
        ClampWarning,
        stacklevel=3,
    )
    return clamped


def sir_outage_direct(
    params: SystemParams, budget: LinkBudget, gamma_req: float, mode: str = "exact"
) -> float:
    """Underlay outage P(SIR < gamma_req) for the direct mode.

    `exact` evaluates the ratio-of-exponentials law with signal rate
    L_d/P_dt and interference rate L_ut_dr/P_ut. `paper` evaluates the
    literal simplified fraction kept for reproduction; it can leave [0, 1]
    for aggressive gamma_req and is then clamped with a ClampWarning.
    """
    if gamma_req < 0:
        raise DomainError("gamma_req must be nonnegative")
    if mode == "exact":
        return _ratio_outage_exact(
            budget.L_d / params.p_dt, budget.L_ut_dr / params.p_ut, gamma_req
        )
    if mode == "paper":
        value = (budget.L_d * gamma_req * params.p_ut) / (
            budget.L_d * params.p_ut + budget.L_ut_dr * params.p_dt
        )
        return _clamp_unit(value, "direct SIR outage (paper mode)")
    raise DomainError(f"unknown outage mode {mode!r}")


def sir_outage_two_hop(
    params: SystemParams,
    budget: LinkBudget,
    tier: str,
    gamma_req: float,
    mode: str = "exact",
) -> float:
    """Underlay outage P(min(SIR_ul, SIR_dl) < gamma_req) for a relayed mode.

    `exact`: 1 - (1-F_ul)(1-F_dl) with each hop an independent
    ratio-of-exponentials law (uplink interferer hits the BS, downlink
    interferer hits the D2D receiver). `paper`: the literal single-fraction
    simplification kept for reproduction, clamped when out of range.
    """
    if gamma_req < 0:
        raise DomainError("gamma_req must be nonnegative")
    if tier == "mc":
        l_ul, l_dl, l_int_ul, p_bs = (
            budget.L_mc_ul,
            budget.L_mc_dl,
            budget.L_ut_mc,
            params.p_mc,
        )
    elif tier == "MC":
        l_ul, l_dl, l_int_ul, p_bs = (
            budget.L_MC_ul,
            budget.L_MC_dl,
            budget.L_ut_MC,
            params.p_MC,
        )
    else:
        raise DomainError(f"unknown tier {tier!r} (expected 'mc' or 'MC')")

    if mode == "exact":
        f_ul = _ratio_outage_exact(
            l_ul / params.p_dt, l_int_ul / params.p_ut, gamma_req
        )
        f_dl = _ratio_outage_exact(
            l_dl / p_bs, budget.L_ut_dr / params.p_ut, gamma_req
        )
        return 1.0 - (1.0 - f_ul) * (1.0 - f_dl)
    if mode == "paper":
        # Literal printed simplification, including its stray
        # (-gamma_req*P_ut + P_bs + 2*P_bs) numerator term. Kept verbatim
        # for reproduction; clamped when it leaves [0, 1].
        num = gamma_req * (
            l_ul * p_bs * (-gamma_req * params.p_ut + p_bs + 2.0 * p_bs)
            + l_dl * params.p_dt * params.p_ut
        )
        den = (params.p_ut + p_bs) * (l_dl * params.p_dt + l_ul * p_bs)
        return _clamp_unit(num / den, f"{tier} SIR outage (paper mode)")
    raise DomainError(f"unknown outage mode {mode!r}")


def sample_exponential(mean: float, size, rng: np.random.Generator):
    """Exponential channel power draws with the given mean (Rayleigh power)."""
    if mean < 0:
        raise DomainError("mean must be nonnegative")
    return rng.exponential(scale=mean, size=size) if mean > 0 else np.zeros(size)


if __name__ == "__main__":
    params = SystemParams()
    print("pathloss(0.1 km) =", pathloss_db(0.1), "dB")
    budget = LinkBudget.from_db(
        L_d=81.0, L_mc_ul=82.2, L_mc_dl=86.9, L_MC_ul=85.8, L_MC_dl=93.5,
        L_ut_dr=111.0, L_ut_mc=112.2, L_ut_MC=115.8,
    )
    print("mean direct SNR =", mean_snr_direct(params, budget))
    print("mean mc SNR =", mean_snr_two_hop(params, budget, "mc"))
    print("mean MC SNR =", mean_snr_two_hop(params, budget, "MC"))
    print("direct SIR outage @1 =", sir_outage_direct(params, budget, 1.0))
