"""Channel layer: conversions, mean SNR laws, SIR outage laws."""

import math

import pytest
from hypothesis import given, strategies as st

from d2d_effcap.channel import (
    LinkBudget,
    SystemParams,
    capacity_direct,
    capacity_two_hop,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    mean_snr_direct,
    mean_snr_two_hop,
    pathloss_db,
    sir_outage_direct,
    sir_outage_two_hop,
)
from d2d_effcap.errors import ClampWarning, DomainError


def test_db_round_trip():
    for v in (0.001, 1.0, 37.5, 1e9):
        assert abs(db_to_linear(linear_to_db(v)) - v) <= 1e-12 * v


def test_dbm_reference_points():
    assert abs(dbm_to_watts(0.0) - 1e-3) <= 1e-18
    assert abs(dbm_to_watts(30.0) - 1.0) <= 1e-15
    assert abs(dbm_to_watts(27.0) - 0.5011872336272725) <= 1e-15


def test_pathloss_law():
    # 128.1 + 37.6 log10(d); one decade adds exactly 37.6 dB.
    assert abs(pathloss_db(0.1) - 90.5) <= 1e-12
    assert abs(pathloss_db(1.0) - 128.1) <= 1e-12
    assert abs(pathloss_db(0.056) - 81.03186981543314) <= 1e-10


def test_pathloss_rejects_nonpositive_distance():
    with pytest.raises(DomainError):
        pathloss_db(0.0)


def test_default_power_profile():
    p = SystemParams()
    assert abs(p.p_dt - dbm_to_watts(27.0)) == 0.0
    assert abs(p.p_mc - dbm_to_watts(37.0)) == 0.0
    assert abs(p.p_MC - dbm_to_watts(47.0)) == 0.0


def test_params_validation():
    with pytest.raises(DomainError):
        SystemParams(rate_r=0.0)
    with pytest.raises(DomainError):
        SystemParams(qos_theta=-1.0)
    with pytest.raises(DomainError):
        SystemParams(si_beta=1.5)
    with pytest.raises(DomainError):
        SystemParams(duplex_mode="simplex")


def test_mean_snr_frozen_values(params, budget):
    # Independent recomputation of the default-geometry means.
    assert abs(mean_snr_direct(params, budget) - 3951.9643520044406) <= 1e-6
    assert abs(mean_snr_two_hop(params, budget, "mc") - 2354.471612530987) <= 1e-6
    assert abs(mean_snr_two_hop(params, budget, "MC") - 1244.687279852083) <= 1e-6


def test_two_hop_mean_is_harmonic_combination(params, budget):
    """E[min(X,Y)] for independent exponentials is ul*dl/(ul+dl)."""
    from dataclasses import replace

    noiseless = replace(params, si_alpha=0.0)
    ul = params.p_dt / (budget.L_mc_ul * params.noise_N0)
    dl = params.p_mc / (budget.L_mc_dl * params.noise_N0)
    expect = ul * dl / (ul + dl)
    got = mean_snr_two_hop(noiseless, budget, "mc")
    assert abs(got - expect) <= 1e-9 * expect


def test_self_interference_reduces_uplink_only_when_full_duplex(params, budget):
    from dataclasses import replace

    fd = replace(params, si_alpha=1e-4, si_beta=1.0, duplex_mode="full")
    hd = replace(params, si_alpha=1e-4, si_beta=1.0, duplex_mode="half")
    clean = replace(params, si_alpha=0.0)
    assert mean_snr_two_hop(fd, budget, "mc") < mean_snr_two_hop(clean, budget, "mc")
    assert (
        abs(mean_snr_two_hop(hd, budget, "mc") - mean_snr_two_hop(clean, budget, "mc"))
        <= 1e-9 * mean_snr_two_hop(clean, budget, "mc")
    )


def test_capacity_forms(params):
    assert abs(capacity_direct(params, 1.0) - 1.0) <= 1e-12
    # Two-hop rate is pinned by the weaker hop.
    c = capacity_two_hop(params, 3.0, 1.0)
    assert abs(c - 1.0) <= 1e-12
    from dataclasses import replace

    half = replace(params, duplex_mode="half")
    assert abs(capacity_two_hop(half, 3.0, 1.0) - 0.5) <= 1e-12


def test_direct_outage_exact_frozen(params, budget):
    got = sir_outage_direct(params, budget, 1.0)
    assert abs(got - 0.0007611795504708363) <= 1e-12


def test_two_hop_outage_exact_frozen(params, budget):
    got = sir_outage_two_hop(params, budget, "mc", 1.0)
    assert abs(got - 0.0012772619479608505) <= 1e-12


def test_two_hop_outage_combines_independent_hops(params, budget):
    f = sir_outage_two_hop(params, budget, "MC", 2.0)
    # Reconstruct from the single-hop ratio laws.
    r_ul_sig = params.p_dt / budget.L_MC_ul
    r_ul_int = params.p_ut / budget.L_ut_MC
    r_dl_sig = params.p_MC / budget.L_MC_dl
    r_dl_int = params.p_ut / budget.L_ut_dr
    f_ul = 1.0 - r_ul_sig / (r_ul_sig + 2.0 * r_ul_int)
    f_dl = 1.0 - r_dl_sig / (r_dl_sig + 2.0 * r_dl_int)
    expect = 1.0 - (1.0 - f_ul) * (1.0 - f_dl)
    assert abs(f - expect) <= 1e-12


def test_outage_zero_threshold_is_zero(params, budget):
    assert sir_outage_direct(params, budget, 0.0) == 0.0
    assert sir_outage_two_hop(params, budget, "mc", 0.0) == 0.0


def test_paper_outage_mode_clamps(params, budget):
    """The verbatim simplification can leave [0, 1]; it must clamp loudly."""
    with pytest.warns(ClampWarning):
        v = sir_outage_two_hop(params, budget, "mc", 500.0, mode="paper")
    assert 0.0 <= v <= 1.0


@given(st.floats(min_value=0.0, max_value=1e4))
def test_outage_is_a_probability(g):
    params = SystemParams()
    budget = LinkBudget.from_db(
        L_d=81.0, L_mc_ul=82.2, L_mc_dl=86.9, L_MC_ul=85.8, L_MC_dl=93.5,
        L_ut_dr=111.0, L_ut_mc=112.2, L_ut_MC=115.8,
    )
    v = sir_outage_direct(params, budget, g)
    w = sir_outage_two_hop(params, budget, "MC", g)
    assert 0.0 <= v <= 1.0
    assert 0.0 <= w <= 1.0


@given(st.floats(min_value=1e-3, max_value=100.0),
       st.floats(min_value=1.01, max_value=10.0))
def test_outage_monotone_in_threshold(g, factor):
    params = SystemParams()
    budget = LinkBudget.from_db(
        L_d=81.0, L_mc_ul=82.2, L_mc_dl=86.9, L_MC_ul=85.8, L_MC_dl=93.5,
        L_ut_dr=111.0, L_ut_mc=112.2, L_ut_MC=115.8,
    )
    assert sir_outage_direct(params, budget, g) <= sir_outage_direct(
        params, budget, g * factor
    )
