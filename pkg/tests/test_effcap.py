"""Spectral radius and effective capacity forms."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from d2d_effcap.channel import SystemParams
from d2d_effcap.effcap import (
    ec_generic,
    ec_harq,
    ec_truncated_n1,
    ec_truncated_n2,
    perron_root,
)
from d2d_effcap.errors import DegenerateError, DomainError, ModelWarning
from d2d_effcap.harq import CompanionSpec, DecodingProfile
from d2d_effcap.markov import TransitionRow


def _spec(b, qm="n1"):
    return CompanionSpec(b=tuple(b), queue_model=qm, M=len(b), diagnostics={})


def test_perron_root_pinned_examples():
    assert abs(perron_root(_spec((1.0, 0.0))) - 1.0) <= 1e-10
    assert abs(perron_root(_spec((0.5, 0.25))) - 0.8090169943749475) <= 1e-10


def test_perron_root_single_coefficient_is_identity():
    for b1 in (0.2, 0.7, 1.3):
        assert abs(perron_root(_spec((b1,))) - b1) <= 1e-10 * b1


def test_perron_root_rejects_zero_polynomial():
    with pytest.raises(DegenerateError):
        perron_root(_spec((0.0, 0.0)))


def test_perron_root_records_diagnostics():
    spec = _spec((0.5, 0.25))
    perron_root(spec)
    info = spec.diagnostics["root_finder"]
    assert abs(info["residual"]) <= 1e-12
    assert info["bracket"] == (0.0, 1.5)


@given(st.lists(st.floats(min_value=0.0, max_value=2.0), min_size=1, max_size=5)
       .filter(lambda b: max(b) > 1e-6))
def test_perron_root_solves_characteristic_polynomial(b):
    spec = _spec(b)
    lam = perron_root(spec)
    assert 0.0 < lam <= 1.0 + max(b)
    acc = sum(v / lam ** (k + 1) for k, v in enumerate(b))
    assert abs(1.0 - acc) <= 1e-9


def test_ec_harq_fills_spec_and_scales():
    spec = _spec((0.5, 0.25))
    res = ec_harq(spec, theta=0.01, block_len_l=100)
    assert spec.lambda_plus == res.lambda_plus
    assert abs(res.ec - (-math.log(res.lambda_plus) / 0.01)) <= 1e-12 * abs(res.ec)
    assert abs(res.ec_per_use - res.ec / 100.0) <= 1e-15
    with pytest.raises(DomainError):
        ec_harq(_spec((0.5,)), theta=0.0)


def test_ec_can_be_negative_when_mass_exceeds_one():
    res = ec_harq(_spec((0.5, 0.9)), theta=0.05)
    assert res.lambda_plus > 1.0
    assert res.ec < 0.0


def _random_case(rng):
    def curve():
        z1 = float(rng.uniform(0.05, 0.95))
        return (z1, z1 * float(rng.uniform(0.05, 0.95)))

    prof = DecodingProfile(
        zeta_overlay=(curve(), curve(), curve()),
        zeta_underlay=(curve(), curve(), curve()),
        mc_samples=10_000,
        seed=0,
    )
    rows = (
        TransitionRow(p=tuple(rng.dirichlet(np.ones(6))), scenario="overlay"),
        TransitionRow(p=tuple(rng.dirichlet(np.ones(6))), scenario="underlay"),
    )
    params = SystemParams(
        block_len_l=int(rng.integers(50, 400)),
        rate_r=float(rng.uniform(0.2, 5.0)),
        qos_theta=float(rng.uniform(1e-3, 0.5)),
    )
    return params, rows, prof


def test_closed_forms_match_companion_root_randomized():
    """Both M=2 closed-form roots must agree with the bisection root."""
    rng = np.random.default_rng(2024)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModelWarning)
        for _ in range(10):
            params, rows, prof = _random_case(rng)
            for qm, closed in (("n1", ec_truncated_n1), ("n2", ec_truncated_n2)):
                generic = ec_generic(params, rows, prof, qm)
                direct = closed(params, rows, prof)
                rel = abs(direct.lambda_plus - generic.lambda_plus) / generic.lambda_plus
                assert rel <= 1e-10


def test_closed_forms_require_two_attempts(markov_rows, params):
    prof = DecodingProfile(
        zeta_overlay=((0.3,), (0.2,), (0.1,)),
        zeta_underlay=((0.4,), (0.35,), (0.25,)),
        mc_samples=10_000, seed=0,
    )
    one = SystemParams(max_tx_M=1)
    with pytest.raises(DomainError):
        ec_truncated_n1(one, markov_rows, prof)
    with pytest.raises(DomainError):
        ec_truncated_n2(one, markov_rows, prof)


def test_n2_printed_variant_differs_when_off_mass_present():
    """The alternative pairing that leaves the OFF mass outside the factor 4
    is reported for comparison; with nonzero OFF mass it must differ from
    the actual root."""
    rng = np.random.default_rng(7)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModelWarning)
        params, rows, prof = _random_case(rng)
        res = ec_truncated_n2(params, rows, prof)
    variant = res.diagnostics["variant_printed"]
    assert res.diagnostics["p_o_off"] > 0.0
    assert abs(variant - res.lambda_plus) > 1e-12


def test_generic_pipeline_on_default_profile(params, markov_rows, profile):
    res_n1 = ec_generic(params, markov_rows, profile, "n1")
    res_n2 = ec_generic(params, markov_rows, profile, "n2")
    # Sanity scale: below the saturation ceiling l*r, positive at defaults.
    assert 0.0 < res_n1.ec < params.block_len_l * params.rate_r
    assert 0.0 < res_n2.ec < params.block_len_l * params.rate_r
    # Dropping a timed-out packet can only help the delivered-bit process.
    assert res_n2.ec >= res_n1.ec - 1e-9
