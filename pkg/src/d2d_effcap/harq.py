"""Finite-blocklength decoding errors and companion-matrix coefficients.

A packet gets up to M transmission attempts. Every received ON block adds
mutual information; the probability that decoding still fails after m
accumulated blocks is the finite-blocklength Q-form `decoding_error_conditional`.
Averaging it over the fading law gives the per-attempt error curve
E_z[zeta_m], collected in a DecodingProfile. Those expectations, together
with a pair of six-state transition rows, produce the M coefficients of the
block-companion matrix whose spectral radius drives the effective capacity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import LOG2E, LinkBudget, SystemParams
from .errors import ConfigError, DomainError, ModelWarning
from .markov import TransitionRow
from .modeselect import q_function

MODES = ("direct", "mc", "MC")
SCENARIOS = ("overlay", "underlay")
QUEUE_MODELS = ("n1", "n2")

DEFAULT_MC_SAMPLES = 100_000
MIN_MC_SAMPLES = 10_000

# Seed-derivation namespaces, so independent Monte Carlo pools never share a
# stream even under the same user seed.
_NS_ZETA = 101


def _blocklength_correction(m: int, l: int) -> float:
    """The ln(m*l)/l rate back-off. Natural log, by design; the coding-rate
    formula carries its base-2 logs explicitly everywhere else."""
    return math.log(m * l) / l


def _zeta_from_sums(info_sum, disp_sum, l: int, m: int, r: float):
    """Decoding-failure probability given accumulated information and
    dispersion sums (vectorized).

    Zero dispersion means a deterministic channel: failure is certain iff
    the rate exceeds the blocklength correction term.
    """
    info_sum = np.asarray(info_sum, dtype=float)
    disp_sum = np.asarray(disp_sum, dtype=float)
    num = info_sum + (_blocklength_correction(m, l) - r)
    den = LOG2E * np.sqrt(disp_sum / l)
    degenerate = den == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = q_function(num / np.where(degenerate, 1.0, den))
    return np.where(degenerate, np.where(num >= 0.0, 0.0, 1.0), vals)


def decoding_error_conditional(gamma_trace, l: int, m: int, r: float,
                               weights=None) -> float:
    """Failure probability of decoding after m received blocks with the
    given SNR trace.

    `weights` are per-block time-share factors (1 for direct blocks, 1/2 for
    half-duplex relay blocks); they scale both the information and the
    dispersion contribution of their block.
    """
    if l < 1:
        raise DomainError("block length l must be >= 1")
    if m < 1:
        raise DomainError("attempt count m must be >= 1")
    if r < 0:
        raise DomainError("rate must be nonnegative")
    gamma = np.asarray(gamma_trace, dtype=float)
    if gamma.shape != (m,):
        raise DomainError(f"gamma_trace must hold exactly m={m} values")
    if np.any(gamma < 0):
        raise DomainError("SNR values must be nonnegative")
    if weights is None:
        w = np.ones(m)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (m,):
            raise DomainError("weights must match the trace length")
        if np.any((w <= 0) | (w > 1)):
            raise DomainError("weights must lie in (0, 1]")
    info = float(np.sum(w * np.log2(1.0 + gamma)))
    disp = float(np.sum(w * (2.0 + gamma) * gamma / (1.0 + gamma) ** 2))
    return float(_zeta_from_sums(info, disp, l, m, r))


def _mode_index(mode: str) -> int:
    try:
        return MODES.index(mode)
    except ValueError:
        raise DomainError(f"unknown mode {mode!r} (expected one of {MODES})") from None


def _scenario_index(scenario: str) -> int:
    try:
        return SCENARIOS.index(scenario)
    except ValueError:
        raise DomainError(
            f"unknown scenario {scenario!r} (expected one of {SCENARIOS})"
        ) from None


def _mode_draw_coeffs(params: SystemParams, budget: LinkBudget, mode: str):
    """Per-hop (signal, effective noise, interference) linear coefficients.

    The effective noise of a full-duplex uplink hop includes the residual
    self-interference alpha*P_bs^beta scaled consistently with the mean-SNR
    convention (the SI term rides inside the same 1/L_ul normalization).
    A block SNR draw is min over hops of sig*Z/(noise + intf*Z').
    """
    n0 = params.noise_N0
    if mode == "direct":
        hops = ((params.p_dt / budget.L_d, n0, params.p_ut / budget.L_ut_dr),)
        delta = 1.0
        return hops, delta
    if mode == "mc":
        l_ul, l_dl, l_int, p_bs = (
            budget.L_mc_ul, budget.L_mc_dl, budget.L_ut_mc, params.p_mc,
        )
    elif mode == "MC":
        l_ul, l_dl, l_int, p_bs = (
            budget.L_MC_ul, budget.L_MC_dl, budget.L_ut_MC, params.p_MC,
        )
    else:
        raise DomainError(f"unknown mode {mode!r}")
    if params.duplex_mode == "full":
        si = params.si_alpha * p_bs**params.si_beta / l_ul
        delta = 1.0
    else:
        si = 0.0
        delta = 0.5
    hops = (
        (params.p_dt / l_ul, n0 + si, params.p_ut / l_int),
        (p_bs / l_dl, n0, params.p_ut / budget.L_ut_dr),
    )
    return hops, delta


def _column_rng(seed: int, scenario: str, mode: str, column: int) -> np.random.Generator:
    entropy = (int(seed), _NS_ZETA, _scenario_index(scenario), _mode_index(mode), column)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _draw_block_snr(params: SystemParams, budget: LinkBudget, mode: str,
                    scenario: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. block SNR draws for one (mode, scenario). Draw order is fixed
    per hop: signal gain first, then (underlay only) interferer gain."""
    hops, _ = _mode_draw_coeffs(params, budget, mode)
    gamma = None
    for sig, noise, intf in hops:
        z = rng.exponential(1.0, n)
        if scenario == "underlay":
            zi = rng.exponential(1.0, n)
            hop = sig * z / (noise + intf * zi)
        else:
            hop = (sig / noise) * z
        gamma = hop if gamma is None else np.minimum(gamma, hop)
    return gamma


def _column_increments(params: SystemParams, budget: LinkBudget, mode: str,
                       scenario: str, n: int, seed: int, column: int):
    """(information, dispersion) per-sample contributions of trace block
    `column`, weighted by the mode's duplex time-share factor."""
    rng = _column_rng(seed, scenario, mode, column)
    gamma = _draw_block_snr(params, budget, mode, scenario, n, rng)
    _, delta = _mode_draw_coeffs(params, budget, mode)
    info = delta * np.log2(1.0 + gamma)
    disp = delta * (2.0 + gamma) * gamma / (1.0 + gamma) ** 2
    return info, disp


def expected_decoding_error(mode: str, attempt_m: int, params: SystemParams,
                            budget: LinkBudget, scenario: str,
                            mc_samples: int = DEFAULT_MC_SAMPLES,
                            seed: int = 0) -> float:
    """Monte Carlo estimate of E_z[zeta_m] for one mode under one scenario's
    fading law.

    Traces are nested across attempts (block j of every trace shares its
    draw pool), which keeps the estimated curve monotone in m and makes the
    estimates common-random-number stable across rate and QoS sweeps.
    """
    if attempt_m < 1:
        raise DomainError("attempt_m must be >= 1")
    _scenario_index(scenario)
    _mode_index(mode)
    if mc_samples < MIN_MC_SAMPLES:
        raise ConfigError(
            f"mc_samples={mc_samples} too small; need >= {MIN_MC_SAMPLES}"
        )
    info = np.zeros(mc_samples)
    disp = np.zeros(mc_samples)
    for col in range(attempt_m):
        inc_i, inc_d = _column_increments(
            params, budget, mode, scenario, mc_samples, seed, col
        )
        info += inc_i
        disp += inc_d
    zeta = _zeta_from_sums(
        info, disp, params.block_len_l, attempt_m, params.rate_r
    )
    return float(np.mean(zeta))


@dataclass(frozen=True)
class DecodingProfile:
    """Expected decoding-error curves per mode and scenario.

    `zeta_overlay`/`zeta_underlay` hold one tuple per mode (direct, mc, MC),
    each of length M. The outage probabilities eps_* are the overlay curves'
    last entries (error still present after all M attempts), so the identity
    eps_ac = eps_d + eps_mc + eps_MC holds by construction.
    """

    zeta_overlay: tuple
    zeta_underlay: tuple
    mc_samples: int
    seed: int

    def __post_init__(self):
        for table in (self.zeta_overlay, self.zeta_underlay):
            if len(table) != 3:
                raise DomainError("zeta tables need one row per mode")
            if len({len(row) for row in table}) != 1:
                raise DomainError("zeta rows must share the attempt budget M")
            for row in table:
                prev = 1.0 + 1e-9
                for v in row:
                    if not -1e-12 <= v <= 1.0 + 1e-12:
                        raise DomainError("zeta values must lie in [0, 1]")
                    if v > prev + 1e-9:
                        raise DomainError(
                            "zeta must be nonincreasing in the attempt index"
                        )
                    prev = v

    @property
    def M(self) -> int:
        return len(self.zeta_overlay[0])

    @property
    def eps_d(self) -> float:
        return self.zeta_overlay[0][-1]

    @property
    def eps_mc(self) -> float:
        return self.zeta_overlay[1][-1]

    @property
    def eps_MC(self) -> float:
        return self.zeta_overlay[2][-1]

    @property
    def eps_ac(self) -> float:
        return self.eps_d + self.eps_mc + self.eps_MC

    def zeta(self, scenario: str, mode: str) -> tuple:
        table = (self.zeta_overlay, self.zeta_underlay)[_scenario_index(scenario)]
        return table[_mode_index(mode)]


class ZetaPools:
    """Reusable fading pools for fast re-evaluation of a DecodingProfile at
    many rates.

    The fading draws do not depend on the rate; only the final Q-evaluation
    does. Caching the cumulative (information, dispersion) sums per mode,
    scenario and attempt makes a rate sweep cost one vectorized Q-call per
    curve point instead of a fresh simulation, and reproduces
    `build_decoding_profile` bit for bit because the draw streams are keyed
    identically.
    """

    def __init__(self, params: SystemParams, budget: LinkBudget,
                 mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0):
        if mc_samples < MIN_MC_SAMPLES:
            raise ConfigError(
                f"mc_samples={mc_samples} too small; need >= {MIN_MC_SAMPLES}"
            )
        self.params = params
        self.budget = budget
        self.mc_samples = mc_samples
        self.seed = seed
        self._sums = {}
        for scenario in SCENARIOS:
            for mode in MODES:
                info = np.zeros(mc_samples)
                disp = np.zeros(mc_samples)
                sums = []
                for col in range(params.max_tx_M):
                    inc_i, inc_d = _column_increments(
                        params, budget, mode, scenario, mc_samples, seed, col
                    )
                    info = info + inc_i
                    disp = disp + inc_d
                    sums.append((info, disp))
                self._sums[(scenario, mode)] = sums

    def zeta_curve(self, scenario: str, mode: str, r: float) -> tuple:
        l = self.params.block_len_l
        out = []
        for m, (info, disp) in enumerate(self._sums[(scenario, mode)], start=1):
            out.append(float(np.mean(_zeta_from_sums(info, disp, l, m, r))))
        return tuple(out)

    def profile_at(self, r: float) -> "DecodingProfile":
        overlay = tuple(self.zeta_curve("overlay", mode, r) for mode in MODES)
        underlay = tuple(self.zeta_curve("underlay", mode, r) for mode in MODES)
        return DecodingProfile(
            zeta_overlay=overlay,
            zeta_underlay=underlay,
            mc_samples=self.mc_samples,
            seed=self.seed,
        )


def build_decoding_profile(params: SystemParams, budget: LinkBudget,
                           mc_samples: int = DEFAULT_MC_SAMPLES,
                           seed: int = 0) -> DecodingProfile:
    """Estimate every E_z[zeta_m] curve (both scenarios, all modes) at the
    configured rate."""
    overlay = []
    underlay = []
    for scenario, acc in (("overlay", overlay), ("underlay", underlay)):
        for mode in MODES:
            curve = []
            for m in range(1, params.max_tx_M + 1):
                curve.append(
                    expected_decoding_error(
                        mode, m, params, budget, scenario, mc_samples, seed
                    )
                )
            acc.append(tuple(curve))
    return DecodingProfile(
        zeta_overlay=tuple(overlay),
        zeta_underlay=tuple(underlay),
        mc_samples=mc_samples,
        seed=seed,
    )


def removal_probabilities(profile: DecodingProfile, queue_model: str, t: int,
                          mode: str = "direct", scenario: str = "overlay") -> tuple:
    """Probability that a packet leaves the queue at attempt t, split by
    outcome: (without delivery, with delivery).

    Uses the single-scenario error curve of `mode` under `scenario`, with
    zeta_0 = 1. Model n1 keeps the packet on final failure (it is demoted,
    leaving without delivery only at t=M); model n2 drops it at t=M, so the
    packet surely leaves and the delivery-split mass telescopes to one.
    """
    if queue_model not in QUEUE_MODELS:
        raise DomainError(f"unknown queue model {queue_model!r}")
    M = profile.M
    if not 1 <= t <= M:
        raise DomainError(f"attempt index t={t} out of range 1..{M}")
    curve = (1.0,) + profile.zeta(scenario, mode)
    eps = curve[M]
    delivered = curve[t - 1] - curve[t]
    if queue_model == "n1":
        undelivered = eps if t == M else 0.0
        return (undelivered, delivered)
    if t == M:
        delivered += eps
    return (0.0, delivered)


@dataclass
class CompanionSpec:
    """Coefficients of the M x M block-companion matrix (first row b_1..b_M,
    ones on the subdiagonal). `lambda_plus` and `ec` are filled in by the
    spectral-radius solver."""

    b: tuple
    queue_model: str
    M: int
    diagnostics: dict
    lambda_plus: float | None = None
    ec: float | None = None

    def __post_init__(self):
        if self.queue_model not in QUEUE_MODELS:
            raise DomainError(f"unknown queue model {self.queue_model!r}")
        if len(self.b) != self.M or self.M < 1:
            raise DomainError("need exactly M companion coefficients")
        if any(v < -1e-12 for v in self.b):
            raise DomainError("companion coefficients must be nonnegative")

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.M, self.M))
        out[0, :] = self.b
        for k in range(1, self.M):
            out[k, k - 1] = 1.0
        return out


def _rows_by_scenario(rows) -> dict:
    if len(rows) != 2:
        raise DomainError("rows must be the (overlay, underlay) pair")
    overlay, underlay = rows
    if not isinstance(overlay, TransitionRow) or not isinstance(underlay, TransitionRow):
        raise DomainError("rows must be TransitionRow instances")
    if overlay.scenario != "overlay" or underlay.scenario != "underlay":
        raise DomainError("rows must be ordered (overlay, underlay)")
    return {"overlay": overlay, "underlay": underlay}


def default_schedule(M: int) -> tuple:
    """Attempt 1 shares spectrum (underlay); retransmissions get dedicated
    resources (overlay)."""
    return ("underlay",) + ("overlay",) * (M - 1)


def companion_entries(profile: DecodingProfile, rows, params: SystemParams,
                      queue_model: str, schedule=None) -> CompanionSpec:
    """Build b_1..b_M as q-vector x MGF-diagonal x transition-row products.

    Per attempt k the six-slot q vector carries, in its ON slots, the
    probability that the packet is still undelivered before block k and gets
    delivered at block k (differences of the error curve; the final attempt
    uses the outage split of the queue model), and carries 1 in every OFF
    slot. The MGF diagonal weights ON slots by e^(-l*r*theta). Model n1 adds
    the accumulated outage mass eps_ac to b_M.
    """
    if queue_model not in QUEUE_MODELS:
        raise DomainError(f"unknown queue model {queue_model!r}")
    M = params.max_tx_M
    if profile.M != M:
        raise DomainError("profile attempt budget does not match params.max_tx_M")
    by_scenario = _rows_by_scenario(rows)
    if schedule is None:
        schedule = default_schedule(M)
    if len(schedule) != M or any(s not in SCENARIOS for s in schedule):
        raise DomainError("schedule must name a scenario per attempt")

    elr = math.exp(-params.block_len_l * params.rate_r * params.qos_theta)
    eps = (profile.eps_d, profile.eps_mc, profile.eps_MC)
    b = []
    mass_zero_theta = 0.0
    for k in range(1, M + 1):
        scen = schedule[k - 1]
        row = by_scenario[scen]
        on_terms = 0.0
        for mi, mode in enumerate(MODES):
            curve = (1.0,) + profile.zeta(scen, mode)
            if k == 1:
                q_on = 1.0 - curve[1]
            elif k < M:
                q_on = curve[k - 1] - curve[k]
            elif queue_model == "n1":
                q_on = curve[M - 1] - eps[mi]
            else:
                q_on = curve[M - 1]
            on_terms += row.p[2 * mi] * q_on
        off_mass = sum(row.off_mass)
        bk = elr * on_terms + off_mass
        bk_zero = on_terms + off_mass
        if k == M and M > 1 and queue_model == "n1":
            bk += profile.eps_ac
            bk_zero += profile.eps_ac
        b.append(bk)
        mass_zero_theta += bk_zero

    diagnostics = {
        "mass_zero_theta": mass_zero_theta,
        "mgf_on": elr,
        "schedule": tuple(schedule),
        "eps_ac": profile.eps_ac,
    }
    # Stable message texts (values live in diagnostics) so the default
    # warning filter dedupes these across sweep/optimizer evaluations.
    if queue_model == "n2" and mass_zero_theta > 1.0 + 1e-9:
        warnings.warn(
            "n2 coefficient mass at theta=0 exceeds 1; the decomposition is "
            "not a probability law here and the rate-root may exceed 1 "
            "(value in diagnostics['mass_zero_theta'])",
            ModelWarning,
            stacklevel=2,
        )
    if b[-1] > 1.0:
        warnings.warn(
            "final companion coefficient exceeds 1 (accumulated outage "
            "mass); the spectral radius may exceed 1, giving negative EC",
            ModelWarning,
            stacklevel=2,
        )
    return CompanionSpec(
        b=tuple(b), queue_model=queue_model, M=M, diagnostics=diagnostics
    )


if __name__ == "__main__":
    from .markov import overlay_row, underlay_row
    from .modeselect import map_to_hypotheses

    params = SystemParams()
    budget = LinkBudget.from_db(
        L_d=81.0, L_mc_ul=82.2, L_mc_dl=86.9, L_MC_ul=85.8, L_MC_dl=93.5,
        L_ut_dr=111.0, L_ut_mc=112.2, L_ut_MC=115.8,
    )
    prof = build_decoding_profile(params, budget, mc_samples=20_000, seed=7)
    print("overlay zeta:", prof.zeta_overlay)
    print("underlay zeta:", prof.zeta_underlay)
    det = map_to_hypotheses((81.0, 84.0, 87.0), sigma=1.0)
    rows = (overlay_row(params, budget, det), underlay_row(params, budget, det))
    for qm in QUEUE_MODELS:
        spec = companion_entries(prof, rows, params, qm)
        print(qm, "b =", spec.b, "mass(0) =", spec.diagnostics["mass_zero_theta"])
