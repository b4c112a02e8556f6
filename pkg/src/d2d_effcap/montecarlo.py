"""Independent Monte Carlo oracles for the analytical pipeline.

Everything here re-derives quantities from operational first principles
(draw fading, run the attempt schedule, count events) so the analytical
formulas elsewhere can be validated against simulation rather than against
themselves. Streams are derived from namespaced seed sequences, so every
estimate is reproducible bit for bit under a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._backend import get_backend
from .channel import LOG2E, LinkBudget, SystemParams, linear_to_db
from .errors import ConfigError, DomainError
from .harq import (
    MODES,
    QUEUE_MODELS,
    SCENARIOS,
    DecodingProfile,
    _mode_draw_coeffs,
    default_schedule,
)
from .markov import TransitionRow
from .modeselect import DetectionProfile, hypothesis_distribution, map_to_hypotheses

PATH_CHUNK = 1024
SQRT2 = math.sqrt(2.0)

_NS_PATHS = 202
_NS_BOOT = 303
_NS_DETECT = 404
_NS_OUTAGE = 505
_NS_PERIOD = 606

SCENARIO_CHOICES = ("schedule",) + SCENARIOS


@dataclass(frozen=True)
class SimConfig:
    """Service-path simulation settings.

    `scenario` picks the attempt schedule: "schedule" is the operational
    underlay-then-overlay pattern; "overlay"/"underlay" force every attempt
    into one scenario (used by single-scenario validation runs).
    `arrival_rate_a` and `queue_model` do not change the delivered-bit
    process (see simulate_service_paths); they are carried for occupancy
    reporting.
    """

    num_blocks: int = 1000
    num_paths: int = 10_000
    arrival_rate_a: float = 0.0
    seed: int = 1234
    scenario: str = "schedule"
    queue_model: str = "n1"

    def __post_init__(self):
        if self.num_blocks < 1:
            raise DomainError("num_blocks must be >= 1")
        if self.num_paths < 1:
            raise DomainError("num_paths must be >= 1")
        if self.arrival_rate_a < 0:
            raise DomainError("arrival_rate_a must be nonnegative")
        if self.scenario not in SCENARIO_CHOICES:
            raise DomainError(f"scenario must be one of {SCENARIO_CHOICES}")
        if self.queue_model not in QUEUE_MODELS:
            raise DomainError(f"unknown queue model {self.queue_model!r}")


def _rng(*entropy) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _conditional_on_probs(rows) -> np.ndarray:
    """P(gate ON | mode) per scenario, a (2, 3) array in SCENARIOS order."""
    out = np.zeros((2, 3))
    by_scenario = {}
    for row in rows:
        if not isinstance(row, TransitionRow):
            raise DomainError("rows must be TransitionRow instances")
        by_scenario[row.scenario] = row
    if set(by_scenario) != set(SCENARIOS):
        raise DomainError("rows must cover both scenarios exactly once")
    for si, scen in enumerate(SCENARIOS):
        p = by_scenario[scen].p
        for mi in range(3):
            mass = p[2 * mi] + p[2 * mi + 1]
            out[si, mi] = p[2 * mi] / mass if mass > 0 else 0.0
    return out


def _chunk_inputs(params: SystemParams, budget: LinkBudget, weights, n_paths: int,
                  n_blocks: int, seed: int, chunk: int):
    """Pre-generate every random quantity one chunk of paths needs.

    Eight uniform slots per (path, block): mode draw, gate draw, four
    channel gains (signal/interferer for each hop), decode draw, spare.
    Both backends consume these arrays unchanged, which is what makes them
    bit-compatible.
    """
    rng = _rng(seed, _NS_PATHS, chunk)
    u = rng.random((n_paths, n_blocks, 8))
    cum = np.cumsum(np.asarray(weights, dtype=float))
    mode_idx = np.minimum(
        np.searchsorted(cum, u[:, :, 0], side="right"), 2
    ).astype(np.int8)
    z_sig_ul = -np.log1p(-u[:, :, 2])
    z_int_ul = -np.log1p(-u[:, :, 3])
    z_sig_dl = -np.log1p(-u[:, :, 4])
    z_int_dl = -np.log1p(-u[:, :, 5])

    gamma = np.zeros((2, n_paths, n_blocks))
    delta = np.zeros((n_paths, n_blocks))
    for mi, mode in enumerate(MODES):
        hops, dt = _mode_draw_coeffs(params, budget, mode)
        mask = mode_idx == mi
        delta[mask] = dt
        hop_draws = ((z_sig_ul, z_int_ul), (z_sig_dl, z_int_dl))
        for si, scen in enumerate(SCENARIOS):
            g = None
            for (sig, noise, intf), (zs, zi) in zip(hops, hop_draws):
                if scen == "underlay":
                    h = sig * zs / (noise + intf * zi)
                else:
                    h = (sig / noise) * zs
                g = h if g is None else np.minimum(g, h)
            gamma[si][mask] = g[mask]

    info_inc = np.empty((2, n_paths, n_blocks))
    disp_inc = np.empty((2, n_paths, n_blocks))
    for si in range(2):
        g = gamma[si]
        info_inc[si] = delta * np.log2(1.0 + g)
        disp_inc[si] = delta * (2.0 + g) * g / (1.0 + g) ** 2
    return (
        mode_idx,
        np.ascontiguousarray(u[:, :, 1]),
        np.ascontiguousarray(u[:, :, 6]),
        info_inc,
        disp_inc,
    )


def simulate_service_paths(params: SystemParams, budget: LinkBudget,
                           profile: DetectionProfile, rows, config: SimConfig,
                           backend: str | None = None,
                           weighting: str = "uniform") -> np.ndarray:
    """Cumulative delivered bits S_i(t), one row per path, one column per
    block.

    Per block the path draws a mode from the detection profile's selection
    law and an ON/OFF gate from the block's scenario row (conditioned on
    the mode). ON blocks extend the packet's decoder trace and may deliver
    it; OFF blocks just consume the attempt. A packet that exhausts its M
    attempts is removed undelivered. Keeping it queued (n1) or dropping it
    (n2) changes queue occupancy but not the delivered-bit process, because
    with saturated arrivals the next packet is statistically identical, so
    one matrix serves both queue models.
    """
    mod, _ = get_backend(backend)
    weights = hypothesis_distribution(profile, weighting)
    p_on = _conditional_on_probs(rows)
    M = params.max_tx_M
    if config.scenario == "schedule":
        sched_names = default_schedule(M)
    else:
        sched_names = (config.scenario,) * M
    sched = np.array([SCENARIOS.index(s) for s in sched_names], dtype=np.int8)
    l = params.block_len_l
    r = params.rate_r
    lncorr = np.array([math.log(m * l) / l for m in range(1, M + 1)])
    lr = float(l) * float(r)

    out = np.empty((config.num_paths, config.num_blocks))
    start = 0
    chunk = 0
    while start < config.num_paths:
        stop = min(start + PATH_CHUNK, config.num_paths)
        mode_idx, u_gate, u_dec, info_inc, disp_inc = _chunk_inputs(
            params, budget, weights, stop - start, config.num_blocks,
            config.seed, chunk,
        )
        mod.run_chunk(
            mode_idx, u_gate, u_dec, info_inc, disp_inc, p_on, sched,
            lncorr, float(l), float(r), lr, LOG2E, SQRT2,
            out[start:stop],
        )
        start = stop
        chunk += 1
    return out


@dataclass(frozen=True)
class EmpiricalEC:
    """Log-MGF effective-capacity estimate with a bootstrap interval.

    `ci` is None when the ensemble has a single path or bootstrapping was
    disabled.
    """

    estimate: float
    ci: tuple | None
    theta: float
    n_paths: int
    horizon: int


def empirical_ec(service_paths, theta: float, bootstrap: int = 200,
                 seed: int = 0, alpha: float = 0.05) -> EmpiricalEC:
    """EC estimate -ln(mean(exp(-theta S_i(t))))/(theta t) in log-sum-exp
    form, with a percentile bootstrap over paths."""
    if theta <= 0:
        raise DomainError("theta must be positive")
    s = np.asarray(service_paths, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim != 2 or s.size == 0:
        raise DomainError("service_paths must be a nonempty matrix")
    n, t = s.shape
    final = s[:, -1]
    exponents = -theta * final

    def estimate(values) -> float:
        return float(-(logsumexp(values) - math.log(len(values))) / (theta * t))

    point = estimate(exponents)
    if n == 1 or bootstrap <= 0:
        return EmpiricalEC(point, None, theta, n, t)
    rng = _rng(seed, _NS_BOOT)
    reps = np.empty(bootstrap)
    for k in range(bootstrap):
        idx = rng.integers(0, n, size=n)
        reps[k] = estimate(exponents[idx])
    lo, hi = np.quantile(reps, (alpha / 2.0, 1.0 - alpha / 2.0))
    return EmpiricalEC(point, (float(lo), float(hi)), theta, n, t)


def empirical_detection(budget, sigma: float, trials: int = 100_000,
                        seed: int = 0) -> np.ndarray:
    """Empirical 3x3 selection-frequency matrix of the ternary test.

    Row y: the link at hypothesis y is truly best; its measured pathloss is
    drawn from N(L_y, sigma^2) and classified through the threshold rule.
    Rows sum to one; the diagonal estimates the per-hypothesis detection
    probabilities. `budget` is either a LinkBudget (the triple is then the
    transmitter's first-hop losses in dB) or an explicit (L_d, L_mc, L_MC)
    dB triple.
    """
    if trials < 10_000:
        raise ConfigError(f"trials={trials} too small; need >= 10000")
    if isinstance(budget, LinkBudget):
        triple = detection_triple_db(budget)
    else:
        triple = tuple(float(v) for v in budget)
    profile = map_to_hypotheses(triple, sigma)
    c_ab, c_bc = profile.thresholds
    order = np.asarray(profile.sort_permutation)
    freq = np.zeros((3, 3))
    for y in range(3):
        rng = _rng(seed, _NS_DETECT, y)
        obs = triple[y] + sigma * rng.standard_normal(trials)
        region = np.where(obs < c_ab, 0, np.where(obs < c_bc, 1, 2))
        selected = order[region]
        counts = np.bincount(selected, minlength=3)
        freq[y] = counts / trials
    return freq


def detection_triple_db(budget: LinkBudget) -> tuple:
    """Pathlosses the transmitter can actually measure: its first hop to
    each candidate (D2D receiver, micro BS, macro BS), in dB."""
    return (
        linear_to_db(budget.L_d),
        linear_to_db(budget.L_mc_ul),
        linear_to_db(budget.L_MC_ul),
    )


def simulate_period_outcomes(profile: DecodingProfile, queue_model: str,
                             periods: int, seed: int = 0,
                             mode: str = "direct",
                             scenario: str = "overlay") -> np.ndarray:
    """Frequencies of queue-removal events over simulated HARQ periods.

    Each period runs the conditional decoding chain of one mode under one
    scenario (failure at attempt t with probability zeta_t/zeta_{t-1}) and
    records where the packet left the queue: out[t-1] = (without delivery,
    with delivery). Cross-validates removal_probabilities.
    """
    if queue_model not in QUEUE_MODELS:
        raise DomainError(f"unknown queue model {queue_model!r}")
    if periods < 1:
        raise DomainError("periods must be >= 1")
    curve = (1.0,) + profile.zeta(scenario, mode)
    M = profile.M
    rng = _rng(seed, _NS_PERIOD)
    u = rng.random((periods, M))
    alive = np.ones(periods, dtype=bool)
    out = np.zeros((M, 2))
    for t in range(1, M + 1):
        cond = curve[t] / curve[t - 1] if curve[t - 1] > 0 else 0.0
        cond = min(cond, 1.0)
        fail = u[:, t - 1] < cond
        delivered = alive & ~fail
        out[t - 1, 1] = np.count_nonzero(delivered)
        alive = alive & fail
    survivors = np.count_nonzero(alive)
    if queue_model == "n1":
        out[M - 1, 0] = survivors
    else:
        out[M - 1, 1] += survivors
    return out / periods


def empirical_sir_outage(params: SystemParams, budget: LinkBudget, target: str,
                         gamma_req: float, draws: int = 1_000_000,
                         seed: int = 0) -> float:
    """Monte Carlo P(SIR < gamma_req) for one mode in the shared band.

    Mirrors the exact laws' modeling surface: pure signal-to-interference
    ratios of independent exponential powers, two-hop modes bounded by
    their weaker hop.
    """
    if gamma_req < 0:
        raise DomainError("gamma_req must be nonnegative")
    mi = MODES.index(target) if target in MODES else None
    if mi is None:
        raise DomainError(f"unknown target {target!r} (expected one of {MODES})")
    rng = _rng(seed, _NS_OUTAGE, mi)
    if target == "direct":
        sig = (params.p_dt / budget.L_d) * rng.exponential(1.0, draws)
        intf = (params.p_ut / budget.L_ut_dr) * rng.exponential(1.0, draws)
        sir = sig / intf
    else:
        if target == "mc":
            l_ul, l_dl, l_int, p_bs = (
                budget.L_mc_ul, budget.L_mc_dl, budget.L_ut_mc, params.p_mc,
            )
        else:
            l_ul, l_dl, l_int, p_bs = (
                budget.L_MC_ul, budget.L_MC_dl, budget.L_ut_MC, params.p_MC,
            )
        ul = (params.p_dt / l_ul) * rng.exponential(1.0, draws) / (
            (params.p_ut / l_int) * rng.exponential(1.0, draws)
        )
        dl = (p_bs / l_dl) * rng.exponential(1.0, draws) / (
            (params.p_ut / budget.L_ut_dr) * rng.exponential(1.0, draws)
        )
        sir = np.minimum(ul, dl)
    return float(np.mean(sir < gamma_req))


def empirical_snr_ccdf(mean: float, gamma_req: float, draws: int = 1_000_000,
                       seed: int = 0) -> float:
    """Monte Carlo P(snr > gamma_req) for an exponential block SNR."""
    if mean <= 0:
        raise DomainError("mean must be positive")
    rng = _rng(seed, _NS_OUTAGE, 99)
    return float(np.mean(mean * rng.exponential(1.0, draws) > gamma_req))


if __name__ == "__main__":
    from .markov import overlay_row, underlay_row

    params = SystemParams()
    budget = LinkBudget.from_db(
        L_d=81.0, L_mc_ul=82.2, L_mc_dl=86.9, L_MC_ul=85.8, L_MC_dl=93.5,
        L_ut_dr=111.0, L_ut_mc=112.2, L_ut_MC=115.8,
    )
    det = map_to_hypotheses(detection_triple_db(budget), sigma=1.0)
    rows = (overlay_row(params, budget, det), underlay_row(params, budget, det))
    cfg = SimConfig(num_paths=2000, num_blocks=400, seed=7)
    s = simulate_service_paths(params, budget, det, rows, cfg)
    for theta in (0.005, 0.01, 0.05):
        est = empirical_ec(s, theta, seed=7)
        print(f"theta={theta}: EC~{est.estimate:.3f} CI={est.ci}")
