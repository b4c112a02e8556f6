"""Experiment runner.

Usage:
    d2d-effcap <mode-select|ec|sweep|optimize|validate>
               [--config FILE] [--seed N] [--strict] [--out DIR]

Every command writes one CSV into the output directory. Header lines start
with '#' and carry the resolved configuration and seed; the timestamp is
confined to a single header line so that re-running with the same seed
reproduces the file byte for byte apart from that line. The CSV body (all
non-'#' lines) is fully deterministic given the seed.

Exit codes: 0 success, 1 validation check failed, 2 configuration error or
a clamp warning escalated by --strict, 3 optimizer divergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .channel import mean_snr_direct, sir_outage_direct, sir_outage_two_hop
from .config import ExperimentConfig, load_config
from .effcap import _m2_ingredients, ec_generic, ec_truncated_n1, ec_truncated_n2
from .errors import ClampWarning, ConfigError, DegenerateError, DomainError
from .harq import (
    MODES,
    QUEUE_MODELS,
    ZetaPools,
    build_decoding_profile,
    default_schedule,
    removal_probabilities,
)
from .markov import overlay_row, underlay_row
from .modeselect import HYPOTHESES, map_to_hypotheses
from .montecarlo import (
    detection_triple_db,
    empirical_detection,
    empirical_ec,
    empirical_sir_outage,
    empirical_snr_ccdf,
    simulate_period_outcomes,
    simulate_service_paths,
)
from .optimizer import (
    FrozenCoeffs,
    analytic_gradient_n1,
    cost_n1,
    gd_optimize,
    grid_search,
)

COMMANDS = ("mode-select", "ec", "sweep", "optimize", "validate")

OUTAGE_GAMMA_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
VALIDATE_OUTAGE_DRAWS = 1_000_000
VALIDATE_REMOVAL_PERIODS = 200_000
SWEEP_WORKERS = 4


def _version() -> str:
    from . import __version__

    return __version__


# ---------------------------------------------------------------------------
# CSV emission


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _write_csv(path: Path, command: str, cfg: ExperimentConfig, columns,
               rows, extra_header=()) -> None:
    lines = [f"# d2d-effcap {_version()} {command}", f"# seed = {cfg.seed}"]
    lines.extend(f"# {text}" for text in extra_header)
    lines.extend(f"# {text}" for text in cfg.echo)
    lines.append(f"# generated: {datetime.now(timezone.utc).isoformat()}")
    body = io.StringIO()
    writer = csv.writer(body, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows([_fmt(v) for v in row] for row in rows)
    path.write_text("\n".join(lines) + "\n" + body.getvalue(),
                    encoding="utf-8")
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# Shared pipeline pieces


def _detection_triple(cfg: ExperimentConfig) -> tuple:
    if cfg.detect_triple is not None:
        return cfg.detect_triple
    return detection_triple_db(cfg.budget)


def _detection(cfg: ExperimentConfig, sigma: float | None = None):
    return map_to_hypotheses(
        _detection_triple(cfg), cfg.sigma if sigma is None else sigma
    )


def _markov_rows(params, budget, det, weighting):
    return (
        overlay_row(params, budget, det, weighting),
        underlay_row(params, budget, det, weighting),
    )


def _uses_default_schedule(cfg: ExperimentConfig) -> bool:
    return cfg.schedule is None or cfg.schedule == default_schedule(
        cfg.params.max_tx_M
    )


def _analytic_ec_pair(params, budget, det, profile, cfg) -> tuple:
    rows = _markov_rows(params, budget, det, cfg.weighting)
    ec_n1 = ec_generic(params, rows, profile, "n1", cfg.schedule).ec
    ec_n2 = ec_generic(params, rows, profile, "n2", cfg.schedule).ec
    return rows, ec_n1, ec_n2


# ---------------------------------------------------------------------------
# mode-select


def cmd_mode_select(cfg: ExperimentConfig, out_dir: Path) -> int:
    triple = _detection_triple(cfg)
    det = map_to_hypotheses(triple, cfg.sigma)
    freq = empirical_detection(triple, cfg.sigma, trials=cfg.detect_trials,
                               seed=cfg.seed)
    c_ab, c_bc = det.thresholds
    print(f"pathloss triple (dB): {triple[0]:.6g}, {triple[1]:.6g}, {triple[2]:.6g}")
    print(f"thresholds (dB): C_AB={c_ab:.6g} C_BC={c_bc:.6g}")
    rows = []
    for i, name in enumerate(HYPOTHESES):
        pd_mc = float(freq[i, i])
        rows.append((name, det.pd[i], det.pe[i], pd_mc, 1.0 - pd_mc))
        print(f"{name}: pd={det.pd[i]:.6f} (mc {pd_mc:.6f})  "
              f"pe={det.pe[i]:.6f} (mc {1.0 - pd_mc:.6f})")
    _write_csv(
        out_dir / "mode_select.csv", "mode-select", cfg,
        ("hypothesis", "pd_analytic", "pe_analytic", "pd_mc", "pe_mc"), rows,
        extra_header=(
            f"losses_db = {triple[0]:.12g},{triple[1]:.12g},{triple[2]:.12g}",
            f"thresholds_db = {c_ab:.12g},{c_bc:.12g}",
            f"sigma_db = {cfg.sigma:.12g}",
        ),
    )
    return 0


# ---------------------------------------------------------------------------
# ec


def cmd_ec(cfg: ExperimentConfig, out_dir: Path) -> int:
    params, budget = cfg.params, cfg.budget
    det = _detection(cfg)
    rows = _markov_rows(params, budget, det, cfg.weighting)
    profile = build_decoding_profile(params, budget, cfg.mc_samples, cfg.seed)
    closed_ok = params.max_tx_M == 2 and _uses_default_schedule(cfg)

    service = simulate_service_paths(params, budget, det, rows, cfg.sim,
                                     weighting=cfg.weighting)
    emp = empirical_ec(service, params.qos_theta, seed=cfg.seed)
    ci = emp.ci if emp.ci is not None else (None, None)

    csv_rows = []
    for qm, closed_fn in (("n1", ec_truncated_n1), ("n2", ec_truncated_n2)):
        generic = ec_generic(params, rows, profile, qm, cfg.schedule)
        closed = closed_fn(params, rows, profile).ec if closed_ok else None
        csv_rows.append((qm, generic.lambda_plus, closed, generic.ec,
                         emp.estimate, ci[0], ci[1]))
        closed_txt = f"{closed:.6f}" if closed is not None else "n/a"
        delta_cg = (f"{abs(closed - generic.ec):.3g}"
                    if closed is not None else "n/a")
        print(f"{qm}: closed={closed_txt} generic={generic.ec:.6f} "
              f"mc={emp.estimate:.6f} |closed-generic|={delta_cg} "
              f"|generic-mc|={abs(generic.ec - emp.estimate):.3g}")
    if ci[0] is not None:
        print(f"bootstrap CI ({emp.n_paths} paths, {emp.horizon} blocks): "
              f"[{ci[0]:.6f}, {ci[1]:.6f}]")
    _write_csv(
        out_dir / "ec.csv", "ec", cfg,
        ("queue_model", "lambda_plus", "ec_closed", "ec_generic", "ec_mc",
         "ci_lo", "ci_hi"),
        csv_rows,
    )
    return 0


# ---------------------------------------------------------------------------
# sweep


def _sweep_values(cfg: ExperimentConfig) -> np.ndarray:
    spec = cfg.sweep
    values = np.linspace(spec.lo, spec.hi, spec.steps)
    if spec.variable == "l":
        values = np.unique(np.maximum(1, np.round(values))).astype(float)
    return values


def _sweep_point(cfg: ExperimentConfig, variable: str, value: float,
                 shared: dict) -> tuple:
    """Analytic (params, det, profile, rows, ec_n1, ec_n2) at one grid point.

    Fading pools are reused whenever the variable does not touch the draw
    distributions (r, theta, sigma); beta and l points rebuild them.
    """
    params, budget = cfg.params, cfg.budget
    if variable == "r":
        params = replace(params, rate_r=float(value))
        det = shared["det"]
        profile = shared["pools"].profile_at(params.rate_r)
    elif variable == "theta":
        params = replace(params, qos_theta=float(value))
        det = shared["det"]
        profile = shared["profile"]
    elif variable == "sigma":
        det = _detection(cfg, sigma=float(value))
        profile = shared["profile"]
    elif variable == "beta":
        params = replace(params, si_beta=float(value))
        det = shared["det"]
        pools = ZetaPools(params, budget, cfg.mc_samples, cfg.seed)
        profile = pools.profile_at(params.rate_r)
    elif variable == "l":
        params = replace(params, block_len_l=int(value))
        det = shared["det"]
        pools = ZetaPools(params, budget, cfg.mc_samples, cfg.seed)
        profile = pools.profile_at(params.rate_r)
    else:
        raise ConfigError(f"unknown sweep variable {variable!r}")
    rows, ec_n1, ec_n2 = _analytic_ec_pair(params, budget, det, profile, cfg)
    return params, det, rows, ec_n1, ec_n2


def cmd_sweep(cfg: ExperimentConfig, out_dir: Path) -> int:
    spec = cfg.sweep
    values = _sweep_values(cfg)
    shared = {"det": _detection(cfg)}
    if spec.variable in ("r", "theta", "sigma"):
        pools = ZetaPools(cfg.params, cfg.budget, cfg.mc_samples, cfg.seed)
        shared["pools"] = pools
        if spec.variable in ("theta", "sigma"):
            shared["profile"] = pools.profile_at(cfg.params.rate_r)

    with ThreadPoolExecutor(max_workers=SWEEP_WORKERS) as pool:
        points = list(
            pool.map(lambda v: _sweep_point(cfg, spec.variable, v, shared),
                     values)
        )

    ci_n1 = [None] * len(values)
    ci_n2 = [None] * len(values)
    if spec.with_mc:
        theta_only = spec.variable == "theta"
        base_service = None
        for k, (params, det, rows, _, _) in enumerate(points):
            if theta_only and base_service is not None:
                service = base_service
            else:
                service = simulate_service_paths(
                    params, cfg.budget, det, rows, cfg.sim,
                    weighting=cfg.weighting,
                )
                if theta_only:
                    base_service = service
            emp = empirical_ec(service, params.qos_theta, seed=cfg.seed)
            half = (0.5 * (emp.ci[1] - emp.ci[0])
                    if emp.ci is not None else None)
            # Saturated arrivals give both queue models the same delivered-bit
            # process, so one simulation prices both uncertainty columns.
            ci_n1[k] = half
            ci_n2[k] = half

    csv_rows = [
        (spec.variable, float(v), p[3], p[4], ci_n1[k], ci_n2[k])
        for k, (v, p) in enumerate(zip(values, points))
    ]
    _write_csv(
        out_dir / f"sweep_{spec.variable}.csv", "sweep", cfg,
        ("variable", "value", "ec_n1", "ec_n2", "ci_n1", "ci_n2"), csv_rows,
        extra_header=(f"grid = {spec.lo:.12g}..{spec.hi:.12g} x{len(values)}",),
    )
    lead = csv_rows[0]
    tail = csv_rows[-1]
    print(f"{spec.variable} sweep: ec_n1 {lead[2]:.4f} -> {tail[2]:.4f}, "
          f"ec_n2 {lead[3]:.4f} -> {tail[3]:.4f} over [{spec.lo:g}, {spec.hi:g}]")
    return 0


# ---------------------------------------------------------------------------
# optimize


def _ec_objective(cfg: ExperimentConfig, pools: ZetaPools, det, queue_model):
    params, budget = cfg.params, cfg.budget

    def objective(r: float) -> float:
        p = replace(params, rate_r=float(r))
        rows = _markov_rows(p, budget, det, cfg.weighting)
        profile = pools.profile_at(p.rate_r)
        return ec_generic(p, rows, profile, queue_model, cfg.schedule).ec

    return objective


def _frozen_gradient(cfg: ExperimentConfig, pools: ZetaPools, det):
    """EC'(r) under a frozen-coefficient snapshot taken at r_init.

    The snapshot cost F(r) equals twice the n1 root, so the EC derivative is
    -(1/theta) F'(r)/F(r). Valid only for the two-attempt default schedule.
    """
    if cfg.params.max_tx_M != 2 or not _uses_default_schedule(cfg):
        raise ConfigError(
            "gradient_mode=analytic_frozen needs max_tx_m=2 and the default "
            "schedule"
        )
    p0 = replace(cfg.params, rate_r=cfg.gd.r_init)
    rows0 = _markov_rows(p0, cfg.budget, det, cfg.weighting)
    profile0 = pools.profile_at(p0.rate_r)
    phi, vartheta, _, _, _, _, eps_ac = _m2_ingredients(p0, rows0, profile0)
    coeffs = FrozenCoeffs(phi=phi, vartheta=vartheta, eps_ac=eps_ac,
                          l=cfg.params.block_len_l, theta=cfg.params.qos_theta)

    def gradient(r: float) -> float:
        return (-analytic_gradient_n1(r, coeffs)
                / (cfg.params.qos_theta * cost_n1(r, coeffs)))

    return gradient


def cmd_optimize(cfg: ExperimentConfig, out_dir: Path) -> int:
    det = _detection(cfg)
    pools = ZetaPools(cfg.params, cfg.budget, cfg.mc_samples, cfg.seed)
    grid_lo, grid_hi, grid_steps = cfg.grid
    grid_step = (grid_hi - grid_lo) / (grid_steps - 1)

    csv_rows = []
    trace_rows = []
    diverged = False
    for qm in QUEUE_MODELS:
        objective = _ec_objective(cfg, pools, det, qm)
        gradient = None
        if cfg.gd.gradient_mode == "analytic_frozen":
            gradient = _frozen_gradient(cfg, pools, det)
        result = gd_optimize(objective, cfg.gd, gradient=gradient)
        oracle = grid_search(objective, grid_lo, grid_hi, grid_steps)
        agree = abs(result.r_star - oracle.r_star) <= grid_step + 1e-12
        csv_rows.append((
            qm, result.r_star, result.ec_star, len(result.trace),
            result.converged, oracle.r_star, oracle.ec_star, agree,
            result.message,
        ))
        print(f"{qm}: gd r*={result.r_star:.6f} EC*={result.ec_star:.6f} "
              f"({len(result.trace)} iters, {result.message}); "
              f"grid r*={oracle.r_star:.6f} EC*={oracle.ec_star:.6f}; "
              f"within one step: {agree}")
        for it, r, f, grad, step in result.trace:
            trace_rows.append((qm, it, r, f, grad, step))
        if result.aborted:
            diverged = True

    _write_csv(
        out_dir / "optimize.csv", "optimize", cfg,
        ("queue_model", "r_gd", "ec_gd", "iterations", "converged",
         "r_grid", "ec_grid", "within_one_step", "message"),
        csv_rows,
        extra_header=(f"grid = {grid_lo:.12g}..{grid_hi:.12g} x{grid_steps}",),
    )
    if diverged:
        _write_csv(
            out_dir / "optimize_trace.csv", "optimize", cfg,
            ("queue_model", "iteration", "r", "objective", "gradient", "step"),
            trace_rows,
        )
        print("optimizer diverged; trace written", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# validate


def _check(name: str, detail: str, value: float, bound: float,
           passed: bool) -> tuple:
    status = "PASS" if passed else "FAIL"
    print(f"{status} {name}: {detail} (value {value:.4g}, bound {bound:.4g})")
    return (name, detail, value, bound, status)


def _validate_detection(cfg: ExperimentConfig) -> tuple:
    triple = _detection_triple(cfg)
    det = map_to_hypotheses(triple, cfg.sigma)
    freq = empirical_detection(triple, cfg.sigma, trials=cfg.detect_trials,
                               seed=cfg.seed)
    conf = det.confusion_matrix()
    se = np.sqrt(conf * (1.0 - conf) / cfg.detect_trials)
    bound = 4.0 * se + 1.0 / cfg.detect_trials
    ratio = np.abs(freq - conf) / bound
    worst = float(np.max(ratio))
    return _check("detection_confusion", "max |mc-analytic| / (4 sigma + 1/n)",
                  worst, 1.0, worst <= 1.0)


def _validate_outage(cfg: ExperimentConfig) -> tuple:
    params, budget = cfg.params, cfg.budget
    worst = 0.0
    for idx, target in enumerate(MODES):
        for g in OUTAGE_GAMMA_GRID:
            if target == "direct":
                exact = sir_outage_direct(params, budget, g)
            else:
                exact = sir_outage_two_hop(params, budget, target, g)
            emp = empirical_sir_outage(params, budget, target, g,
                                       draws=VALIDATE_OUTAGE_DRAWS,
                                       seed=cfg.seed + idx)
            se = math.sqrt(max(exact * (1.0 - exact), 0.0)
                           / VALIDATE_OUTAGE_DRAWS)
            bound = 3.0 * se + 1.0 / VALIDATE_OUTAGE_DRAWS
            worst = max(worst, abs(emp - exact) / bound)
    return _check("sir_outage", "max |mc-exact| / (3 sigma + 1/n), 15 points",
                  worst, 1.0, worst <= 1.0)


def _validate_ccdf(cfg: ExperimentConfig) -> tuple:
    mean = mean_snr_direct(cfg.params, cfg.budget)
    analytic = math.exp(-1.0)
    emp = empirical_snr_ccdf(mean, mean, draws=VALIDATE_OUTAGE_DRAWS,
                             seed=cfg.seed)
    rel = abs(emp - analytic) / analytic
    return _check("snr_ccdf", "relative error at gamma_req = mean SNR",
                  rel, 0.01, rel <= 0.01)


def _validate_removal(cfg: ExperimentConfig, profile) -> list:
    out = []
    for qm in QUEUE_MODELS:
        emp = simulate_period_outcomes(profile, qm,
                                       periods=VALIDATE_REMOVAL_PERIODS,
                                       seed=cfg.seed)
        worst = 0.0
        for t in range(1, profile.M + 1):
            undel, deliv = removal_probabilities(profile, qm, t)
            worst = max(worst, abs(emp[t - 1, 0] - undel),
                        abs(emp[t - 1, 1] - deliv))
        out.append(_check(f"removal_{qm}", "max |frequency - probability|",
                          worst, 0.005, worst <= 0.005))
    return out


def _validate_ec(cfg: ExperimentConfig, profile) -> list:
    params, budget = cfg.params, cfg.budget
    det = _detection(cfg)
    rows = _markov_rows(params, budget, det, cfg.weighting)
    service = simulate_service_paths(params, budget, det, rows, cfg.sim,
                                     weighting=cfg.weighting)
    emp = empirical_ec(service, params.qos_theta, seed=cfg.seed)
    out = []
    closed_ok = params.max_tx_M == 2 and _uses_default_schedule(cfg)
    for qm, closed_fn in (("n1", ec_truncated_n1), ("n2", ec_truncated_n2)):
        generic = ec_generic(params, rows, profile, qm, cfg.schedule)
        rel = abs(emp.estimate - generic.ec) / max(abs(generic.ec), 1e-12)
        in_ci = (emp.ci is not None
                 and emp.ci[0] <= generic.ec <= emp.ci[1])
        out.append(_check(f"ec_empirical_{qm}",
                          "relative gap (or analytic EC inside bootstrap CI)",
                          rel, 0.05, rel <= 0.05 or in_ci))
        if closed_ok:
            closed = closed_fn(params, rows, profile).ec
            crel = abs(closed - generic.ec) / max(abs(generic.ec), 1e-12)
            out.append(_check(f"closed_form_{qm}",
                              "closed vs companion-root relative gap",
                              crel, 1e-10, crel <= 1e-10))
    return out


def cmd_validate(cfg: ExperimentConfig, out_dir: Path) -> int:
    profile = build_decoding_profile(cfg.params, cfg.budget, cfg.mc_samples,
                                     cfg.seed)
    results = [
        _validate_detection(cfg),
        _validate_outage(cfg),
        _validate_ccdf(cfg),
    ]
    results.extend(_validate_removal(cfg, profile))
    results.extend(_validate_ec(cfg, profile))
    _write_csv(
        out_dir / "validate.csv", "validate", cfg,
        ("check", "detail", "value", "bound", "status"), results,
    )
    failures = sum(1 for row in results if row[-1] == "FAIL")
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2d-effcap",
        description="Effective-capacity analyses for a HARQ-backed "
                    "device-to-device link under two-tier cellular "
                    "interference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "mode-select": "ternary link selection: thresholds and "
                       "detection/error probabilities, analytic vs Monte "
                       "Carlo",
        "ec": "effective capacity by closed form, companion root, and "
              "simulation",
        "sweep": "EC curve over r, theta, sigma, beta, or l",
        "optimize": "gradient search for the EC-maximizing rate with a grid "
                    "oracle",
        "validate": "cross-check every analytic law against its simulator",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", default=None, metavar="FILE",
                        help="INI-style experiment file (defaults apply "
                             "without it)")
        sp.add_argument("--seed", type=int, default=None, metavar="N",
                        help="override the configured seed")
        sp.add_argument("--strict", action="store_true",
                        help="escalate clamp warnings to errors (exit 2)")
        sp.add_argument("--out", default=".", metavar="DIR",
                        help="output directory for CSV files")
    return parser


_DISPATCH = {
    "mode-select": cmd_mode_select,
    "ec": cmd_ec,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            if args.strict:
                warnings.simplefilter("error", ClampWarning)
            cfg = load_config(args.config, seed_override=args.seed)
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            return _DISPATCH[args.command](cfg, out_dir)
    except ClampWarning as warning:
        print(f"strict: {warning}", file=sys.stderr)
        return 2
    except (ConfigError, DomainError, DegenerateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
