"""Rate optimization: gradient steps on EC(r) with a grid-search oracle.

Two gradient flavors exist. The frozen-coefficient cost F(r) treats the
decoding-error aggregates as rate-independent snapshots and has a matching
analytic derivative; it is exact for the snapshot but its derivative is
negative for every positive coefficient set, so it never brackets an
interior optimum. The default mode therefore differentiates the full EC(r)
numerically (central differences over common random numbers), which does
exhibit the interior peak, and the grid search provides the reference
argmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, DomainError

GRADIENT_MODES = ("numeric", "analytic_frozen")


@dataclass(frozen=True)
class GDConfig:
    """Gradient-step settings. `step_omega` is the base step size; steps are
    halved on non-improvement (backtracking) and iterates are projected to
    r >= r_min."""

    step_omega: float = 0.5
    max_iters: int = 200
    grad_tol: float = 1e-4
    r_init: float = 1.0
    gradient_mode: str = "numeric"
    fd_step: float = 1e-3
    r_min: float = 1e-3

    def __post_init__(self):
        if self.step_omega <= 0:
            raise DomainError("step_omega must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if self.grad_tol <= 0:
            raise DomainError("grad_tol must be positive")
        if self.fd_step <= 0:
            raise DomainError("fd_step must be positive")
        if self.r_min <= 0:
            raise DomainError("r_min must be positive")
        if self.r_init < self.r_min:
            raise DomainError("r_init must be >= r_min")
        if self.gradient_mode not in GRADIENT_MODES:
            raise DomainError(f"gradient_mode must be one of {GRADIENT_MODES}")


@dataclass(frozen=True)
class FrozenCoeffs:
    """Rate-independent snapshots of the aggregates entering the n1 root:
    phi (delivery mass at attempt 1), vartheta (delivery mass at attempt 2),
    eps_ac (accumulated outage), with the l*theta product of the exponent."""

    phi: float
    vartheta: float
    eps_ac: float
    l: int
    theta: float

    def __post_init__(self):
        if self.phi < 0 or self.vartheta < 0 or self.eps_ac < 0:
            raise DomainError("frozen coefficients must be nonnegative")
        if self.l < 1:
            raise DomainError("l must be >= 1")
        if self.theta <= 0:
            raise DomainError("theta must be positive")


def cost_n1(r: float, coeffs: FrozenCoeffs) -> float:
    """F(r) = x*phi + sqrt((x*phi)^2 + 4(x*vartheta + eps_ac)) with
    x = e^(-l*r*theta). OFF-state masses are omitted: they do not move with
    r, so they shift F without moving its minimizer."""
    if r <= 0:
        raise DomainError("r must be positive")
    x = math.exp(-coeffs.l * r * coeffs.theta)
    xp = x * coeffs.phi
    return xp + math.sqrt(xp * xp + 4.0 * (x * coeffs.vartheta + coeffs.eps_ac))


def analytic_gradient_n1(r: float, coeffs: FrozenCoeffs,
                         variant: str = "chain_rule") -> float:
    """dF/dr with frozen coefficients.

    `chain_rule` is the exact derivative of cost_n1:
        -l·theta·x·phi - l·theta·x·(x·phi^2 + 2·vartheta)/sqrt(G),
    G = (x·phi)^2 + 4(x·vartheta + eps_ac). The `printed` variant replaces
    x·phi^2 by x·phi inside the bracket; it is kept for comparison and fails
    the finite-difference check whenever phi differs from 1.
    """
    if r <= 0:
        raise DomainError("r must be positive")
    if variant not in ("chain_rule", "printed"):
        raise DomainError("variant must be 'chain_rule' or 'printed'")
    lt = coeffs.l * coeffs.theta
    x = math.exp(-lt * r)
    g = (x * coeffs.phi) ** 2 + 4.0 * (x * coeffs.vartheta + coeffs.eps_ac)
    if g == 0.0:
        # phi = vartheta = eps_ac = 0: F is identically zero.
        return 0.0
    if variant == "chain_rule":
        bracket = x * coeffs.phi**2 + 2.0 * coeffs.vartheta
    else:
        bracket = x * coeffs.phi + 2.0 * coeffs.vartheta
    return -lt * x * coeffs.phi - lt * x * bracket / math.sqrt(g)


@dataclass
class GDResult:
    """Optimizer outcome; unpacks as (r_star, ec_star, trace)."""

    r_star: float
    ec_star: float
    trace: list = field(default_factory=list)
    converged: bool = False
    aborted: bool = False
    message: str = ""

    def __iter__(self):
        return iter((self.r_star, self.ec_star, self.trace))


def gd_optimize(objective, config: GDConfig, gradient=None) -> GDResult:
    """Maximize objective(r) over r >= r_min by gradient ascent.

    The gradient is the central difference of the objective unless an
    explicit callable is supplied (used for the frozen analytic mode). Steps
    that do not improve the objective are halved up to 30 times before the
    search stops. A non-finite objective value aborts, returning the trace
    accumulated so far.
    """
    r = config.r_init
    trace = []

    def evaluate(x: float) -> float:
        return float(objective(x))

    f = evaluate(r)
    if not math.isfinite(f):
        return GDResult(r, f, [(0, r, f, math.nan, 0.0)], aborted=True,
                        message="objective not finite at r_init")
    best_r, best_f = r, f
    converged = False
    message = "max_iters reached"
    for it in range(1, config.max_iters + 1):
        if gradient is not None:
            grad = float(gradient(r))
        else:
            h = config.fd_step
            lo = max(config.r_min, r - h)
            hi = r + h
            f_hi = evaluate(hi)
            f_lo = evaluate(lo)
            if not (math.isfinite(f_hi) and math.isfinite(f_lo)):
                return GDResult(best_r, best_f, trace, aborted=True,
                                message=f"objective not finite near r={r:.6g}")
            grad = (f_hi - f_lo) / (hi - lo)
        trace.append((it, r, f, grad, config.step_omega))
        if abs(grad) < config.grad_tol:
            converged = True
            message = "gradient below tolerance"
            break
        step = config.step_omega
        moved = False
        pinned = False
        for _ in range(30):
            cand = max(config.r_min, r + step * grad)
            if cand == r:
                # Projection (or step underflow) produced no movement;
                # nothing further to gain in this direction.
                pinned = True
                break
            f_cand = evaluate(cand)
            if not math.isfinite(f_cand):
                return GDResult(best_r, best_f, trace, aborted=True,
                                message=f"objective not finite at r={cand:.6g}")
            if f_cand > f:
                r, f = cand, f_cand
                moved = True
                break
            step *= 0.5
        if pinned:
            converged = True
            message = "pinned at the feasible boundary"
            break
        if not moved:
            converged = True
            message = "no improving step"
            break
        if f > best_f:
            best_r, best_f = r, f
    return GDResult(best_r, best_f, trace, converged=converged, message=message)


@dataclass
class GridResult:
    """Grid-search outcome; unpacks as (r_star, ec_star, curve)."""

    r_star: float
    ec_star: float
    curve: np.ndarray

    def __iter__(self):
        return iter((self.r_star, self.ec_star, self.curve))


def grid_search(objective, r_lo: float, r_hi: float, steps: int) -> GridResult:
    """Exhaustive argmax over a uniform grid; the full (r, value) curve is
    returned for CSV emission. Ties resolve to the smallest rate."""
    if not r_lo < r_hi:
        raise DomainError("need r_lo < r_hi")
    if steps < 2:
        raise DomainError("need at least 2 grid points")
    grid = np.linspace(r_lo, r_hi, steps)
    values = np.array([float(objective(r)) for r in grid])
    if not np.all(np.isfinite(values)):
        raise DegenerateError("objective not finite on the grid")
    k = int(np.argmax(values))
    curve = np.column_stack([grid, values])
    return GridResult(float(grid[k]), float(values[k]), curve)


if __name__ == "__main__":
    coeffs = FrozenCoeffs(phi=0.5, vartheta=0.2, eps_ac=0.1, l=100, theta=0.01)
    for r in (0.5, 1.0, 5.0, 10.0):
        fd = (cost_n1(r + 1e-6, coeffs) - cost_n1(r - 1e-6, coeffs)) / 2e-6
        an = analytic_gradient_n1(r, coeffs)
        print(f"r={r}: F={cost_n1(r, coeffs):.6f} dF={an:.6f} fd={fd:.6f}")
    toy = gd_optimize(lambda r: -(r - 5.0) ** 2, GDConfig(r_init=1.0, step_omega=0.2))
    print("toy argmax:", toy.r_star, toy.ec_star)
