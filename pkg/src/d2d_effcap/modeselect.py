"""Ternary hypothesis test for communication-mode selection.

The transmitter picks the mode (direct / micro-relayed / macro-relayed) whose
measured pathloss is smallest. Measurements are modeled as N(L, sigma^2) in
dB; with equal variances the pairwise likelihood-ratio thresholds reduce to
midpoints of adjacent sorted means, which partitions the measurement axis
into three decision regions. This module computes the per-hypothesis
correct-detection and error probabilities and the stationary selection
probabilities P(H_i), plus the pilot-based pathloss estimator those
measurements abstract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .channel import SystemParams
from .errors import DegenerateError, DomainError

# Hypothesis order everywhere: index 0 = direct, 1 = micro-relayed (mC),
# 2 = macro-relayed (MC).
HYPOTHESES = ("H0", "H1", "H2")


def q_function(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x) = erfc(x/sqrt(2))/2."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(x / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NoisyPathlossTriple:
    """One noisy measurement (dB) of each candidate link's pathloss."""

    lhat_d: float
    lhat_mc: float
    lhat_MC: float
    sigma: float
    m_pilots: int = 1

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError("sigma must be nonnegative")
        if self.m_pilots < 1:
            raise DomainError("m_pilots must be >= 1")


@dataclass(frozen=True)
class DetectionProfile:
    """Detection/error probabilities of the ternary test, hypothesis-indexed.

    `thresholds` are the (C_AB, C_BC) decision boundaries in dB over the
    sorted losses. `pd[i]`/`pe[i]` are the correct-detection and error
    probabilities given hypothesis i is truly best. `sort_permutation[k]`
    names the hypothesis sitting at sorted position k (A=0, B=1, C=2).
    `confusion[y, i]` is P(select H_i | H_y truly best); rows sum to 1.
    """

    thresholds: tuple
    pd: tuple
    pe: tuple
    sort_permutation: tuple
    confusion: tuple

    def confusion_matrix(self) -> np.ndarray:
        return np.array(self.confusion, dtype=float)


def estimate_pathloss(true_loss_linear: float, params: SystemParams, m_pilots: int,
                      rng: np.random.Generator, noise_std: float = 0.0,
                      unit_fading: bool = False):
    """Pilot-based pathloss estimate L_hat = P_hat_R / P_T.

    Simulates m unit-modulus pilots y(i) = sqrt(P_T)*L*Z(i)*x(i) + n(i) with
    Rayleigh fading Z (E|Z|^2 = 1) and complex Gaussian noise of standard
    deviation `noise_std` per complex dimension pair (total variance
    noise_std^2), then averages |y|^2. Note this estimates L^2 (plus a noise
    offset) rather than L; the hypothesis-test layer instead consumes the
    N(L, sigma^2) dB abstraction with sigma supplied directly.
    `unit_fading` pins |Z| = 1 (degenerate channel) for calibration checks.
    """
    if m_pilots < 1:
        raise DomainError("m_pilots must be >= 1")
    if params.p_dt <= 0:
        raise DomainError("transmit power must be positive")
    p_t = params.p_dt
    # Complex amplitudes: Z Rayleigh with unit mean-square, x unit modulus.
    if unit_fading:
        z = np.ones(m_pilots, dtype=complex)
    else:
        z = (rng.standard_normal(m_pilots) + 1j * rng.standard_normal(m_pilots)) / math.sqrt(2.0)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=m_pilots)
    x = np.exp(1j * phase)
    noise = (
        noise_std
        * (rng.standard_normal(m_pilots) + 1j * rng.standard_normal(m_pilots))
        / math.sqrt(2.0)
    )
    y = math.sqrt(p_t) * true_loss_linear * z * x + noise
    p_r = np.mean(np.abs(y) ** 2)
    return p_r / p_t


def _require_sorted(sorted_losses) -> tuple:
    l_a, l_b, l_c = (float(v) for v in sorted_losses)
    if not (l_a < l_b < l_c):
        if l_a == l_b or l_b == l_c or l_a == l_c:
            raise DegenerateError("tied pathlosses leave the decision regions undefined")
        raise DomainError("losses must be sorted ascending (L_A < L_B < L_C)")
    return l_a, l_b, l_c


def compute_thresholds(sorted_losses, sigma: float) -> tuple:
    """Decision boundaries between adjacent sorted hypotheses.

    For equal-variance Gaussian measurements the pairwise log-likelihood
    ratio test reduces to the midpoint of the two means, independent of
    sigma. The sigma argument is kept so callers state the model they are
    thresholding.
    """
    l_a, l_b, l_c = _require_sorted(sorted_losses)
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    return (0.5 * (l_a + l_b), 0.5 * (l_b + l_c))


def sorted_confusion_matrix(sorted_losses, sigma: float, thresholds=None) -> np.ndarray:
    """T[s, s'] = P(measurement of the link at sorted position s is classified
    into region s'). Rows sum to 1; the diagonal holds the detection
    probabilities. sigma=0 returns the identity (perfect separation)."""
    l_a, l_b, l_c = _require_sorted(sorted_losses)
    if thresholds is None:
        thresholds = compute_thresholds(sorted_losses, sigma)
    c_ab, c_bc = thresholds
    if sigma == 0:
        return np.eye(3)
    t = np.empty((3, 3))
    for s, loss in enumerate((l_a, l_b, l_c)):
        left = q_function((c_ab - loss) / sigma)   # P(measurement > C_AB)
        right = q_function((c_bc - loss) / sigma)  # P(measurement > C_BC)
        t[s, 0] = 1.0 - left
        t[s, 1] = left - right
        t[s, 2] = right
    return t


def detection_probabilities(sorted_losses, sigma: float, thresholds=None) -> tuple:
    """Sorted-domain correct-detection probabilities (P_dA, P_dB, P_dC).

    P_dA = 1 - Q((C_AB-L_A)/sigma),
    P_dB = Q((C_AB-L_B)/sigma) - Q((C_BC-L_B)/sigma),
    P_dC = Q((C_BC-L_C)/sigma).
    """
    t = sorted_confusion_matrix(sorted_losses, sigma, thresholds)
    return tuple(float(v) for v in np.diag(t))


def map_to_hypotheses(unsorted_losses, sigma: float, thresholds=None) -> DetectionProfile:
    """Full detection profile for losses given in hypothesis order.

    Input order is (L_d, L_mc, L_MC) = (H0, H1, H2). The losses are sorted,
    the sorted-domain probabilities computed, and the inverse permutation
    applied so pd/pe/confusion are indexed by hypothesis.
    """
    losses = tuple(float(v) for v in unsorted_losses)
    if len(losses) != 3 or not all(math.isfinite(v) for v in losses):
        raise DomainError("expected three finite pathlosses")
    order = tuple(int(i) for i in np.argsort(losses, kind="stable"))  # sorted pos -> hypothesis
    sorted_losses = tuple(losses[i] for i in order)
    try:
        _require_sorted(sorted_losses)
    except DomainError:
        raise DegenerateError("tied pathlosses leave the decision regions undefined") from None
    if thresholds is None:
        thresholds = compute_thresholds(sorted_losses, sigma)
    t_sorted = sorted_confusion_matrix(sorted_losses, sigma, thresholds)

    pos = {hyp: k for k, hyp in enumerate(order)}  # hypothesis -> sorted pos
    confusion = np.empty((3, 3))
    for y in range(3):
        for i in range(3):
            confusion[y, i] = t_sorted[pos[y], pos[i]]
    pd = tuple(float(confusion[i, i]) for i in range(3))
    pe = tuple(1.0 - v for v in pd)
    return DetectionProfile(
        thresholds=tuple(float(c) for c in thresholds),
        pd=pd,
        pe=pe,
        sort_permutation=order,
        confusion=tuple(tuple(row) for row in confusion),
    )


def hypothesis_probability(profile: DetectionProfile, i: int, weighting: str = "uniform") -> float:
    """Stationary probability that hypothesis i is the selected mode.

    `uniform` weights the conditionals P(select H_i | true best H_y) by a
    uniform prior over which mode is truly best, so the three probabilities
    sum to 1. `paper-literal` reproduces the unweighted sum of conditionals,
    which is not a distribution (the three values can sum past 1).
    """
    if i not in (0, 1, 2):
        raise DomainError("hypothesis index must be 0, 1, or 2")
    column = [profile.confusion[y][i] for y in range(3)]
    if weighting == "uniform":
        return float(sum(column) / 3.0)
    if weighting == "paper-literal":
        return float(sum(column))
    raise DomainError(f"unknown weighting {weighting!r}")


def hypothesis_distribution(profile: DetectionProfile, weighting: str = "uniform") -> tuple:
    """All three selection probabilities as a tuple."""
    return tuple(hypothesis_probability(profile, i, weighting) for i in range(3))


if __name__ == "__main__":
    # Worked triple: direct 90.7 dB, micro 80.9 dB, macro 85.4 dB, sigma 1.
    profile = map_to_hypotheses((90.7, 80.9, 85.4), sigma=1.0)
    print("thresholds:", profile.thresholds)
    print("sorted position -> hypothesis:", profile.sort_permutation)
    for i, hyp in enumerate(HYPOTHESES):
        print(f"P_d,{hyp} = {profile.pd[i]:.6f}   P_e,{hyp} = {profile.pe[i]:.6f}")
    print("P(H_i) uniform:", hypothesis_distribution(profile))
