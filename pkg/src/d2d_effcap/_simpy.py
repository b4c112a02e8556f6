"""Pure-NumPy service-path state machine (fallback backend).

Consumes the same pre-generated per-block arrays as the compiled kernel and
performs the identical sequence of double-precision operations per element,
so the two backends produce bit-identical cumulative-service matrices. Keep
every arithmetic expression in literal sync with _simkernel.pyx.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfc


def run_chunk(mode_idx, u_gate, u_dec, info_inc, disp_inc, p_on, sched,
              lncorr, l_f, r, lr, log2e, sqrt2, out):
    """Advance every path through T blocks of HARQ attempts.

    Per block: scenario follows the attempt schedule; an ON gate appends the
    block's (information, dispersion) increments to the packet trace and the
    decoder fires with conditional failure probability zeta_new/zeta_prev;
    an OFF gate just consumes the attempt. Success drains l*r bits;
    exhausting the attempt budget resets the packet without drain.
    """
    P, T = mode_idx.shape
    M = sched.shape[0]
    rows = np.arange(P)
    attempt = np.ones(P, dtype=np.int64)
    m_on = np.zeros(P, dtype=np.int64)
    sum_info = np.zeros(P)
    sum_disp = np.zeros(P)
    zprev = np.ones(P)
    total = np.zeros(P)
    sched = np.asarray(sched, dtype=np.int64)
    for b in range(T):
        s_idx = sched[attempt - 1]
        m = mode_idx[:, b].astype(np.int64)
        on = u_gate[:, b] < p_on[s_idx, m]
        new_info = np.where(on, sum_info + info_inc[s_idx, rows, b], sum_info)
        new_disp = np.where(on, sum_disp + disp_inc[s_idx, rows, b], sum_disp)
        new_mon = np.where(on, m_on + 1, m_on)
        safe_mon = np.maximum(new_mon, 1) - 1
        num = new_info + lncorr[safe_mon] - r
        with np.errstate(divide="ignore", invalid="ignore"):
            den = log2e * np.sqrt(new_disp / l_f)
            z = 0.5 * erfc((num / den) / sqrt2)
        z = np.where(den == 0.0, np.where(num >= 0.0, 0.0, 1.0), z)
        positive = zprev > 0.0
        cond = np.where(positive, z / np.where(positive, zprev, 1.0), 0.0)
        cond = np.minimum(cond, 1.0)
        success = on & (u_dec[:, b] >= cond)
        fail_on = on & ~success
        total = np.where(success, total + lr, total)
        attempt_next = np.where(success, 1, attempt + 1)
        timeout = ~success & (attempt_next > M)
        reset = success | timeout
        sum_info = np.where(reset, 0.0, new_info)
        sum_disp = np.where(reset, 0.0, new_disp)
        m_on = np.where(reset, 0, new_mon)
        zprev = np.where(reset, 1.0, np.where(fail_on, z, zprev))
        attempt = np.where(reset, 1, attempt_next)
        out[:, b] = total
    return out
