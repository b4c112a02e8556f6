# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled service-path state machine (hot backend).

Mirror of _simpy.run_chunk: identical inputs, identical per-element
double-precision operation order, so results are bit-identical. The erfc
comes from the same library routine the NumPy fallback uses.
"""

from libc.math cimport sqrt
from scipy.special.cython_special cimport erfc


def run_chunk(const signed char[:, ::1] mode_idx,
              const double[:, ::1] u_gate,
              const double[:, ::1] u_dec,
              const double[:, :, ::1] info_inc,
              const double[:, :, ::1] disp_inc,
              const double[:, ::1] p_on,
              const signed char[::1] sched,
              const double[::1] lncorr,
              double l_f, double r, double lr,
              double log2e, double sqrt2,
              double[:, ::1] out):
    cdef Py_ssize_t P = mode_idx.shape[0]
    cdef Py_ssize_t T = mode_idx.shape[1]
    cdef Py_ssize_t M = sched.shape[0]
    cdef Py_ssize_t p, b
    cdef Py_ssize_t attempt, m_on, s, m
    cdef double sum_info, sum_disp, zprev, total
    cdef double num, den, z, cond

    for p in range(P):
        attempt = 1
        m_on = 0
        sum_info = 0.0
        sum_disp = 0.0
        zprev = 1.0
        total = 0.0
        for b in range(T):
            s = sched[attempt - 1]
            m = mode_idx[p, b]
            if u_gate[p, b] < p_on[s, m]:
                sum_info = sum_info + info_inc[s, p, b]
                sum_disp = sum_disp + disp_inc[s, p, b]
                m_on = m_on + 1
                num = (sum_info + lncorr[m_on - 1]) - r
                den = log2e * sqrt(sum_disp / l_f)
                if den == 0.0:
                    z = 0.0 if num >= 0.0 else 1.0
                else:
                    z = 0.5 * erfc((num / den) / sqrt2)
                if zprev > 0.0:
                    cond = z / zprev
                    if cond > 1.0:
                        cond = 1.0
                else:
                    cond = 0.0
                if u_dec[p, b] >= cond:
                    total = total + lr
                    attempt = 1
                    m_on = 0
                    sum_info = 0.0
                    sum_disp = 0.0
                    zprev = 1.0
                else:
                    zprev = z
                    attempt = attempt + 1
                    if attempt > M:
                        attempt = 1
                        m_on = 0
                        sum_info = 0.0
                        sum_disp = 0.0
                        zprev = 1.0
            else:
                attempt = attempt + 1
                if attempt > M:
                    attempt = 1
                    m_on = 0
                    sum_info = 0.0
                    sum_disp = 0.0
                    zprev = 1.0
            out[p, b] = total
    return out
