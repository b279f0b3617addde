# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled SMO inner loop.

Same algorithm and floating-point operation order in the solver updates as
``_smo_py.smo_solve`` (the build disables FP contraction), so the two
backends walk the same iterates on the same inputs; see that module for
the algorithm description.  The hot loops run without the GIL so
cross-validation can train models on real threads.
"""
import numpy as np

cimport cython
from libc.math cimport INFINITY, fabs

cdef double TAU = 1e-12


def smo_solve(kernel, y, double c, double tol, int max_passes, long max_iter):
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[:, ::1] k_view = kernel
    cdef double[::1] y_view = y
    cdef Py_ssize_t m = y_view.shape[0]

    alpha_arr = np.zeros(m)
    grad_arr = np.full(m, -1.0)
    kdiag_arr = np.ascontiguousarray(np.diag(kernel))
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] grad = grad_arr
    cdef double[::1] kdiag = kdiag_arr

    cdef long iterations = 0
    cdef long n_clamped = 0
    cdef bint converged = False
    cdef int stalled_sweeps = 0
    cdef double last_obj = 0.0

    cdef Py_ssize_t i, j, t
    cdef double v_t, m_up, m_low, b_t, a_t, a_j, score_t, best_score
    cdef double d, d_room_i, d_room_j, dy, obj, gap
    cdef bint up_t, low_t, any_up, any_low

    with nogil:
        while iterations < max_iter:
            # working-set selection, first order: most violating i in I_up
            m_up = -INFINITY
            m_low = INFINITY
            i = -1
            any_up = False
            any_low = False
            for t in range(m):
                v_t = -(y_view[t] * grad[t])
                if y_view[t] > 0.0:
                    up_t = alpha[t] < c
                    low_t = alpha[t] > 0.0
                else:
                    up_t = alpha[t] > 0.0
                    low_t = alpha[t] < c
                if up_t:
                    any_up = True
                    if v_t > m_up:
                        m_up = v_t
                        i = t
                if low_t:
                    any_low = True
                    if v_t < m_low:
                        m_low = v_t
            if not any_up or not any_low:
                converged = True
                break
            if m_up - m_low <= tol:
                converged = True
                break

            # second order: j maximizing b^2/a among eligible I_low
            j = -1
            best_score = -INFINITY
            for t in range(m):
                v_t = -(y_view[t] * grad[t])
                if y_view[t] > 0.0:
                    low_t = alpha[t] > 0.0
                else:
                    low_t = alpha[t] < c
                if not low_t or not (v_t < m_up):
                    continue
                b_t = m_up - v_t
                a_t = (k_view[i, i] + kdiag[t]) - 2.0 * k_view[i, t]
                if a_t > 0.0:
                    score_t = (b_t * b_t) / a_t
                else:
                    score_t = (b_t * b_t) / TAU
                if score_t > best_score:
                    best_score = score_t
                    j = t
            if j == -1:
                converged = True
                break
            a_j = (k_view[i, i] + kdiag[j]) - 2.0 * k_view[i, j]
            if a_j <= 0.0:
                n_clamped += 1
                a_j = TAU

            d = (m_up - (-(y_view[j] * grad[j]))) / a_j
            d_room_i = (c - alpha[i]) if y_view[i] > 0.0 else alpha[i]
            d_room_j = alpha[j] if y_view[j] > 0.0 else (c - alpha[j])
            if d_room_i < d:
                d = d_room_i
            if d_room_j < d:
                d = d_room_j

            if d == d_room_i:
                alpha[i] = c if y_view[i] > 0.0 else 0.0
            else:
                alpha[i] = _boxed(alpha[i] + y_view[i] * d, c)
            if d == d_room_j:
                alpha[j] = 0.0 if y_view[j] > 0.0 else c
            else:
                alpha[j] = _boxed(alpha[j] - y_view[j] * d, c)
            for t in range(m):
                grad[t] = grad[t] + (d * y_view[t]) * (k_view[i, t] - k_view[j, t])
            iterations += 1

            if iterations % m == 0:
                obj = 0.0
                for t in range(m):
                    obj += alpha[t] * (grad[t] - 1.0)
                obj = 0.5 * obj
                if last_obj - obj <= 1e-12 * (1.0 + fabs(last_obj)):
                    stalled_sweeps += 1
                else:
                    stalled_sweeps = 0
                last_obj = obj
                if stalled_sweeps >= max_passes:
                    break

        # final KKT gap for reporting
        m_up = -INFINITY
        m_low = INFINITY
        for t in range(m):
            v_t = -(y_view[t] * grad[t])
            if y_view[t] > 0.0:
                up_t = alpha[t] < c
                low_t = alpha[t] > 0.0
            else:
                up_t = alpha[t] > 0.0
                low_t = alpha[t] < c
            if up_t and v_t > m_up:
                m_up = v_t
            if low_t and v_t < m_low:
                m_low = v_t
        gap = m_up - m_low
        if gap == INFINITY or gap == -INFINITY or gap != gap:
            gap = 0.0

    objective = float(np.sum(alpha_arr)) - 0.5 * float(np.sum(alpha_arr * (grad_arr + 1.0)))
    return {
        "alpha": alpha_arr,
        "iterations": iterations,
        "converged": bool(converged),
        "kkt_gap": gap,
        "n_clamped": n_clamped,
        "objective": objective,
        "grad": grad_arr,
    }


cdef inline double _boxed(double value, double c) nogil:
    if value < 0.0:
        return 0.0
    if value > c:
        return c
    return value
