"""Pure-NumPy SMO solver: the fallback when the compiled core is absent.

Solves the soft-margin SVM dual
    min  0.5 * sum_st alpha_s alpha_t y_s y_t K_st - sum_s alpha_s
    s.t. 0 <= alpha_s <= C,  sum_s y_s alpha_s = 0
by pairwise coordinate descent with second-order working-set selection.
Stops when the maximal KKT violation (m_up - m_low) drops to ``tol``, when
``max_passes`` consecutive sweeps (a sweep is m iterations) make no
objective progress, or at the hard iteration cap.

Each elementwise formula is ordered to match the compiled core exactly
(which is built with FP contraction off), so both backends produce the
same iterates on the same inputs.
"""
from __future__ import annotations

import numpy as np

TAU = 1e-12


def smo_solve(kernel, y, c, tol, max_passes, max_iter):
    """Run SMO on a precomputed kernel matrix.

    Returns a dict with keys: alpha, iterations, converged, kkt_gap,
    n_clamped (second-derivative clamps applied to selected pairs),
    objective (dual objective sum(alpha) - 0.5 alpha' Q alpha), and sweeps.
    """
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    m = y.shape[0]
    kdiag = np.ascontiguousarray(np.diag(kernel))
    alpha = np.zeros(m)
    grad = np.full(m, -1.0)

    pos = y > 0.0
    neg = ~pos
    iterations = 0
    n_clamped = 0
    converged = False
    stalled_sweeps = 0
    last_obj = 0.0

    while iterations < max_iter:
        v = -(y * grad)
        at_upper = alpha >= c
        at_lower = alpha <= 0.0
        up = (pos & ~at_upper) | (neg & ~at_lower)
        low = (pos & ~at_lower) | (neg & ~at_upper)
        if not up.any() or not low.any():
            converged = True
            break
        v_up = np.where(up, v, -np.inf)
        i = int(np.argmax(v_up))
        m_up = v_up[i]
        m_low = float(np.min(np.where(low, v, np.inf)))
        if m_up - m_low <= tol:
            converged = True
            break

        ki = kernel[i]
        b_vec = m_up - v
        a_vec = (ki[i] + kdiag) - 2.0 * ki
        a_safe = np.where(a_vec > 0.0, a_vec, TAU)
        eligible = low & (v < m_up)
        score = np.where(eligible, (b_vec * b_vec) / a_safe, -np.inf)
        j = int(np.argmax(score))
        if not eligible[j]:
            converged = True
            break
        if a_vec[j] <= 0.0:
            n_clamped += 1

        # step d moves alpha_i by +y_i d and alpha_j by -y_j d; both
        # box-feasible directions are positive by working-set membership
        d = b_vec[j] / a_safe[j]
        d_room_i = (c - alpha[i]) if pos[i] else alpha[i]
        d_room_j = alpha[j] if pos[j] else (c - alpha[j])
        if d_room_i < d:
            d = d_room_i
        if d_room_j < d:
            d = d_room_j

        # a step that exhausts its room lands exactly on the bound
        if d == d_room_i:
            alpha[i] = c if pos[i] else 0.0
        else:
            alpha[i] = min(max(alpha[i] + y[i] * d, 0.0), c)
        if d == d_room_j:
            alpha[j] = 0.0 if pos[j] else c
        else:
            alpha[j] = min(max(alpha[j] - y[j] * d, 0.0), c)
        grad = grad + (d * y) * (ki - kernel[j])
        iterations += 1

        if iterations % m == 0:
            obj = 0.5 * float(np.sum(alpha * (grad - 1.0)))
            if last_obj - obj <= 1e-12 * (1.0 + abs(last_obj)):
                stalled_sweeps += 1
            else:
                stalled_sweeps = 0
            last_obj = obj
            if stalled_sweeps >= max_passes:
                break

    gap, _, _ = _kkt_state(kernel, y, c, alpha, grad)
    objective = float(np.sum(alpha)) - 0.5 * float(np.sum(alpha * (grad + 1.0)))
    return {
        "alpha": alpha,
        "iterations": iterations,
        "converged": converged,
        "kkt_gap": gap,
        "n_clamped": n_clamped,
        "objective": objective,
        "grad": grad,
    }


def _kkt_state(kernel, y, c, alpha, grad):
    """Final KKT gap and the bias bracket [m_up, m_low]."""
    v = -(y * grad)
    pos = y > 0.0
    neg = ~pos
    up = (pos & (alpha < c)) | (neg & (alpha > 0.0))
    low = (pos & (alpha > 0.0)) | (neg & (alpha < c))
    m_up = float(np.max(np.where(up, v, -np.inf))) if up.any() else -np.inf
    m_low = float(np.min(np.where(low, v, np.inf))) if low.any() else np.inf
    gap = m_up - m_low
    if not np.isfinite(gap):
        gap = 0.0
    return gap, m_up, m_low
