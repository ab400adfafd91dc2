"""Compiled exact solver for the single-battery daily scheduling LP.

The daily problem has one state (stored energy) and a stage cost that is
convex piecewise linear in the battery action, so every cost-to-go function
is convex piecewise linear on ``[0, capacity]``. The backward pass keeps each
cost-to-go as a list of (length, slope) segments in ascending slope order:

    W(y) = min_x V(x) + c(x - y)

is an infimal convolution, computed by merging two slope-sorted segment
lists. ``y = eta_self * x_prev`` then maps back to the previous state by a
rescale. The forward pass walks the stored merge for the realized ``y`` and
reads off how much of the step went into the state (V segments) versus the
action (c segments).
"""

from __future__ import annotations

import numpy as np
from numba import njit

H = 24
MAXSEG = 4 * H + 4


@njit(cache=True, nogil=True)
def _stage_segments(n, q, r, cmax, dmax, a, b, eps, out_len, out_slope):
    """Segments of c(u) over u in [-dmax, cmax], ascending in u.

    ``c(u) = q*[g]+ + r*[g]- + eps*|u|`` with ``g = n + a*[u]+ + b*[u]-``.
    Returns the number of segments written.
    """
    k = 0
    # discharge side, u in [-dmax, 0]: g = n + b*u
    if dmax > 0.0:
        if n > 0.0:
            kink = -n / b
            if kink > -dmax:
                # [-dmax, kink]: g < 0 ; [kink, 0]: g > 0
                out_len[k] = kink + dmax
                out_slope[k] = r * b - eps
                k += 1
                out_len[k] = -kink
                out_slope[k] = q * b - eps
                k += 1
            else:
                out_len[k] = dmax
                out_slope[k] = q * b - eps
                k += 1
        else:
            out_len[k] = dmax
            out_slope[k] = r * b - eps
            k += 1
    # charge side, u in [0, cmax]: g = n + a*u
    if cmax > 0.0:
        if n < 0.0:
            kink = -n / a
            if kink < cmax:
                out_len[k] = kink
                out_slope[k] = r * a + eps
                k += 1
                out_len[k] = cmax - kink
                out_slope[k] = q * a + eps
                k += 1
            else:
                out_len[k] = cmax
                out_slope[k] = r * a + eps
                k += 1
        else:
            out_len[k] = cmax
            out_slope[k] = q * a + eps
            k += 1
    return k


@njit(cache=True, nogil=True)
def _hour_cost(n, u, q, r, a, b):
    if u >= 0.0:
        g = n + a * u
    else:
        g = n + b * u
    if g >= 0.0:
        return q * g, g
    return r * g, g


@njit(cache=True, nogil=True)
def solve_day_kernel(
    n_plan, n_true, q, r, x0, xbar, cmax, dmax, a, b, eta_s, eps,
    u_out, x_out, g_out,
):
    """Plan on ``n_plan``, evaluate on ``n_true``; returns the realized cost.

    Writes the schedule, end-of-hour states and grid exchange in place.
    """
    m_len = np.empty((H, MAXSEG))
    m_tag = np.empty((H, MAXSEG), dtype=np.bool_)
    m_cnt = np.empty(H, dtype=np.int64)
    v_len = np.empty(MAXSEG)
    v_slope = np.empty(MAXSEG)
    c_len = np.empty(4)
    c_slope = np.empty(4)
    nv = 1
    v_len[0] = xbar
    v_slope[0] = 0.0
    t_len = np.empty(MAXSEG)
    t_slope = np.empty(MAXSEG)

    for h in range(H - 1, -1, -1):
        nc = _stage_segments(n_plan[h], q[h], r[h], cmax, dmax, a, b, eps, c_len, c_slope)
        # c_hat(s) = c(-s): reverse order, negate slopes
        iv = 0
        ic = nc - 1
        k = 0
        while iv < nv or ic >= 0:
            take_v = False
            if ic < 0:
                take_v = True
            elif iv < nv and v_slope[iv] <= -c_slope[ic]:
                take_v = True
            if take_v:
                t_len[k] = v_len[iv]
                t_slope[k] = v_slope[iv]
                m_tag[h, k] = True
                iv += 1
            else:
                t_len[k] = c_len[ic]
                t_slope[k] = -c_slope[ic]
                m_tag[h, k] = False
                ic -= 1
            m_len[h, k] = t_len[k]
            k += 1
        m_cnt[h] = k
        # keep y in [0, eta_s * xbar]; merged domain starts at -cmax
        lo = cmax
        span = eta_s * xbar
        nv = 0
        pos = 0.0
        for i in range(k):
            s0 = pos
            s1 = pos + t_len[i]
            pos = s1
            left = s0 if s0 > lo else lo
            right = s1 if s1 < lo + span else lo + span
            if right > left:
                v_len[nv] = (right - left) / eta_s
                v_slope[nv] = t_slope[i] * eta_s
                nv += 1
        if nv == 0:
            v_len[0] = 0.0
            v_slope[0] = 0.0
            nv = 1

    cost = 0.0
    x_prev = x0
    for h in range(H):
        y = eta_s * x_prev
        target = y + cmax
        pos = 0.0
        x = 0.0
        for i in range(m_cnt[h]):
            if pos >= target:
                break
            step = m_len[h, i]
            if pos + step > target:
                step = target - pos
            if m_tag[h, i]:
                x += step
            pos += step
        lo_x = y - dmax
        if lo_x < 0.0:
            lo_x = 0.0
        hi_x = y + cmax
        if hi_x > xbar:
            hi_x = xbar
        if x < lo_x:
            x = lo_x
        if x > hi_x:
            x = hi_x
        u = x - y
        c, g = _hour_cost(n_true[h], u, q[h], r[h], a, b)
        cost += c
        u_out[h] = u
        x_out[h] = x
        g_out[h] = g
        x_prev = x
    return cost


@njit(cache=True, nogil=True)
def run_year_kernel(
    n_plan, n_true, q, r, x0, xbar, cmax, dmax, a, b, eta_s, eps,
    u_out, x_out, g_out, daily_cost,
):
    """Chain daily solves over a year of flat hourly arrays; returns final state."""
    n_days = n_true.size // H
    x_start = x0
    for j in range(n_days):
        s = j * H
        e = s + H
        daily_cost[j] = solve_day_kernel(
            n_plan[s:e], n_true[s:e], q[s:e], r[s:e], x_start,
            xbar, cmax, dmax, a, b, eta_s, eps,
            u_out[s:e], x_out[s:e], g_out[s:e],
        )
        x_start = x_out[e - 1]
    return x_start
