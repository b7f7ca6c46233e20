"""Inner loops: level reduction for the truncated QBD, the embedded-chain
accumulations, and the event-driven simulator.

Every function here is written in the numba-compatible subset. The
``*_py`` names are the uncompiled sources; the public names are compiled or
not depending on ``MMSP_OFFLOAD_BACKEND`` (see ``_accel``).
"""
from __future__ import annotations

import numpy as np

from ._accel import jit

# simulator trace event codes
EV_ARRIVAL = 0
EV_DEPARTURE = 1
EV_0_TO_1 = 2
EV_0_TO_2 = 3
EV_1_TO_2 = 4
EV_2_TO_0 = 5

STATUS_OK = 0
STATUS_OUT_OF_ARRIVALS = 1
STATUS_OUT_OF_MODULATION = 2


def solve_levels_py(lam, mu, modgen, n_max):
    """Stationary vector of the QBD truncated at level ``n_max``.

    Linear level reduction from the top: x_n = x_{n-1} R_n with
    R_n = lam * (-(L_n + R_{n+1} D))^{-1}, then x_0 from the level-0
    generator via the matrix-tree formula. Returns (p, R_1): p is normalized
    and R_1 approximates the minimal rate matrix when n_max is large.
    """
    rmat = np.zeros((n_max + 2, 3, 3))
    a = np.empty((3, 3))
    for n in range(n_max, 0, -1):
        # a = -(L_n + R_{n+1} D); level n_max has no outgoing arrivals
        arr = lam if n < n_max else 0.0
        for i in range(3):
            for k in range(3):
                a[i, k] = -modgen[i, k] - rmat[n + 1, i, k] * mu[k]
            a[i, i] += arr + mu[i]
        c00 = a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
        c01 = a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2]
        c02 = a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]
        s = lam / (a[0, 0] * c00 + a[0, 1] * c01 + a[0, 2] * c02)
        rmat[n, 0, 0] = c00 * s
        rmat[n, 1, 0] = c01 * s
        rmat[n, 2, 0] = c02 * s
        rmat[n, 0, 1] = (a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2]) * s
        rmat[n, 1, 1] = (a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]) * s
        rmat[n, 2, 1] = (a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1]) * s
        rmat[n, 0, 2] = (a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]) * s
        rmat[n, 1, 2] = (a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]) * s
        rmat[n, 2, 2] = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]) * s
        # inverse of a nonsingular M-matrix is nonnegative; drop roundoff
        for i in range(3):
            for k in range(3):
                if rmat[n, i, k] < 0.0:
                    rmat[n, i, k] = 0.0

    # level 0 generator b = modgen - lam I + R_1 D (rows sum to zero)
    b = np.empty((3, 3))
    for i in range(3):
        for k in range(3):
            b[i, k] = modgen[i, k] + rmat[1, i, k] * mu[k]
        if n_max >= 1:
            b[i, i] -= lam
    p = np.zeros((n_max + 1, 3))
    # principal 2x2 minors of -b count spanning in-trees rooted at each state
    p[0, 0] = b[1, 1] * b[2, 2] - b[1, 2] * b[2, 1]
    p[0, 1] = b[0, 0] * b[2, 2] - b[0, 2] * b[2, 0]
    p[0, 2] = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
    for j in range(3):
        if p[0, j] < 0.0:
            p[0, j] = 0.0
    for n in range(1, n_max + 1):
        for k in range(3):
            s = 0.0
            for i in range(3):
                s += p[n - 1, i] * rmat[n, i, k]
            p[n, k] = s
    total = 0.0
    for n in range(n_max + 1):
        for j in range(3):
            total += p[n, j]
    for n in range(n_max + 1):
        for j in range(3):
            p[n, j] /= total
    return p, rmat[1].copy()


def start_service_sum_py(qhat, p):
    """sum_n Qhat^n p_n, accumulated backwards (Horner) without matrix powers."""
    acc = np.zeros(3)
    tmp = np.zeros(3)
    for n in range(p.shape[0] - 1, -1, -1):
        for i in range(3):
            s = 0.0
            for k in range(3):
                s += qhat[i, k] * acc[k]
            tmp[i] = s + p[n, i]
        for i in range(3):
            acc[i] = tmp[i]
    return acc


def waiting_time_sum_py(qhat, et, p):
    """sum_{n,j} p_{n,j} W_{n,j} with W_{n,j} = sum_{m<n} (Qhat^T)^m ET at j.

    The elapse-time row vector r_m = (Qhat^T)^m ET is advanced one step at a
    time and paired with the tail mass c_{m+1} = sum_{n>m} p_n.
    """
    n_lev = p.shape[0]
    tail = np.zeros((n_lev + 1, 3))
    for n in range(n_lev - 1, -1, -1):
        for j in range(3):
            tail[n, j] = tail[n + 1, j] + p[n, j]
    r = et.copy()
    nxt = np.zeros(3)
    w = 0.0
    for m in range(n_lev - 1):
        for j in range(3):
            w += r[j] * tail[m + 1, j]
        for j in range(3):
            s = 0.0
            for i in range(3):
                s += qhat[i, j] * r[i]
            nxt[j] = s
        for j in range(3):
            r[j] = nxt[j]
    return w


def simulate_py(arr_t, work, hold, branch, f_d, f_c, f_f, mu, j0,
                n_target, t_end, warm_idx, t_warm, batch_size,
                state_time, empty_time, scalars, b_delay, b_count, b_qsum,
                b_qcnt, seen, trace_t, trace_ev, trace_n, trace_j):
    """Event-driven M/MMSP/1 run on pre-drawn variates.

    Service is work based: the head-of-line file holds remaining work that
    drains at mu[j]. Stops after ``n_target`` completions or at ``t_end``.
    Statistics cover files with index >= warm_idx and time after t_warm.
    Returns a status code; results are written into the output arrays.
    """
    n_arr = arr_t.shape[0]
    n_mod = hold.shape[0]
    n_batches = b_delay.shape[0]
    n_hist = seen.shape[0]
    cap = trace_t.shape[0]
    p_01 = f_d / (f_d + f_c)

    t = 0.0
    j = j0
    k = 0
    if j == 0:
        next_mod = hold[0] / (f_d + f_c)
    elif j == 1:
        next_mod = hold[0] / f_c
    else:
        next_mod = hold[0] / f_f
    ia = 0
    ic = 0
    rem = 0.0
    hol_start = 0.0
    sum_delay = 0.0
    sum_wait = 0.0
    n_counted = 0
    n_wifi = 0
    area = 0.0
    n_seen = 0
    n_tr = 0
    status = STATUS_OK
    horizon = t_end - t_warm

    while True:
        n = ia - ic
        if ia >= n_arr:
            status = STATUS_OUT_OF_ARRIVALS
            break
        next_arr = arr_t[ia]
        rate = mu[j]
        if n > 0 and rate > 0.0:
            t_dep = t + rem / rate
        else:
            t_dep = np.inf
        if t_dep <= next_arr and t_dep <= next_mod:
            ev = EV_DEPARTURE
            t_next = t_dep
        elif next_arr <= next_mod:
            ev = EV_ARRIVAL
            t_next = next_arr
        else:
            ev = -2
            t_next = next_mod
        if t_next > t_end:
            t_next = t_end
            ev = -1

        lo = t if t > t_warm else t_warm
        if t_next > lo:
            dt = t_next - lo
            state_time[j] += dt
            area += n * dt
            if n == 0:
                empty_time[j] += dt
        if n > 0 and rate > 0.0:
            rem -= rate * (t_next - t)
        t = t_next
        if ev == -1:
            break

        if ev == EV_DEPARTURE:
            rem = 0.0
            if ic >= warm_idx:
                delay = t - arr_t[ic]
                sum_delay += delay
                sum_wait += hol_start - arr_t[ic]
                n_counted += 1
                if j == 2:
                    n_wifi += 1
                if batch_size > 0:
                    b = (ic - warm_idx) // batch_size
                else:
                    b = int((t - t_warm) / horizon * n_batches)
                if b >= n_batches:
                    b = n_batches - 1
                b_delay[b] += delay
                b_count[b] += 1.0
            ic += 1
            if ia > ic:
                rem = work[ic]
                hol_start = t
        elif ev == EV_ARRIVAL:
            if ia >= warm_idx:
                n_seen += 1
                h = n if n < n_hist else n_hist - 1
                seen[h, j] += 1.0
                if batch_size > 0:
                    b = (ia - warm_idx) // batch_size
                else:
                    b = int((t - t_warm) / horizon * n_batches)
                if b >= n_batches:
                    b = n_batches - 1
                b_qsum[b] += n
                b_qcnt[b] += 1.0
            if n == 0:
                rem = work[ia]
                hol_start = t
            ia += 1
        else:
            if j == 0:
                if branch[k] < p_01:
                    j = 1
                    ev = EV_0_TO_1
                else:
                    j = 2
                    ev = EV_0_TO_2
            elif j == 1:
                j = 2
                ev = EV_1_TO_2
            else:
                j = 0
                ev = EV_2_TO_0
            k += 1
            if k >= n_mod:
                status = STATUS_OUT_OF_MODULATION
                break
            if j == 0:
                next_mod = t + hold[k] / (f_d + f_c)
            elif j == 1:
                next_mod = t + hold[k] / f_c
            else:
                next_mod = t + hold[k] / f_f

        if n_tr < cap:
            trace_t[n_tr] = t
            trace_ev[n_tr] = ev
            trace_n[n_tr] = ia - ic
            trace_j[n_tr] = j
            n_tr += 1
        if ev == EV_DEPARTURE and ic >= n_target:
            break

    scalars[0] = sum_delay
    scalars[1] = sum_wait
    scalars[2] = n_counted
    scalars[3] = n_wifi
    scalars[4] = area
    scalars[5] = t
    scalars[6] = t - t_warm if t > t_warm else 0.0
    scalars[7] = n_seen
    scalars[8] = n_tr
    scalars[9] = ic
    return status


solve_levels = jit(solve_levels_py)
start_service_sum = jit(start_service_sum_py)
waiting_time_sum = jit(waiting_time_sum_py)
simulate = jit(simulate_py)
