"""Compiled inner loops of the lattice simulation.

The lattice is always handled as a 2-D box ``(n1, n2)`` (1-D lattices use
``n2 = 1``); sites are flattened row-major.  Rate families and responses are
passed as integer codes so the loop stays in nopython mode.
"""

import numpy as np
from numba import njit

FAM_TARGETING_INNOVATIVE = 0
FAM_COMPARING_INNOVATIVE = 1
FAM_TARGETING_NON_INNOVATIVE = 2
FAM_COMPARING_NON_INNOVATIVE = 3
FAM_LOGIT = 4

RESP_POSITIVE_PART = 0
RESP_REGULARIZED = 1
RESP_EXPONENTIAL = 2
RESP_METROPOLIS = 3
RESP_AFFINE = 4

STATUS_DONE = 0
STATUS_BUFFER_FULL = 1
STATUS_BOUND_VIOLATED = 2


@njit(cache=True)
def _response(code, kappa, ra, rb, s):
    if code == RESP_POSITIVE_PART:
        return s if s > 0.0 else 0.0
    if code == RESP_REGULARIZED:
        pos = s if s > 0.0 else 0.0
        return pos + np.log1p(np.exp(-kappa * abs(s))) / kappa
    if code == RESP_EXPONENTIAL:
        return np.exp(min(s, 700.0))
    if code == RESP_METROPOLIS:
        return np.exp(min(s, 0.0))
    v = ra + rb * s
    return v if v > 0.0 else 0.0


@njit(cache=True)
def site_rate(fam, resp, kappa, ra, rb, A, m, i, k):
    """Rate for an agent with strategy ``i`` and local field ``m`` to switch to ``k``."""
    S = A.shape[0]
    if fam == FAM_LOGIT:
        umax = -np.inf
        uk = 0.0
        for j in range(S):
            u = 0.0
            for l in range(S):
                u += A[j, l] * m[l]
            if j == k:
                uk = u
            if u > umax:
                umax = u
        tot = 0.0
        for j in range(S):
            u = 0.0
            for l in range(S):
                u += A[j, l] * m[l]
            tot += np.exp(u - umax)
        return np.exp(uk - umax) / tot
    uk = 0.0
    ui = 0.0
    for l in range(S):
        uk += A[k, l] * m[l]
        ui += A[i, l] * m[l]
    if fam == FAM_TARGETING_INNOVATIVE or fam == FAM_TARGETING_NON_INNOVATIVE:
        r = _response(resp, kappa, ra, rb, uk)
    else:
        r = _response(resp, kappa, ra, rb, uk - ui)
    if fam == FAM_TARGETING_NON_INNOVATIVE or fam == FAM_COMPARING_NON_INNOVATIVE:
        r *= m[k]
    return r


@njit(cache=True)
def flip(sigma, field, x, new, n1, n2, periodic, dz1, dz2, w):
    """Set ``sigma[x] = new`` and update the local field of every site in the support."""
    old = sigma[x]
    if old == new:
        return
    sigma[x] = new
    x1 = x // n2
    x2 = x - x1 * n2
    for s in range(w.shape[0]):
        y1 = x1 + dz1[s]
        y2 = x2 + dz2[s]
        if periodic:
            y1 %= n1
            y2 %= n2
        elif y1 < 0 or y1 >= n1 or y2 < 0 or y2 >= n2:
            continue
        y = y1 * n2 + y2
        field[y, old] -= w[s]
        field[y, new] += w[s]


@njit(cache=True)
def full_field(sigma, S, n1, n2, periodic, dz1, dz2, w):
    """``field[x, l] = sum_y W(x - y) [sigma(y) == l]`` from scratch."""
    n = n1 * n2
    field = np.zeros((n, S))
    for x in range(n):
        x1 = x // n2
        x2 = x - x1 * n2
        for s in range(w.shape[0]):
            y1 = x1 + dz1[s]
            y2 = x2 + dz2[s]
            if periodic:
                y1 %= n1
                y2 %= n2
            elif y1 < 0 or y1 >= n1 or y2 < 0 or y2 >= n2:
                continue
            field[x, sigma[y1 * n2 + y2]] += w[s]
    return field


@njit(cache=True, nogil=True)
def run_thinning(sigma, field, active, n1, n2, periodic, dz1, dz2, w, A,
                 fam, resp, kappa, ra, rb, M, t0, t_end, rng,
                 ev_t, ev_x, ev_k, stats):
    """Uniformized simulation from ``t0`` to ``t_end``.

    Candidates ``(x, k)`` arrive at total rate ``|active| * S * M`` and are accepted
    with probability ``c(x, sigma, k) / M``.  Accepted events with ``k != sigma[x]``
    are recorded.  Returns ``(status, time_reached, n_recorded, offending_rate)``;
    ``stats`` accumulates ``[candidates, accepted, null_events]``.
    """
    S = A.shape[0]
    n_active = active.shape[0]
    total = n_active * S * M
    t = t0
    n_ev = 0
    cap = ev_t.shape[0]
    if n_active == 0 or total <= 0.0:
        return STATUS_DONE, t_end, 0, 0.0
    while True:
        t += rng.exponential(1.0 / total)
        if t > t_end:
            return STATUS_DONE, t_end, n_ev, 0.0
        x = active[rng.integers(0, n_active)]
        k = rng.integers(0, S)
        stats[0] += 1
        i = sigma[x]
        if k == i:
            # null candidate: the generator has no self-jumps
            stats[2] += 1
            continue
        c = site_rate(fam, resp, kappa, ra, rb, A, field[x], i, k)
        if c > M:
            return STATUS_BOUND_VIOLATED, t, n_ev, c
        if rng.random() * M < c:
            stats[1] += 1
            flip(sigma, field, x, k, n1, n2, periodic, dz1, dz2, w)
            ev_t[n_ev] = t
            ev_x[n_ev] = x
            ev_k[n_ev] = k
            n_ev += 1
            if n_ev == cap:
                return STATUS_BUFFER_FULL, t, n_ev, 0.0


@njit(cache=True, nogil=True)
def run_lumped(counts, A, fam, resp, kappa, ra, rb, t0, t_end, rng,
               ev_t, ev_j, ev_k):
    """Gillespie simulation of the aggregate chain on integer counts.

    Jump ``j -> k`` has rate ``counts[j] * c(j, k, eta)`` with ``eta = counts / n``.
    Returns ``(status, time_reached, n_recorded)``.
    """
    S = counts.shape[0]
    n = 0
    for j in range(S):
        n += counts[j]
    eta = np.empty(S)
    rates = np.empty(S * S)
    t = t0
    n_ev = 0
    cap = ev_t.shape[0]
    while True:
        for j in range(S):
            eta[j] = counts[j] / n
        total = 0.0
        for j in range(S):
            for k in range(S):
                r = 0.0
                if k != j and counts[j] > 0:
                    r = counts[j] * site_rate(fam, resp, kappa, ra, rb, A, eta, j, k)
                rates[j * S + k] = r
                total += r
        if total <= 0.0:
            return STATUS_DONE, t_end, n_ev
        t += rng.exponential(1.0 / total)
        if t > t_end:
            return STATUS_DONE, t_end, n_ev
        u = rng.random() * total
        acc = 0.0
        pick = S * S - 1
        for q in range(S * S):
            acc += rates[q]
            if u < acc:
                pick = q
                break
        while rates[pick] <= 0.0:
            pick -= 1
        j = pick // S
        k = pick - j * S
        counts[j] -= 1
        counts[k] += 1
        ev_t[n_ev] = t
        ev_j[n_ev] = j
        ev_k[n_ev] = k
        n_ev += 1
        if n_ev == cap:
            return STATUS_BUFFER_FULL, t, n_ev
