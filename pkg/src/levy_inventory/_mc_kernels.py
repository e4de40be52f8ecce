"""Compiled path simulators used by mc_simulator.

Paths advance with exact Gaussian increments.  Far from every active
boundary the step is ``coarse``; a coarse step whose endpoint lands near a
boundary is refilled as a Brownian bridge on the ``fine`` grid, and steps
that start near a boundary are fine from the outset.  Large jumps arrive at
exact exponential times.  Boundaries are therefore monitored on the fine
grid throughout, while most of the path costs one normal per coarse step.

Per path the kernel returns four discounted accumulators:

    0  running cost  int exp(-q t) f(U_t) dt        (up to the stopping time)
    1  event weight  sum exp(-q T_i)  or  int exp(-q t) dL_t
    2  event size    sum exp(-q T_i) u_i  or  exp(-q tau) X_tau
    3  stop flag     1 if the stopping time occurred before the horizon
"""

import math

import numpy as np
from numba import njit, prange

SS = 0
BARRIER = 1
FIRST_PASSAGE = 2
TWO_SIDED = 3


@njit(cache=True)
def _jump_size(u, lam, log_tail, log_z):
    # invert the tail mass: find z with nu([z, inf)) = u * lam
    target = math.log(u * lam)
    lo, hi = 0, log_tail.size - 1
    if target >= log_tail[0]:
        return math.exp(log_z[0])
    if target <= log_tail[hi]:
        return math.exp(log_z[hi])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if log_tail[mid] > target:
            lo = mid
        else:
            hi = mid
    w = (target - log_tail[lo]) / (log_tail[hi] - log_tail[lo])
    return math.exp(log_z[lo] + w * (log_z[hi] - log_z[lo]))


@njit(cache=True)
def _segment_cost(y0, y1, h, var, fc0, fc1, fc2):
    # expected integral of f over a Brownian bridge from y0 to y1 of length h
    return h * (fc0 + fc1 * 0.5 * (y0 + y1)
                + fc2 * ((y0 * y0 + y0 * y1 + y1 * y1) / 3.0 + var * h / 6.0))


@njit(cache=True)
def _path(x0, mode, lower, upper, level_S, q, drift, sd, lam, log_tail, log_z,
          fine, coarse, horizon, fc0, fc1, fc2, clamp, sign):
    out = np.zeros(4)
    var = sd * sd
    u = x0
    t = 0.0
    guard = 3.5 * sd * math.sqrt(coarse)
    two_sided = mode == TWO_SIDED

    # immediate action at time zero
    if u < lower or (mode >= FIRST_PASSAGE and u <= lower):
        if mode == SS:
            out[1] += 1.0
            out[2] += level_S - u
            u = level_S
        elif mode == BARRIER:
            out[1] += lower - u
            u = lower
        else:
            out[2] = u if mode == FIRST_PASSAGE else 0.0
            out[1] = 1.0 if mode == FIRST_PASSAGE else 0.0
            out[3] = 1.0
            return out
    if two_sided and u >= upper:
        out[1] = 1.0
        out[3] = 1.0
        return out

    next_jump = np.inf
    if lam > 0.0:
        v = np.random.random()
        if sign < 0:
            v = 1.0 - v
        next_jump = -math.log(1.0 - v) / lam

    while t < horizon:
        dist = u - lower
        if two_sided:
            dist = min(dist, upper - u)
        near = dist < guard
        h = fine if near else coarse
        to_jump = next_jump - t
        jump_now = to_jump <= h
        if jump_now:
            h = to_jump
        if horizon - t < h:
            h = horizon - t
            jump_now = False
        z = sign * np.random.standard_normal()
        u1 = u + drift * h + sd * math.sqrt(h) * z
        end_near = (u1 - lower < guard) or (two_sided and upper - u1 < guard)

        event = False
        ev_level = 0.0
        ev_time = 0.0
        if (not near) and end_near and h > fine:
            # refill the step as a Brownian bridge on the fine grid
            n = int(math.ceil(h / fine))
            dt = h / n
            prev = u
            tt = t
            for i in range(1, n + 1):
                if i < n:
                    rem = h - (i - 1) * dt
                    zz = sign * np.random.standard_normal()
                    cur = prev + (u1 - prev) * dt / rem + sd * math.sqrt(dt * (rem - dt) / rem) * zz
                else:
                    cur = u1
                crossed = cur < lower or (two_sided and cur > upper)
                seg_end = cur
                if crossed and clamp:
                    seg_end = lower if cur < lower else upper
                out[0] += math.exp(-q * (tt + 0.5 * dt)) * _segment_cost(prev, seg_end, dt, var, fc0, fc1, fc2)
                tt += dt
                if crossed:
                    event = True
                    ev_level = cur
                    ev_time = tt
                    break
                prev = cur
            if event:
                jump_now = False
                t = ev_time
            else:
                t = t + h
            u_end = ev_level if event else u1
        else:
            crossed = u1 < lower or (two_sided and u1 > upper)
            seg_end = u1
            if crossed and clamp:
                seg_end = lower if u1 < lower else upper
            out[0] += math.exp(-q * (t + 0.5 * h)) * _segment_cost(u, seg_end, h, var, fc0, fc1, fc2)
            t = next_jump if jump_now else t + h
            if crossed:
                event = True
                ev_level = u1
                jump_now = False
            u_end = u1

        from_jump = False
        if not event:
            u = u_end
            if jump_now:
                v = np.random.random()
                if sign < 0:
                    v = 1.0 - v
                u -= _jump_size(1.0 - v, lam, log_tail, log_z)
                v = np.random.random()
                if sign < 0:
                    v = 1.0 - v
                next_jump = t - math.log(1.0 - v) / lam
                if u < lower:
                    event = True
                    ev_level = u
                    from_jump = True
        if not event:
            continue

        # act on a boundary crossing at time t with pre-action level ev_level
        level = ev_level
        if clamp and not from_jump:
            if level < lower:
                level = lower
            elif two_sided and level > upper:
                level = upper
        disc = math.exp(-q * t)
        if mode == SS:
            out[1] += disc
            out[2] += disc * (level_S - level)
            u = level_S
        elif mode == BARRIER:
            out[1] += disc * (lower - ev_level)
            u = lower
        elif mode == FIRST_PASSAGE:
            out[1] = disc
            out[2] = disc * level
            out[3] = 1.0
            return out
        else:
            out[1] = disc if level >= upper else 0.0
            out[3] = 1.0
            return out
    return out


@njit(cache=True, parallel=True)
def simulate_paths(seeds, x0, mode, lower, upper, level_S, q, drift, sd, lam, log_tail, log_z,
                   fine, coarse, horizon, fc0, fc1, fc2, clamp, antithetic):
    n = seeds.size
    reps = 2 if antithetic else 1
    res = np.empty((n, reps, 4))
    for i in prange(n):
        for r in range(reps):
            np.random.seed(seeds[i])
            res[i, r] = _path(x0, mode, lower, upper, level_S, q, drift, sd, lam, log_tail, log_z,
                              fine, coarse, horizon, fc0, fc1, fc2, clamp, 1.0 - 2.0 * r)
    return res


@njit(cache=True)
def increments(seed, n_steps, dt, drift, sd, lam, log_tail, log_z):
    """Levy increments on a uniform grid (Gaussian part plus compound Poisson)."""
    np.random.seed(seed)
    out = np.empty(n_steps)
    for i in range(n_steps):
        x = drift * dt + sd * math.sqrt(dt) * np.random.standard_normal()
        if lam > 0.0:
            k = np.random.poisson(lam * dt)
            for _ in range(k):
                x -= _jump_size(1.0 - np.random.random(), lam, log_tail, log_z)
        out[i] = x
    return out
