"""Numba kernels for the heavy Monte Carlo inner loops.

All kernels drive planar Brownian motion with Gaussian increments of
variance `step_scale` per coordinate and accumulate the hyperbolic
clock with midpoint quadrature of (2/(1-|z|^2))^2.  Steps shrink near
the unit circle (variance capped at 0.1*(1-|z|)^2 once 1-|z| < 0.05)
so the clock quadrature stays controlled where the density blows up.
"""

import numpy as np
from numba import njit

STOP_EUCLID = 0
STOP_HYPER = 1
STOP_EXIT_DISC = 2
STOP_HIT_DISC = 3
STOP_HIT_OR_EXIT = 4

STOPPED_HIT = 3

STATUS_STOPPED = 0
STATUS_CAP = 1
STATUS_MAXSTEPS = 2

BOUNDARY_LAYER = 0.05
BOUNDARY_COEFF = 0.1


@njit(cache=True)
def _local_dt(x, y, step_scale, max_dtau):
    r = np.sqrt(x * x + y * y)
    dt = step_scale
    gap = 1.0 - r
    if gap < BOUNDARY_LAYER:
        cap = BOUNDARY_COEFF * gap * gap
        if cap < dt:
            dt = cap
    if max_dtau > 0.0:
        rho2 = (2.0 / (1.0 - r * r)) ** 2
        cap = max_dtau / rho2
        if cap < dt:
            dt = cap
    return dt


@njit(cache=True)
def simulate_kernel(x0, y0, step_scale, stop_kind, pa, pb, pc, pd, pe, pf,
                    seed, max_steps, stride, boundary_cap, max_dtau):
    """Drive one path to its stop rule, recording every `stride` steps.

    Stop parameters: euclid/hyper horizon in pa; disc rules use center
    (pa, pb) and Euclidean radius pc; the hit-or-exit rule adds an exit
    disc with center (pd, pe) and radius pf, reporting STOPPED_HIT when
    the hit disc fired first.  Returns (times, taus, xs, ys,
    n_recorded, status).
    """
    np.random.seed(seed)
    cap_rec = max_steps // stride + 3
    times = np.empty(cap_rec)
    taus = np.empty(cap_rec)
    xs = np.empty(cap_rec)
    ys = np.empty(cap_rec)
    x, y, t, tau = x0, y0, 0.0, 0.0
    times[0] = 0.0
    taus[0] = 0.0
    xs[0] = x
    ys[0] = y
    nrec = 1
    status = STATUS_MAXSTEPS
    for step in range(max_steps):
        dt = _local_dt(x, y, step_scale, max_dtau)
        if stop_kind == STOP_EUCLID and t + dt > pa:
            dt = pa - t
            if dt <= 0.0:
                status = STATUS_STOPPED
                break
        sd = np.sqrt(dt)
        nx = x + sd * np.random.normal()
        ny = y + sd * np.random.normal()
        mx = 0.5 * (x + nx)
        my = 0.5 * (y + ny)
        mr2 = mx * mx + my * my
        if mr2 >= 1.0:
            mr2 = boundary_cap * boundary_cap
        dtau = (2.0 / (1.0 - mr2)) ** 2 * dt
        x, y = nx, ny
        t += dt
        tau += dtau
        stopped = False
        if x * x + y * y >= boundary_cap * boundary_cap:
            # project back onto the cap circle and stop there
            r = np.sqrt(x * x + y * y)
            x *= boundary_cap / r
            y *= boundary_cap / r
            status = STATUS_CAP
            stopped = True
        elif stop_kind == STOP_EUCLID:
            if t >= pa:
                status = STATUS_STOPPED
                stopped = True
        elif stop_kind == STOP_HYPER:
            if tau >= pa:
                status = STATUS_STOPPED
                stopped = True
        elif stop_kind == STOP_EXIT_DISC:
            dx = x - pa
            dy = y - pb
            if dx * dx + dy * dy >= pc * pc:
                status = STATUS_STOPPED
                stopped = True
        elif stop_kind == STOP_HIT_DISC:
            dx = x - pa
            dy = y - pb
            if dx * dx + dy * dy <= pc * pc:
                status = STATUS_STOPPED
                stopped = True
        elif stop_kind == STOP_HIT_OR_EXIT:
            dx = x - pa
            dy = y - pb
            if dx * dx + dy * dy <= pc * pc:
                status = STOPPED_HIT
                stopped = True
            else:
                dx = x - pd
                dy = y - pe
                if dx * dx + dy * dy >= pf * pf:
                    status = STATUS_STOPPED
                    stopped = True
        if stopped or (step + 1) % stride == 0:
            times[nrec] = t
            taus[nrec] = tau
            xs[nrec] = x
            ys[nrec] = y
            nrec += 1
        if stopped:
            break
    if times[nrec - 1] != t:
        times[nrec] = t
        taus[nrec] = tau
        xs[nrec] = x
        ys[nrec] = y
        nrec += 1
    return times, taus, xs, ys, nrec, status


@njit(cache=True)
def _annulus_chunk(state, c2, inner, dt, guard2, outer_guard2, buf, ubuf,
                   need):
    """Advance the annulus experiment through one buffer of increments.

    state = [x, y, active, upos]; returns (hits, paths_finished) and
    leaves the in-progress path in `state`.  Near either boundary the
    discrete-monitoring bias is removed with the Brownian bridge
    crossing probability exp(-2 d1 d2 / dt) in the radial coordinate
    (flat-boundary approximation); a segment that crosses the inner
    disc outright is a certain hit.
    """
    x = state[0]
    y = state[1]
    active = state[2] > 0.5
    upos = int(state[3])
    hits = 0
    done = 0
    pos = 0
    m = buf.shape[0] - 1
    umax = ubuf.shape[0]
    inner2 = inner * inner
    while pos < m and upos < umax and done < need:
        if not active:
            x, y = c2, 0.0
            active = True
        nx = x + buf[pos]
        ny = y + buf[pos + 1]
        pos += 2
        n2 = nx * nx + ny * ny
        if n2 >= 1.0:
            done += 1
            active = False
            continue
        if n2 <= guard2:
            dx = nx - x
            dy = ny - y
            seg2 = dx * dx + dy * dy
            if seg2 > 0.0:
                tproj = -(x * dx + y * dy) / seg2
                if tproj < 0.0:
                    tproj = 0.0
                elif tproj > 1.0:
                    tproj = 1.0
                px = x + tproj * dx
                py = y + tproj * dy
                d2 = px * px + py * py
            else:
                d2 = n2
            if d2 <= inner2:
                hits += 1
                done += 1
                active = False
                continue
            d1 = np.sqrt(x * x + y * y) - inner
            d2r = np.sqrt(d2) - inner
            if d1 > 0.0 and d2r > 0.0:
                if ubuf[upos] < np.exp(-2.0 * d1 * d2r / dt):
                    upos += 1
                    hits += 1
                    done += 1
                    active = False
                    continue
                upos += 1
        elif n2 >= outer_guard2:
            d1 = 1.0 - np.sqrt(x * x + y * y)
            d2r = 1.0 - np.sqrt(n2)
            if ubuf[upos] < np.exp(-2.0 * d1 * d2r / dt):
                upos += 1
                done += 1
                active = False
                continue
            upos += 1
        x, y = nx, ny
    state[0] = x
    state[1] = y
    state[2] = 1.0 if active else 0.0
    state[3] = float(upos)
    return hits, done


def annulus_kernel(c2, inner, dt, n_paths, seed, max_steps):
    """Count paths from radius c2 that reach D(0, inner) before |z| = 1.

    Increments come from a block ziggurat generator; the tight inner
    loop consumes them in a compiled chunk driver.
    """
    rng = np.random.default_rng(seed)
    sd = np.sqrt(dt)
    # a step long enough to defeat the guards has probability < exp(-100)
    guard2 = (inner + 15.0 * sd) ** 2
    outer_guard2 = (1.0 - 15.0 * sd) ** 2
    state = np.array([c2, 0.0, 1.0, 0.0])
    hits = 0
    done = 0
    chunk = 1 << 24
    total_steps = 0
    while done < n_paths and total_steps < max_steps * n_paths:
        if state[3] > 0:
            state[3] = 0.0
        ubuf = rng.random(1 << 21)
        buf = rng.standard_normal(chunk) * sd
        h, d = _annulus_chunk(state, c2, inner, dt, guard2, outer_guard2,
                              buf, ubuf, n_paths - done)
        hits += h
        done += d
        total_steps += chunk // 2
    return hits


@njit(cache=True)
def occupation_kernel(cx, cy, radius, step_scale, n_paths, seed,
                      boundary_cap, max_steps):
    """Mean hyperbolic occupation time of a Euclidean disc for BM from 0.

    Paths are killed when they reach |z| = boundary_cap.  Occupation is
    accumulated as (2/(1-|z_mid|^2))^2 * dt whenever the step midpoint
    lies in the disc.
    """
    np.random.seed(seed)
    total = 0.0
    r2 = radius * radius
    cap2 = boundary_cap * boundary_cap
    for _ in range(n_paths):
        x, y = 0.0, 0.0
        acc = 0.0
        for _ in range(max_steps):
            dt = _local_dt(x, y, step_scale, -1.0)
            sd = np.sqrt(dt)
            nx = x + sd * np.random.normal()
            ny = y + sd * np.random.normal()
            mx = 0.5 * (x + nx)
            my = 0.5 * (y + ny)
            dx = mx - cx
            dy = my - cy
            if dx * dx + dy * dy <= r2:
                mr2 = mx * mx + my * my
                if mr2 < 1.0:
                    acc += (2.0 / (1.0 - mr2)) ** 2 * dt
            x, y = nx, ny
            if x * x + y * y >= cap2:
                break
        total += acc
    return total / n_paths
