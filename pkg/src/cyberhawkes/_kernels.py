"""Compiled inner loops: kernel-sum recursions, likelihood and thinning.

Every routine here works on sorted float64 arrays and exploits the
exponential kernel's Markov property, so a pass over n events costs O(n).
"""

import math

import numpy as np
from numba import njit

# mark distribution codes shared with MarkDistribution.code
MARK_CONSTANT = 0
MARK_EXPONENTIAL = 1
MARK_LOGNORMAL = 2

# status codes returned by the thinning kernels
SIM_OK = 0
SIM_EXPLODED = 1


@njit(cache=True)
def excitation_on_grid(times, weights, delta, grid):
    """sum_{T < g} w e^{-delta (g - T)} for each g of an ascending grid."""
    n = times.shape[0]
    out = np.empty(grid.shape[0])
    state = 0.0
    t_prev = 0.0
    j = 0
    for k in range(grid.shape[0]):
        g = grid[k]
        while j < n and times[j] < g:
            if j > 0:
                state *= math.exp(-delta * (times[j] - t_prev))
            state += weights[j]
            t_prev = times[j]
            j += 1
        if j == 0:
            out[k] = 0.0
        else:
            out[k] = state * math.exp(-delta * (g - t_prev))
    return out


@njit(cache=True)
def unit_excitation_at_events(targets, sources, delta):
    """sum_{S < t} e^{-delta (t - S)} evaluated at each ascending target t."""
    n = sources.shape[0]
    out = np.empty(targets.shape[0])
    state = 0.0
    t_prev = 0.0
    j = 0
    for k in range(targets.shape[0]):
        g = targets[k]
        while j < n and sources[j] < g:
            if j > 0:
                state *= math.exp(-delta * (sources[j] - t_prev))
            state += 1.0
            t_prev = sources[j]
            j += 1
        if j == 0:
            out[k] = 0.0
        else:
            out[k] = state * math.exp(-delta * (g - t_prev))
    return out


@njit(cache=True)
def _window_integral(times, delta, a, b):
    # sum over T < b of (e^{-delta(max(a,T)-T)} - e^{-delta(b-T)}) / delta
    total = 0.0
    for i in range(times.shape[0]):
        t = times[i]
        if t >= b:
            break
        lo = a if a > t else t
        total += math.exp(-delta * (lo - t)) - math.exp(-delta * (b - t))
    return total / delta


@njit(cache=True)
def neg_log_likelihood_core(internal, external, t0, s, tau, lambda0, rho, mbar,
                            m, delta, exposure):
    """Exact first-phase -ln L over (s, tau], history before s included.

    Returns +inf when an event intensity is non-positive or when external
    events were observed under rho = 0.
    """
    # integral term
    integral = lambda0 * (tau - s)
    if m != 0.0:
        integral += m * _window_integral(internal, delta, s, tau)
    if mbar != 0.0:
        integral += mbar * _window_integral(external, delta, s, tau)

    # event terms, restricted to s < t <= tau
    lo = np.searchsorted(internal, s, side="right")
    hi = np.searchsorted(internal, tau, side="right")
    targets = internal[lo:hi]
    log_sum = 0.0
    if targets.shape[0] > 0:
        r_int = unit_excitation_at_events(targets, internal, delta)
        r_ext = unit_excitation_at_events(targets, external, delta)
        for k in range(targets.shape[0]):
            lam = lambda0 + m * r_int[k] + mbar * r_ext[k]
            if not lam > 0.0:
                return np.inf
            log_sum += math.log(lam)

    # external Poisson part
    e_lo = np.searchsorted(external, s, side="right")
    e_hi = np.searchsorted(external, tau, side="right")
    n_ext = e_hi - e_lo
    if exposure == 0:
        span = tau - s
    elif n_ext > 0:
        # last external time at or before tau minus last at or before s,
        # with the process origin standing in when none precedes s
        last_tau = external[e_hi - 1]
        last_s = external[e_lo - 1] if e_lo > 0 else t0
        span = last_tau - last_s
    else:
        span = 0.0
    poisson = 0.0
    if n_ext > 0:
        if not rho > 0.0:
            return np.inf
        poisson = -n_ext * math.log(rho) + rho * span
    else:
        poisson = rho * span
    return integral - log_sum + poisson


@njit(cache=True)
def compensator_at_events(internal, external, t0, lambda0, mbar, m, delta):
    """Lambda(t0, T_k) for every internal event T_k (first phase)."""
    n = internal.shape[0]
    out = np.empty(n)
    for k in range(n):
        tk = internal[k]
        val = lambda0 * (tk - t0)
        if m != 0.0:
            val += m * _window_integral(internal[:k], delta, t0, tk)
        if mbar != 0.0:
            val += mbar * _window_integral(external, delta, t0, tk)
        out[k] = val
    return out


@njit(cache=True)
def compensator_at_events_fast(internal, external, t0, lambda0, mbar, m,
                               delta):
    """O(n) version of compensator_at_events using running kernel states."""
    n = internal.shape[0]
    n_ext = external.shape[0]
    out = np.empty(n)
    # merged sweep: cumulative integral and excitation state
    cum = 0.0
    state = 0.0  # excitation (excluding baseline) at t_prev, after jumps
    t_prev = t0
    i = 0
    j = 0
    while i < n:
        # next epoch: earliest pending event
        if j < n_ext and external[j] < internal[i]:
            t_next = external[j]
            is_ext = True
        else:
            t_next = internal[i]
            is_ext = False
        dt = t_next - t_prev
        cum += lambda0 * dt + state * (1.0 - math.exp(-delta * dt)) / delta
        state *= math.exp(-delta * dt)
        t_prev = t_next
        if is_ext:
            state += mbar
            j += 1
        else:
            out[i] = cum
            # simultaneous externals strictly before are already processed
            state += m
            i += 1
    return out


@njit(cache=True)
def _draw_mark(gen, kind, mean, shape):
    if kind == MARK_CONSTANT:
        return mean
    if kind == MARK_EXPONENTIAL:
        return gen.exponential() * mean
    # lognormal parameterised by its mean and log-scale sigma
    mu = math.log(mean) - 0.5 * shape * shape
    return math.exp(mu + shape * gen.standard_normal())


@njit(cache=True)
def thin_two_phase(gen, a, b, lambda0, delta, external, ext_marks,
                   has_reaction, ell, alpha0, alpha1,
                   kind_bl, mean_bl, shape_bl, kind_al, mean_al, shape_al,
                   init_int, init_ext, max_events, record):
    """Ogata thinning with the dominating rate refreshed at every epoch.

    Between epochs (accepted event, external arrival, phase switch) the
    intensity only decays, so the intensity at the current time bounds it
    until the next epoch.

    Returns (status, times, marks, n_events). When ``record`` is False the
    arrays are empty and only the count is returned.
    """
    cap = max_events if record else 0
    times = np.empty(cap if cap < 4096 else 4096)
    marks = np.empty(times.shape[0])
    n = 0
    n_ext = external.shape[0]
    j = 0
    t = a
    exc_int = init_int  # internal excitation (phase one)
    exc_ext = init_ext  # external excitation (phase one)
    carry = 0.0  # alpha1-scaled excitation frozen at ell (phase two)
    exc_al = 0.0  # excitation from phase-two internal events
    phase_two = False
    if has_reaction and ell <= a:
        phase_two = True
        carry = alpha1 * (exc_int + exc_ext)
        exc_int = 0.0
        exc_ext = 0.0
    while True:
        if phase_two:
            lam_bar = alpha0 * lambda0 + carry + exc_al
            t_epoch = b
        else:
            lam_bar = lambda0 + exc_int + exc_ext
            t_epoch = b
            if j < n_ext and external[j] < t_epoch:
                t_epoch = external[j]
            if has_reaction and ell < t_epoch:
                t_epoch = ell
        if lam_bar > 0.0:
            cand = t + gen.exponential() / lam_bar
        else:
            cand = np.inf
        if cand >= t_epoch:
            decay = math.exp(-delta * (t_epoch - t))
            exc_int *= decay
            exc_ext *= decay
            carry *= decay
            exc_al *= decay
            t = t_epoch
            if t >= b:
                break
            if phase_two:
                continue
            if has_reaction and t == ell and not (j < n_ext
                                                  and external[j] < ell):
                phase_two = True
                carry = alpha1 * (exc_int + exc_ext)
                exc_int = 0.0
                exc_ext = 0.0
                continue
            exc_ext += ext_marks[j]
            j += 1
            continue
        decay = math.exp(-delta * (cand - t))
        exc_int *= decay
        exc_ext *= decay
        carry *= decay
        exc_al *= decay
        t = cand
        if phase_two:
            lam = alpha0 * lambda0 + carry + exc_al
        else:
            lam = lambda0 + exc_int + exc_ext
        if gen.random() * lam_bar <= lam:
            if n >= max_events:
                return SIM_EXPLODED, times[:0], marks[:0], n
            if phase_two:
                y = _draw_mark(gen, kind_al, mean_al, shape_al)
                exc_al += y
            else:
                y = _draw_mark(gen, kind_bl, mean_bl, shape_bl)
                exc_int += y
            if record:
                if n >= times.shape[0]:
                    grown = np.empty(min(2 * times.shape[0], max_events))
                    grown[:n] = times[:n]
                    times = grown
                    grown_m = np.empty(times.shape[0])
                    grown_m[:n] = marks[:n]
                    marks = grown_m
                times[n] = t
                marks[n] = y
            n += 1
    if record:
        return SIM_OK, times[:n].copy(), marks[:n].copy(), n
    return SIM_OK, times[:0], marks[:0], n
