"""Brute-force reference computations shared by several test modules.

Nothing here calls into the library's numerical code: intensities are summed
term by term and integrals use adaptive quadrature.
"""

import math

import numpy as np
from scipy.integrate import quad


def first_phase_intensity(lambda0, mbar, m, delta, internal, external, t):
    return (lambda0
            + sum(m * math.exp(-delta * (t - x)) for x in internal if x < t)
            + sum(mbar * math.exp(-delta * (t - x)) for x in external if x < t))


def brute_neg_log_likelihood(theta, internal, external, s, tau):
    """-ln L on (s, tau] with window exposure, by quadrature and direct sums."""
    lambda0, rho, mbar, m, delta = theta
    internal = list(internal)
    external = list(external)

    def lam(t):
        return first_phase_intensity(lambda0, mbar, m, delta, internal, external, t)

    breaks = sorted({x for x in internal + external if s < x < tau})
    edges = [s] + breaks + [tau]
    compensator = sum(quad(lam, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
                      for a, b in zip(edges[:-1], edges[1:]))
    log_terms = sum(math.log(lam(t)) for t in internal if s < t <= tau)
    n_ext = sum(1 for t in external if s < t <= tau)
    ext_term = rho * (tau - s) - (n_ext * math.log(rho) if n_ext else 0.0)
    return compensator - log_terms + ext_term


def random_instance(rng: np.random.Generator):
    """Small random stream (at most 20 events in total) and parameters."""
    tau = float(rng.uniform(2.0, 15.0))
    s = float(rng.uniform(0.0, 0.6 * tau))
    n_int = int(rng.integers(0, 13))
    n_ext = int(rng.integers(0, 21 - n_int))
    internal = np.sort(rng.uniform(0.0, tau, n_int))
    external = np.sort(rng.uniform(0.0, tau, n_ext))
    theta = (float(rng.uniform(0.1, 3.0)), float(rng.uniform(0.05, 3.0)),
             float(rng.uniform(0.0, 2.0)), float(rng.uniform(0.0, 2.0)),
             float(rng.uniform(0.2, 3.0)))
    return theta, internal, external, s, tau
