"""Log-space Poisson and binomial helpers."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln, logsumexp


def log_binom(n, k):
    """log C(n, k) via log-gamma; ``n`` may be real."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def poisson_log_pmf(lambda0: float, k):
    """k log(lambda0) - lambda0 - log k!."""
    if lambda0 <= 0:
        raise ValueError("Poisson parameter must be positive")
    k = np.asarray(k, dtype=float)
    out = k * math.log(lambda0) - lambda0 - gammaln(k + 1)
    return float(out) if out.ndim == 0 else out


def _log_series(log_first: float, ratio, max_terms: int = 100000) -> float:
    """log of sum_j a_j where a_0 = exp(log_first) and a_{j+1} = a_j * ratio(j)."""
    terms = [0.0]
    log_term = 0.0
    for j in range(max_terms):
        r = ratio(j)
        if r <= 0:
            break
        log_term += math.log(r)
        terms.append(log_term)
        if log_term < -40:
            break
    return log_first + float(logsumexp(terms))


def log_poisson_sf(lambda0: float, u: int) -> float:
    """log P(N >= u) for N ~ Poisson(lambda0), accurate far into the tail."""
    if u <= 0:
        return 0.0
    if lambda0 <= 0:
        return -math.inf
    if u <= lambda0:
        return math.log(gammainc(u, lambda0))
    # terms decrease geometrically past the mode: pmf(u) (1 + l/(u+1) + ...)
    return _log_series(poisson_log_pmf(lambda0, u), lambda j: lambda0 / (u + 1 + j))


def log_poisson_cdf(lambda0: float, l: int) -> float:
    """log P(N <= l) for N ~ Poisson(lambda0)."""
    if l < 0:
        return -math.inf
    if l >= lambda0:
        if lambda0 <= 0:
            return 0.0
        return math.log(gammaincc(l + 1, lambda0))
    # below the mode sum downwards: pmf(l) (1 + l/lambda0 + l(l-1)/lambda0^2 + ...)
    return _log_series(poisson_log_pmf(lambda0, l), lambda j: (l - j) / lambda0)
