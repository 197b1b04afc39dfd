"""Exact distribution of the overlapping word count in a stationary Markov sequence.

Two independent routes: a forward dynamic programme over (recent symbols,
count) and, for tiny sequences, enumeration of every sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .markov import MarkovModel
from .seqio import Word

DP_BUDGET = 1e8
ENUMERATION_LIMIT = 1e7


@dataclass(frozen=True)
class CountDistribution:
    """P(N = k) for k = 0..len(probs)-1 over ``windows`` word positions in ``length`` symbols."""

    length: int
    windows: int
    probs: np.ndarray

    def pmf(self, k: int) -> float:
        return float(self.probs[k]) if 0 <= k < self.probs.size else 0.0

    def mean(self) -> float:
        return float(np.dot(np.arange(self.probs.size), self.probs))

    def sf(self, u: int) -> float:
        """P(N >= u)."""
        return float(self.probs[max(u, 0):].sum())

    def cdf(self, l: int) -> float:
        """P(N <= l)."""
        return float(self.probs[: l + 1].sum()) if l >= 0 else 0.0


def _index(symbols, A: int) -> int:
    idx = 0
    for c in symbols:
        idx = idx * A + int(c)
    return idx


def _initial_states(model: MarkovModel, L: int) -> np.ndarray:
    """Stationary law of the first L symbols, indexed with the newest symbol last."""
    A, m = model.alphabet.size, model.order
    if L <= m:
        # marginalise the stationary context law onto its first L symbols
        return model.stationary.reshape(A ** L, A ** (m - L)).sum(axis=1)
    dist = model.stationary.copy()
    trans_rows = model.transitions
    for size in range(m, L):
        ctx = np.arange(A ** size) % (A ** m)
        dist = (dist[:, None] * trans_rows[ctx]).reshape(-1)
    return dist


def exact_distribution(model: MarkovModel, word: Word, length: int,
                       budget: float = DP_BUDGET) -> CountDistribution:
    """Exact law of the overlapping count of ``word`` in a stationary sequence of ``length`` symbols.

    The state is the last max(n - 1, m) symbols; the count axis grows by one
    column per step and trailing exactly-zero columns are trimmed.
    """
    A, m, n = model.alphabet.size, model.order, word.length
    if length < n:
        return CountDistribution(length, 0, np.ones(1))
    windows = length - n + 1
    L = min(max(n - 1, m), length)
    S = A ** L
    if S * (windows + 1) > budget:
        raise ValueError(f"oracle needs {S * (windows + 1):.3g} cells, above the budget {budget:g}")
    target = _index(word.symbols, A)
    ctx = np.arange(S) % (A ** m)
    T = model.transitions[ctx]                             # (S, A)
    full = np.arange(S)[:, None] * A + np.arange(A)       # index of the L+1 most recent symbols
    hit = (full % A ** n) == target                        # (S, A)
    fast = m <= L - 1 and L == n - 1

    # occurrences already inside the first L symbols (only possible when L > n - 1)
    digits = np.stack([(np.arange(S) // A ** (L - 1 - j)) % A for j in range(L)], axis=1) if L else \
        np.zeros((1, 0), dtype=np.int64)
    w = np.asarray(word.symbols)
    start = np.zeros(S, dtype=np.int64)
    for i in range(L - n + 1):
        start += np.all(digits[:, i: i + n] == w, axis=1)
    dist = np.zeros((S, int(start.max()) + 1))
    dist[np.arange(S), start] = _initial_states(model, L)
    for _ in range(length - L):
        dist = np.concatenate([dist, np.zeros((S, 1))], axis=1)
        if fast:
            dist = _step_fast(dist, T, hit, A, S)
        else:
            dist = _step_generic(dist, T, hit, A, S)
        nz = np.flatnonzero(dist.any(axis=0))
        dist = dist[:, : nz[-1] + 1]
    return CountDistribution(length, windows, dist.sum(axis=0))


def _step_generic(dist, T, hit, A, S):
    contrib = dist[:, None, :] * T[:, :, None]            # (S, A, K)
    shifted = np.zeros_like(contrib)
    shifted[:, :, 1:] = contrib[:, :, :-1]
    contrib = np.where(hit[:, :, None], shifted, contrib)
    if S == 1:
        # empty state (one-letter word, order 0)
        return contrib.sum(axis=1)
    # new state drops the oldest symbol of s and appends the emitted one
    return contrib.reshape(A, S // A, A, -1).sum(axis=0).reshape(S, -1)


def _step_fast(dist, T, hit, A, S):
    # transitions depend only on the S // A newest symbols, so the oldest one is summed out
    # first; source states that can complete the word are added back individually
    R = S // A
    K = dist.shape[1]
    hit_rows = np.flatnonzero(hit.any(axis=1))
    plain = dist.copy()
    plain[hit_rows] = 0.0
    agg = plain.reshape(A, R, K).sum(axis=0)
    out = agg[:, None, :] * T[:R, :, None]                 # (R, A, K)
    for s in hit_rows:
        r = s % R
        for c in range(A):
            moved = dist[s] * T[s, c]
            if hit[s, c]:
                out[r, c, 1:] += moved[:-1]
            else:
                out[r, c] += moved
    return out.reshape(S, K)


def brute_force_distribution(model: MarkovModel, word: Word, length: int,
                             max_paths: float = ENUMERATION_LIMIT) -> CountDistribution:
    """Enumerate every sequence of ``length`` symbols and tally its count and probability."""
    A, m, n = model.alphabet.size, model.order, word.length
    if length < n:
        return CountDistribution(length, 0, np.ones(1))
    if length < m:
        raise ValueError(f"sequence length {length} shorter than the model order")
    total = A ** length
    if total > max_paths:
        raise ValueError(f"{total} sequences exceed the enumeration limit {max_paths:g}")
    idx = np.arange(total)
    seqs = np.stack([(idx // A ** (length - 1 - j)) % A for j in range(length)], axis=1)
    weights = A ** np.arange(m - 1, -1, -1)
    prob = model.stationary[seqs[:, :m] @ weights] if m else np.ones(total)
    for i in range(m, length):
        c = seqs[:, i - m: i] @ weights if m else np.zeros(total, dtype=np.int64)
        prob = prob * model.transitions[c, seqs[:, i]]
    w = np.asarray(word.symbols)
    counts = np.zeros(total, dtype=np.int64)
    for i in range(length - n + 1):
        counts += np.all(seqs[:, i: i + n] == w, axis=1)
    probs = np.bincount(counts, weights=prob)
    return CountDistribution(length, length - n + 1, probs)


def poisson_pointwise_gap(dist: CountDistribution, lambda0: float, k_max: int | None = None) -> np.ndarray:
    """|P(N = k) - Poisson(lambda0)(k)| for k = 0..k_max (default: past the support)."""
    if k_max is None:
        k_max = max(dist.probs.size, int(lambda0 + 20 * math.sqrt(lambda0) + 20))
    ks = np.arange(k_max + 1)
    exact = np.zeros(k_max + 1)
    upto = min(k_max + 1, dist.probs.size)
    exact[:upto] = dist.probs[:upto]
    return np.abs(exact - poisson.pmf(ks, lambda0))


def total_variation_to_poisson(dist: CountDistribution, lambda0: float) -> float:
    """sup_B |P(N in B) - Poisson(lambda0)(B)|, counting Poisson mass beyond the support."""
    ks = np.arange(dist.probs.size)
    diff = np.abs(dist.probs - poisson.pmf(ks, lambda0)).sum()
    beyond = poisson.sf(dist.probs.size - 1, lambda0)
    return 0.5 * float(diff + beyond)
