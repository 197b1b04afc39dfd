"""Self-overlap structure of a word and the scalar quantities every bound uses."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .markov import (MarkovModel, MixingParams, mixing_psi, overlap_compatible, overlap_probability,
                     suffix_probability, word_probability)
from .seqio import Word


class ZeroProbabilityError(ValueError):
    """The word has zero stationary probability under the model."""


class RangeEmptyError(ValueError):
    """The word is too probable: no integer l lies in [n, 1/P(A)]."""


@dataclass(frozen=True)
class WordStructure:
    """Overlap combinatorics of a word.

    ``period`` is the smallest shift at which the word can overlap itself (its
    length if it cannot). ``secondary_periods`` are the compatible shifts
    strictly between the last full multiple of the period and the length.
    """

    word: Word
    period: int
    secondary_periods: tuple[int, ...]

    @property
    def length(self) -> int:
        return self.word.length

    @property
    def n_secondary(self) -> int:
        return len(self.secondary_periods)

    @property
    def smallest_secondary(self) -> int:
        return min(self.secondary_periods) if self.secondary_periods else self.word.length

    @property
    def early_overlap(self) -> bool:
        """Self-overlapping before half its length (period <= floor(n/2))."""
        return self.period <= self.word.length // 2


def word_structure(word: Word) -> WordStructure:
    n = word.length
    s = word.symbols
    period = next(d for d in range(1, n + 1) if overlap_compatible(s, d))
    start = (n // period) * period + 1
    secondary = tuple(k for k in range(start, n) if overlap_compatible(s, k))
    return WordStructure(word, period, secondary)


def zeta(model: MarkovModel, word: Word, structure: WordStructure | None = None) -> float:
    """Probability that, given an occurrence, the next one is not at the principal period."""
    structure = structure or word_structure(word)
    p = word_probability(model, word)
    if p <= 0:
        raise ZeroProbabilityError(f"word {word.text!r} has zero probability")
    value = 1.0 - overlap_probability(model, word, structure.period) / p
    return min(1.0, max(0.0, value))


def e_psi(model: MarkovModel, word: Word, params: MixingParams,
          structure: WordStructure | None = None) -> tuple[float, int]:
    """Minimum over w in [1, n_A] of (r_A + n) P(last w symbols) (1 + psi(n_A - w)).

    Returns the value and the minimising suffix length (smallest on ties).
    """
    structure = structure or word_structure(word)
    n_a = structure.smallest_secondary
    weight = structure.n_secondary + structure.length
    best, best_w = math.inf, 0
    for w in range(1, n_a + 1):
        value = weight * suffix_probability(model, word, w) * (1.0 + mixing_psi(params, n_a - w))
        if value < best:
            best, best_w = value, w
    return best, best_w


def epsilon_a(model: MarkovModel, word: Word, params: MixingParams) -> tuple[float, int]:
    """Minimum over integer l in [n, floor(1/P(A))] of l P(A) + psi(l).

    The objective is convex in l, so only the integers up to just past the
    continuous minimiser need to be scanned. Returns the value and the minimiser.
    """
    p = word_probability(model, word)
    if p <= 0:
        raise ZeroProbabilityError(f"word {word.text!r} has zero probability")
    n = word.length
    hi = math.floor(1.0 / p)
    if hi < n:
        raise RangeEmptyError("word too probable for bound")
    K, nu = params.K, params.nu
    stop = n
    if nu > 0:
        # d/dl [l p + K nu^l] = 0  at  nu^l = p / (K |ln nu|)
        rate = -math.log(nu)
        target = p / (K * rate)
        if target < 1:
            stop = max(n, math.ceil(math.log(target) / math.log(nu)) + 1)
    stop = min(stop, hi)
    ell = np.arange(n, stop + 1)
    values = ell * p + K * np.power(nu, ell.astype(float))
    i = int(np.argmin(values))
    return float(values[i]), int(ell[i])


@dataclass(frozen=True)
class DerivedScalars:
    """Word-and-model quantities consumed by the error bounds.

    ``epsilon`` is ``None`` when its index range is empty. ``lam`` is
    t P(A) (1 + psi(n)) for the window count ``t`` the scalars were built with.
    """

    structure: WordStructure
    params: MixingParams
    t: float
    prob: float
    e_psi: float
    e_psi_w: int
    epsilon: float | None
    epsilon_l: int | None
    zeta: float
    lam: float

    @property
    def lambda0(self) -> float:
        return self.t * self.prob

    @property
    def psi_n(self) -> float:
        return mixing_psi(self.params, self.structure.length)


def derived_scalars(model: MarkovModel, word: Word, params: MixingParams, t: float,
                    structure: WordStructure | None = None) -> DerivedScalars:
    structure = structure or word_structure(word)
    prob = word_probability(model, word)
    if prob <= 0:
        raise ZeroProbabilityError(f"word {word.text!r} has zero probability")
    e, w = e_psi(model, word, params, structure)
    try:
        eps, ell = epsilon_a(model, word, params)
    except RangeEmptyError:
        eps, ell = None, None
    z = zeta(model, word, structure)
    lam = t * prob * (1.0 + mixing_psi(params, word.length))
    return DerivedScalars(structure, params, t, prob, e, w, eps, ell, z, lam)
