"""Order-m Markov models: estimation, word and overlap probabilities, mixing rate.

Contexts are the last ``m`` symbols, indexed as base-|A| numbers with the oldest
symbol most significant. The chain on contexts has the |A|^m x |A|^m transition
matrix returned by :meth:`MarkovModel.context_matrix`; its stationary law is
``MarkovModel.stationary``.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence as Seq

import numpy as np

from .seqio import Alphabet, Sequence, Word

log = logging.getLogger(__name__)

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-10


class ChainNotMixingError(ValueError):
    """The context chain has a second eigenvalue of modulus 1."""


@dataclass(frozen=True)
class MixingParams:
    """psi(l) = K * nu**l."""

    K: float
    nu: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError(f"K must be positive, got {self.K}")
        if not 0 <= self.nu < 1:
            raise ValueError(f"nu must lie in [0, 1), got {self.nu}")


def mixing_psi(params: MixingParams, l: int) -> float:
    if l < 0:
        raise ValueError("mixing gap must be nonnegative")
    return params.K * params.nu ** l  # 0.0 ** 0 == 1.0


@dataclass(frozen=True, eq=False)
class MarkovModel:
    order: int
    alphabet: Alphabet
    transitions: np.ndarray  # (|A|**order, |A|), rows sum to one
    stationary: np.ndarray   # (|A|**order,)

    def __post_init__(self):
        A, m = self.alphabet.size, self.order
        if m < 0:
            raise ValueError("order must be nonnegative")
        trans = np.array(self.transitions, dtype=float)
        stat = np.array(self.stationary, dtype=float)
        if trans.shape != (A ** m, A):
            raise ValueError(f"transitions must have shape {(A ** m, A)}, got {trans.shape}")
        if stat.shape != (A ** m,):
            raise ValueError(f"stationary must have shape {(A ** m,)}, got {stat.shape}")
        if np.any(trans < 0) or np.any(trans > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.max(np.abs(trans.sum(axis=1) - 1.0)) > ROW_TOL:
            raise ValueError("transition rows must sum to 1")
        if np.any(stat < 0) or abs(stat.sum() - 1.0) > ROW_TOL:
            raise ValueError("stationary distribution must be a probability vector")
        trans.flags.writeable = False
        stat.flags.writeable = False
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "stationary", stat)

    @classmethod
    def from_transitions(cls, transitions, alphabet: Alphabet, order: int = 1) -> "MarkovModel":
        """Build a model from a transition table, deriving the stationary law."""
        trans = np.asarray(transitions, dtype=float)
        return cls(order, alphabet, trans, stationary_distribution(_context_matrix(trans, alphabet.size, order)))

    @property
    def n_contexts(self) -> int:
        return self.alphabet.size ** self.order

    @cached_property
    def contexts(self) -> np.ndarray:
        """(n_contexts, order) array of the symbols of each context."""
        A, m = self.alphabet.size, self.order
        if m == 0:
            return np.zeros((1, 0), dtype=np.int64)
        idx = np.arange(A ** m)
        return np.stack([(idx // A ** (m - 1 - j)) % A for j in range(m)], axis=1)

    def context_index(self, symbols: Seq[int]) -> int:
        idx = 0
        for c in symbols:
            idx = idx * self.alphabet.size + int(c)
        return idx

    def context_matrix(self) -> np.ndarray:
        return _context_matrix(self.transitions, self.alphabet.size, self.order)

    def symbol_marginal(self) -> np.ndarray:
        """Stationary probability of each single symbol."""
        if self.order == 0:
            return self.transitions[0].copy()
        A = self.alphabet.size
        return self.stationary.reshape(A ** (self.order - 1), A).sum(axis=0)

    def mixing(self) -> MixingParams:
        return mixing_params(self)

    def emit(self, forward: np.ndarray, symbol: int | None) -> np.ndarray:
        """Advance a forward vector over contexts by one symbol (``None`` = any)."""
        A, m = self.alphabet.size, self.order
        contrib = forward[:, None] * self.transitions
        if symbol is not None:
            keep = np.zeros(A, dtype=bool)
            keep[symbol] = True
            contrib = np.where(keep, contrib, 0.0)
        if m == 0:
            return np.array([contrib.sum()])
        # new context = old context minus its oldest symbol, plus the emitted one
        return contrib.reshape(A, A ** (m - 1), A).sum(axis=0).reshape(A ** m)


def _context_matrix(trans: np.ndarray, A: int, m: int) -> np.ndarray:
    if m == 0:
        return np.ones((1, 1))
    S = A ** m
    Q = np.zeros((S, S))
    rows = np.repeat(np.arange(S), A)
    cols = ((np.arange(S) % (S // A)) * A)[:, None] + np.arange(A)[None, :]
    Q[rows, cols.ravel()] = trans.ravel()
    return Q


def stationary_distribution(Q: np.ndarray) -> np.ndarray:
    """Left eigenvector of ``Q`` for the eigenvalue closest to 1, normalised to sum 1."""
    if Q.shape == (1, 1):
        return np.ones(1)
    vals, vecs = np.linalg.eig(Q.T)
    i = int(np.argmin(np.abs(vals - 1.0)))
    v = np.real(vecs[:, i])
    v = v / v.sum()
    v = np.where(v < 0, 0.0, v)
    v = v / v.sum()
    # two refinement sweeps pull the vector onto the fixed point at machine precision
    for _ in range(2):
        v = v @ Q
        v = v / v.sum()
    return v


def estimate_model(seq: Sequence, order: int = 1, pseudocount: float = 1.0) -> MarkovModel:
    """Maximum-likelihood order-m model with an additive pseudocount on every cell."""
    A, m, t = seq.alphabet.size, order, seq.length
    if order < 0:
        raise ValueError("order must be nonnegative")
    if pseudocount < 0:
        raise ValueError("pseudocount must be nonnegative")
    if t <= m:
        raise ValueError("sequence shorter than order")
    data = seq.data.astype(np.int64)
    ctx = np.zeros(t - m, dtype=np.int64)
    for j in range(m):
        ctx = ctx * A + data[j: t - m + j]
    counts = np.bincount(ctx * A + data[m:], minlength=A ** (m + 1)).reshape(A ** m, A).astype(float)
    counts += pseudocount
    totals = counts.sum(axis=1, keepdims=True)
    if np.any(totals == 0):
        empty = int(np.flatnonzero(totals[:, 0] == 0)[0])
        label = seq.alphabet.decode(_digits(empty, A, m)) or "(empty)"
        raise ValueError(f"context {label!r} never observed; use a positive pseudocount")
    return MarkovModel.from_transitions(counts / totals, seq.alphabet, m)


def _digits(idx: int, A: int, m: int) -> list[int]:
    return [(idx // A ** (m - 1 - j)) % A for j in range(m)]


def word_probability(model: MarkovModel, word: Word | Seq[int]) -> float:
    """Stationary probability that the word occurs at a given position."""
    symbols = _symbols(word)
    n, m = len(symbols), model.order
    if n == 0:
        raise ValueError("empty word")
    if n <= m:
        mask = np.all(model.contexts[:, :n] == np.asarray(symbols), axis=1)
        return float(model.stationary[mask].sum())
    p = model.stationary[model.context_index(symbols[:m])]
    for i in range(m, n):
        p *= model.transitions[model.context_index(symbols[i - m: i]), symbols[i]]
    return float(p)


def suffix_probability(model: MarkovModel, word: Word | Seq[int], w: int) -> float:
    """Probability of the last ``w`` symbols of the word."""
    symbols = _symbols(word)
    if not 1 <= w <= len(symbols):
        raise ValueError(f"suffix length {w} outside [1, {len(symbols)}]")
    return word_probability(model, symbols[len(symbols) - w:])


def pattern_probability(model: MarkovModel, pattern: Seq[int | None]) -> float:
    """Probability of a pattern with ``None`` wildcards, by a forward pass over contexts.

    Wildcard runs longer than the order are collapsed into one matrix power.
    """
    m = model.order
    pattern = list(pattern) + [None] * max(0, m - len(pattern))
    head = pattern[:m]
    mask = np.ones(model.n_contexts, dtype=bool)
    for j, c in enumerate(head):
        if c is not None:
            mask &= model.contexts[:, j] == c
    forward = np.where(mask, model.stationary, 0.0)
    i = m
    while i < len(pattern):
        if pattern[i] is None and m > 0:
            run = 0
            while i + run < len(pattern) and pattern[i + run] is None:
                run += 1
            if run > 2 * m:
                forward = forward @ np.linalg.matrix_power(model.context_matrix(), run)
                i += run
                continue
        forward = model.emit(forward, pattern[i])
        i += 1
    return float(forward.sum())


def overlap_compatible(symbols: Seq[int], d: int) -> bool:
    """True when a copy shifted right by ``d`` agrees with the word on their overlap."""
    n = len(symbols)
    if d >= n:
        return True
    return tuple(symbols[d:]) == tuple(symbols[: n - d])


def overlap_probability(model: MarkovModel, word: Word | Seq[int], d: int) -> float:
    """P(word at position 0 and word at position d)."""
    symbols = _symbols(word)
    n = len(symbols)
    if d < 1:
        raise ValueError("shift must be at least 1")
    if d < n:
        if not overlap_compatible(symbols, d):
            return 0.0
        return word_probability(model, list(symbols[:d]) + list(symbols))
    return pattern_probability(model, list(symbols) + [None] * (d - n) + list(symbols))


def second_eigenvalue(model: MarkovModel, cross_check: bool = True) -> float:
    """Second-largest eigenvalue modulus of the context transition matrix.

    Raises :class:`ChainNotMixingError` when it is within 1e-12 of 1.
    """
    Q = model.context_matrix()
    if Q.shape[0] == 1:
        return 0.0
    vals = np.linalg.eigvals(Q)
    mods = np.sort(np.abs(vals))[::-1]
    # the Perron root is 1; drop the eigenvalue closest to it and keep the rest
    rest = np.delete(vals, int(np.argmin(np.abs(vals - 1.0))))
    nu = float(np.max(np.abs(rest))) if rest.size else 0.0
    if nu >= 1 - 1e-12 or mods[0] > 1 + 1e-9:
        raise ChainNotMixingError(f"chain not mixing (second eigenvalue modulus {nu:.12g})")
    if cross_check:
        other = deflated_spectral_radius(Q, model.stationary)
        if abs(other - nu) > 1e-6 * max(1.0, nu):
            log.warning("second eigenvalue cross-check disagrees: eig %.12g vs power %.12g", nu, other)
    return nu


def deflated_spectral_radius(Q: np.ndarray, mu: np.ndarray, squarings: int = 60) -> float:
    """Spectral radius of Q - 1 mu by normalised repeated squaring.

    Removing the rank-one stationary projector leaves every eigenvalue of Q
    except the Perron root 1, so the growth rate of the powers is the second
    eigenvalue modulus. The projector is re-applied after each squaring so
    rounding cannot reintroduce the unit eigenvalue.
    """
    S = Q.shape[0]
    ones = np.ones(S)

    def project(M):
        M = M - np.outer(ones, mu @ M)
        return M - np.outer(M @ ones, mu)

    M = project(Q.astype(float))
    scale = np.linalg.norm(M)
    if scale == 0:
        return 0.0
    M = M / scale
    log_norm = math.log(scale)  # log ||B^(2^j)|| accumulated as we go
    power = 1
    for _ in range(squarings):
        M = project(M @ M)
        s = np.linalg.norm(M)
        if s == 0 or not np.isfinite(s):
            return 0.0 if s == 0 else float("nan")
        log_norm = 2 * log_norm + math.log(s)
        power *= 2
        M = M / s
    return math.exp(log_norm / power)


def mixing_params(model: MarkovModel) -> MixingParams:
    """K = 1 / min stationary context probability, nu = second eigenvalue modulus."""
    mu_min = float(model.stationary.min())
    if mu_min <= 0:
        raise ChainNotMixingError("a context has zero stationary probability; K is unbounded")
    return MixingParams(K=1.0 / mu_min, nu=second_eigenvalue(model))


def _symbols(word) -> tuple[int, ...]:
    if isinstance(word, Word):
        return word.symbols
    return tuple(int(c) for c in word)


def dump_model(model: MarkovModel, path: str | os.PathLike | None = None) -> str:
    """Serialise a model as plain text; floats keep 17 significant digits."""
    A, m = model.alphabet.size, model.order
    lines = ["# markov model", f"order {m}", f"alphabet {model.alphabet.symbols}"]
    for c in range(A ** m):
        label = model.alphabet.decode(_digits(c, A, m)) or "-"
        for x in range(A):
            lines.append(f"transition {label} {model.alphabet.symbols[x]} {model.transitions[c, x]:.17g}")
    for c in range(A ** m):
        label = model.alphabet.decode(_digits(c, A, m)) or "-"
        lines.append(f"stationary {label} {model.stationary[c]:.17g}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_model(text_or_path: str | os.PathLike) -> MarkovModel:
    text = str(text_or_path)
    if "\n" not in text and os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    order = alphabet = None
    trans_rows: list[tuple[str, str, float]] = []
    stat_rows: list[tuple[str, float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields or fields[0].startswith("#"):
            continue
        key = fields[0]
        try:
            if key == "order":
                order = int(fields[1])
            elif key == "alphabet":
                alphabet = Alphabet(fields[1])
            elif key == "transition":
                trans_rows.append((fields[1], fields[2], float(fields[3])))
            elif key == "stationary":
                stat_rows.append((fields[1], float(fields[2])))
            else:
                raise ValueError(f"unknown key {key!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"model line {lineno}: {exc}") from None
    if order is None or alphabet is None:
        raise ValueError("model text lacks an order or alphabet header")
    A = alphabet.size

    def ctx(label):
        return 0 if label == "-" else int(np.dot(alphabet.encode(label), A ** np.arange(order - 1, -1, -1)))

    trans = np.full((A ** order, A), np.nan)
    for label, sym, p in trans_rows:
        trans[ctx(label), alphabet.symbols.index(sym)] = p
    if np.isnan(trans).any():
        raise ValueError("model text is missing transition entries")
    if stat_rows:
        stat = np.full(A ** order, np.nan)
        for label, p in stat_rows:
            stat[ctx(label)] = p
        if np.isnan(stat).any():
            raise ValueError("model text is missing stationary entries")
        return MarkovModel(order, alphabet, trans, stat)
    return MarkovModel.from_transitions(trans, alphabet, order)
