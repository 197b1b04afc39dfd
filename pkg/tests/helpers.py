"""Shared fixtures: seeded random models, chain simulation and oracle-sized instances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rarewords.bounds import ErrorProfile, error_profile
from rarewords.markov import MarkovModel, MixingParams, word_probability
from rarewords.seqio import Alphabet, Word
from rarewords.wordstats import word_structure

# one "criterion N: PASS|FAIL|SKIP ..." line per acceptance check, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool | None, detail: str) -> str:
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    line = f"criterion {number}: {status}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def random_model(rng: np.random.Generator, A: int, m: int, concentration: float = 2.0,
                 floor: float = 0.0) -> MarkovModel:
    trans = rng.dirichlet(np.full(A, concentration), size=A ** m)
    if floor:
        trans = np.clip(trans, floor, None)
        trans /= trans.sum(axis=1, keepdims=True)
    return MarkovModel.from_transitions(trans, Alphabet("acgt"[:A] if A <= 4 else "abcdefgh"[:A]), m)


def simulate_chains(model: MarkovModel, n_chains: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """(n_chains, length) array of independent stationary runs of the model."""
    A, m = model.alphabet.size, model.order
    out = np.empty((n_chains, length), dtype=np.int64)
    cum = np.cumsum(model.transitions, axis=1)
    if m == 0:
        return np.searchsorted(cum[0], rng.random((n_chains, length)), side="right").clip(max=A - 1)
    ctx = rng.choice(model.n_contexts, size=n_chains, p=model.stationary)
    out[:, :m] = model.contexts[ctx]
    for i in range(m, length):
        u = rng.random(n_chains)
        sym = (u[:, None] >= cum[ctx]).sum(axis=1).clip(max=A - 1)
        out[:, i] = sym
        ctx = (ctx * A + sym) % (A ** m)
    return out


def window_hits(chains: np.ndarray, symbols, A: int) -> np.ndarray:
    """Boolean (n_chains, L - n + 1) array marking occurrences of ``symbols``."""
    n = len(symbols)
    L = chains.shape[1]
    hit = np.ones((chains.shape[0], L - n + 1), dtype=bool)
    for j, c in enumerate(symbols):
        hit &= chains[:, j: L - n + 1 + j] == c
    return hit


@dataclass
class Instance:
    model: MarkovModel
    word: Word
    params: MixingParams
    t: int  # window count
    profiles: dict[str, ErrorProfile]

    @property
    def length(self) -> int:
        return self.t + self.word.length - 1


def oracle_instances(seed: int, count: int, cell_cap: float = 3e5, max_tries: int = 100000):
    """Seeded soundness instances (alphabets 2-4, orders 0-1, words of length 3-6, no early overlap).

    The window count targets a log-uniform t P(A) in [0.05, 20] and is cut
    back so the oracle programme has at most ``cell_cap`` states x windows.
    Only instances whose profile is valid in both modes are kept; the second
    return value tallies why the others were rejected.
    """
    rng = np.random.default_rng(seed)
    kept: list[Instance] = []
    rejected: dict[str, int] = {}
    for _ in range(max_tries):
        if len(kept) >= count:
            break
        A = int(rng.integers(2, 5))
        m = int(rng.integers(0, 2))
        n = int(rng.integers(3, 7))
        model = random_model(rng, A, m, float(rng.choice([0.7, 2.0, 10.0])), floor=0.02)
        word = Word(tuple(int(x) for x in rng.integers(0, A, n)), model.alphabet)
        if word_structure(word).early_overlap:
            rejected["early overlap"] = rejected.get("early overlap", 0) + 1
            continue
        params = model.mixing()
        target = math.exp(rng.uniform(math.log(0.05), math.log(20.0)))
        t = max(n, round(target / word_probability(model, word)))
        states = A ** max(n - 1, m)
        t = min(t, int(cell_cap // states))
        if t < n:
            rejected["oracle budget"] = rejected.get("oracle budget", 0) + 1
            continue
        profiles = {mode: error_profile(model, word, params, t, mode) for mode in ("tight", "theorem")}
        bad = [p.imp_reason.value for p in profiles.values() if not p.valid]
        if bad:
            rejected[bad[0]] = rejected.get(bad[0], 0) + 1
            continue
        kept.append(Instance(model, word, params, t, profiles))
    return kept, rejected
