import itertools
import math
from dataclasses import replace

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gammaln
from scipy.stats import poisson

from helpers import random_model
from rarewords.bounds import (CONSTANTS, FLOOR, LOG_FLOOR, BoundUnavailable, ImpReason, chen_stein_bound,
                              check_preconditions,
                              chen_stein_profile, error_profile, psi_error_at)
from rarewords.markov import MarkovModel, MixingParams, mixing_psi, word_probability
from rarewords.oracle import exact_distribution
from rarewords.seqio import DNA, Alphabet, Word
from rarewords.wordstats import derived_scalars

AB = Alphabet("ab")


def uniform_iid(alphabet=DNA):
    A = alphabet.size
    return MarkovModel.from_transitions(np.full((1, A), 1.0 / A), alphabet, 0)


def seeded_order1(seed=0):
    return random_model(np.random.default_rng(seed), 4, 1, concentration=5.0)


def test_constants_consistent():
    assert CONSTANTS.consistent()
    assert (CONSTANTS.c_psi, CONSTANTS.c_p, CONSTANTS.c_h) == (254, 116, 105)
    assert FLOOR == 1e-300


# --- preconditions -------------------------------------------------------------

def test_periodic_word_refused():
    model = seeded_order1()
    with pytest.raises(BoundUnavailable) as info:
        psi_error_at(model, Word.from_string("ggtggtgg"), model.mixing(), 1e5, 3)
    assert info.value.reason is ImpReason.PERIODIC
    prof = error_profile(model, Word.from_string("ggtggtgg"), model.mixing(), 1e5)
    assert not prof.valid and prof.imp_reason is ImpReason.PERIODIC


def test_large_e_psi_refused():
    # a likely word on two letters with a secondary period and strong ψ
    model = MarkovModel.from_transitions(np.array([[0.8, 0.2]]), AB, 0)
    word = Word.from_string("aabaa", AB)
    prof = error_profile(model, word, MixingParams(20.0, 0.5), 100)
    assert prof.imp_reason is ImpReason.E_PSI_GE_1
    assert prof.scalars.e_psi >= 1


def test_zeta_margin_negative():
    # uniform letters, period 2: zeta = 15/16 but e_psi = 3/4
    model = uniform_iid()
    prof = error_profile(model, Word.from_string("aca"), model.mixing(), 50)
    assert prof.scalars is None or prof.scalars.e_psi < 1
    assert prof.imp_reason is ImpReason.ZETA_MARGIN_NEGATIVE


def test_range_empty_only_blocks_tight_mode():
    model, word, params = valid_instance()
    sc = derived_scalars(model, word, params, 1e4)
    blocked = replace(sc, epsilon=None, epsilon_l=None)
    with pytest.raises(BoundUnavailable) as info:
        check_preconditions(blocked, "tight")
    assert info.value.reason is ImpReason.RANGE_EMPTY
    check_preconditions(blocked, "theorem")
    prof = error_profile(model, word, params, 1e4, "theorem", scalars=blocked)
    assert prof.valid


def test_zero_probability_word():
    model = MarkovModel.from_transitions(np.array([[0.0, 1.0], [0.5, 0.5]]), AB, 1)
    prof = error_profile(model, Word.from_string("aab", AB), MixingParams(2.0, 0.5), 100)
    assert prof.imp_reason is ImpReason.ZERO_PROBABILITY
    cs = chen_stein_profile(model, Word.from_string("aab", AB), MixingParams(2.0, 0.5), 100)
    assert cs.imp_reason is ImpReason.ZERO_PROBABILITY


def test_bad_mode():
    model = seeded_order1()
    with pytest.raises(ValueError):
        psi_error_at(model, Word.from_string("gatc"), model.mixing(), 100, 1, mode="loose")


# --- formula instances ---------------------------------------------------------

def valid_instance():
    model = seeded_order1(3)
    word = Word.from_string("gctggtgg")
    return model, word, model.mixing()


def test_beyond_branch_with_unit_lambda():
    model, word, params = valid_instance()
    p = word_probability(model, word)
    t = 1.0 / p  # t P(A) = 1
    e = derived_scalars(model, word, params, t).e_psi
    k = math.floor(2 * t / word.length) + 25
    expected = math.log(0.5) + (k - 1) * math.log(1.0) - gammaln(k) + math.log(e)
    for mode in ("tight", "theorem"):
        value = psi_error_at(model, word, params, t, k, mode)
        assert value == pytest.approx(max(expected, LOG_FLOOR), abs=1e-9)


def test_zero_branch_shared_by_modes():
    model, word, params = valid_instance()
    sc = derived_scalars(model, word, params, 2e4)
    tp = sc.lambda0
    expected = (math.log(116 * sc.e_psi * max(tp, 1.0)) - (sc.zeta - 11 * sc.e_psi) * tp)
    for mode in ("tight", "theorem"):
        assert psi_error_at(model, word, params, 2e4, 0, mode) == pytest.approx(expected, rel=1e-12)


def mp_tight(t, n, p, psi_n, e, eps, zeta, k):
    """The five-term sum in 50-digit arithmetic, written directly from the definitions."""
    mpmath.mp.dps = 50
    t, p, psi_n, e, eps, zeta = map(mpmath.mpf, (t, p, psi_n, e, eps, zeta))
    tp = t * p
    pp = p * (1 + psi_n)
    lead = mpmath.exp(-(t - (3 * k + 1) * n) * p)
    clumps = sum(mpmath.binomial(t, i) * mpmath.binomial(k - 1, i - 1) * pp ** i * e ** (k - i)
                 for i in range(1, k)) * lead
    isolated = 5 * t ** k / mpmath.factorial(k - 1) * pp ** k * e * lead
    bracket = (8 + 24 * tp + 24 + 50) * eps + 11 * tp * e
    hitting = tp ** k / mpmath.factorial(k - 1) * mpmath.mpf(k + 1) / k * bracket * mpmath.exp(-(zeta - 11 * e) * tp)
    gaps = t ** k / mpmath.factorial(k) * p ** k * (k + 1) * 2 * n * p * mpmath.exp(-tp) * mpmath.exp(2 * (k + 1) * n * p)
    counting = mpmath.mpf(k * (k + 4 * n)) / t * mpmath.exp(-tp) * tp ** k / mpmath.factorial(k)
    return clumps + isolated + hitting + gaps + counting


@pytest.mark.parametrize("k", [1, 2, 3, 7])
def test_tight_mode_matches_high_precision(k):
    model, word, params = valid_instance()
    t = 1e4
    sc = derived_scalars(model, word, params, t)
    ref = mp_tight(t, word.length, sc.prob, mixing_psi(params, word.length), sc.e_psi, sc.epsilon, sc.zeta, k)
    value = psi_error_at(model, word, params, t, k, "tight")
    assert math.exp(value) == pytest.approx(float(ref), rel=1e-10)


def mp_theorem(t, n, p, lam, e, k):
    mpmath.mp.dps = 50
    t, p, lam, e = map(mpmath.mpf, (t, p, lam, e))
    j = int(mpmath.floor(lam / e))
    if k < j:
        g = (2 * lam) ** (k - 1) / mpmath.factorial(k - 1)
    else:
        g = (2 * lam) ** (k - 1) / (mpmath.factorial(j) * (1 / e) ** (k - j - 1))
    return 254 * e * mpmath.exp(-(t - (3 * k + 1) * n) * p) * g


@pytest.mark.parametrize("t, k", [(1e4, 1), (1e4, 2), (2e5, 3), (2e5, 40), (2e5, 400)])
def test_theorem_mode_matches_high_precision(t, k):
    model, word, params = valid_instance()
    sc = derived_scalars(model, word, params, t)
    ref = mp_theorem(t, word.length, sc.prob, sc.lam, sc.e_psi, k)
    value = psi_error_at(model, word, params, t, k, "theorem")
    expected = max(float(mpmath.log(ref)), LOG_FLOOR)
    assert value == pytest.approx(expected, rel=1e-10)


# --- profiles ------------------------------------------------------------------

def test_profile_entries_finite_and_floored():
    model, word, params = valid_instance()
    for mode in ("tight", "theorem"):
        prof = error_profile(model, word, params, 2e5, mode)
        assert prof.valid
        assert np.all(np.isfinite(prof.log_errors))
        assert np.all(prof.log_errors >= LOG_FLOOR)
        assert prof.log_errors[prof.stop] == LOG_FLOOR or prof.stop == prof.k_max
        assert prof.log_error(prof.stop + 1) == LOG_FLOOR


def test_tight_profile_decays_past_lambda_over_e():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(150):
        A = int(rng.integers(2, 5))
        model = random_model(rng, A, int(rng.integers(0, 2)), floor=0.02)
        word = Word(tuple(int(x) for x in rng.integers(0, A, int(rng.integers(3, 8)))), model.alphabet)
        t = math.exp(rng.uniform(0, math.log(200))) / word_probability(model, word)
        prof = error_profile(model, word, model.mixing(), t, "tight")
        if not prof.valid:
            continue
        sc = prof.scalars
        start = int(max(sc.lam, math.floor(sc.lam / sc.e_psi))) + 2
        tail = prof.log_errors[start:]
        tail = tail[tail > LOG_FLOOR]
        if tail.size > 1:
            checked += 1
            assert np.all(np.diff(tail) < 0)
    assert checked >= 10


def test_error_tail_sums_never_undercount():
    model, word, params = valid_instance()
    t = 3000.0
    prof = error_profile(model, word, params, t, "tight")
    ks = np.arange(0, prof.k_max + 400)
    direct = np.array([prof.log_error(int(k)) for k in ks])
    # past k_max the closed form itself is summed, not its floored value
    unfloored = direct.copy()
    unfloored[prof.k_max + 1:] = prof._bound.log_beyond(ks[prof.k_max + 1:])
    for u in (0, 1, 5, prof.stop, prof.k_max, prof.k_max + 3):
        assert prof.log_error_tail(u) >= np.logaddexp.reduce(unfloored[u:]) - 1e-9
        assert prof.log_error_head(u) == pytest.approx(np.logaddexp.reduce(direct[: u + 1]), abs=1e-9)


def test_log_space_survives_large_lambda():
    model, word, params = valid_instance()
    p = word_probability(model, word)
    for lam0 in (500.0, 2000.0, 1e4):
        for mode in ("tight", "theorem"):
            prof = error_profile(model, word, params, lam0 / p, mode)
            if not prof.valid:
                continue
            assert np.all(np.isfinite(prof.log_errors))
            assert math.isfinite(prof.log_error_tail(int(lam0)))


def test_self_overlapping_word_clumps_exceed_bound():
    """Documents a known gap: clumps at shift p_A are not covered when 1 - zeta > e_psi."""
    model = MarkovModel.from_transitions(np.array([[0.05, 0.95]]), AB, 0)
    word = Word.from_string("aabaa", AB)
    t = 18
    exact = exact_distribution(model, word, t + word.length - 1)
    for mode in ("tight", "theorem"):
        prof = error_profile(model, word, model.mixing(), t, mode)
        assert prof.valid
        sc = prof.scalars
        assert 1 - sc.zeta > sc.e_psi
        gap = abs(exact.pmf(2) - poisson.pmf(2, prof.lambda0))
        assert gap > math.exp(prof.log_error(2)) + 1e-12


# --- Chen-Stein ----------------------------------------------------------------

def test_chen_stein_iid_has_no_long_range_term():
    model = uniform_iid()
    cs = chen_stein_bound(model, Word.from_string("gatc"), 1000, neighborhood=4)
    assert cs.b3 == 0.0


def test_chen_stein_hand_sum_over_pairs():
    model = uniform_iid(AB)
    word = Word.from_string("ab", AB)
    W, D = 10, 2
    cs = chen_stein_bound(model, word, W, neighborhood=D)
    p = 0.25
    b1 = b2 = 0.0
    for i, j in itertools.product(range(W), repeat=2):
        d = abs(i - j)
        if d <= D:
            b1 += p * p
        if 0 < d <= D:
            # "ab" at i and at i+1 is impossible; at distance 2 the copies are independent
            b2 += 0.0 if d == 1 else p * p
    assert cs.b1 == pytest.approx(b1, rel=1e-15)
    assert cs.b2 == pytest.approx(b2, rel=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 20), st.floats(10, 1e6))
def test_chen_stein_components(seed, extra, W):
    rng = np.random.default_rng(seed)
    model = random_model(rng, 4, 1)
    word = Word(tuple(int(x) for x in rng.integers(0, 4, int(rng.integers(3, 9)))), DNA)
    cs = chen_stein_bound(model, word, W, neighborhood=word.length + extra)
    assert min(cs.b1, cs.b2, cs.b3) >= 0
    assert cs.tv_bound <= cs.b1 + cs.b2 + cs.b3
    assert cs.neighborhood == word.length + extra


def test_chen_stein_neighbourhood_too_small():
    with pytest.raises(ValueError):
        chen_stein_bound(uniform_iid(), Word.from_string("gatc"), 100, neighborhood=3)
    assert chen_stein_bound(uniform_iid(), Word.from_string("gatc"), 100).neighborhood == 12
