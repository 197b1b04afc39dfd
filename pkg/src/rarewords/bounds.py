"""Per-count Poisson approximation error bounds under psi-mixing, and the Chen-Stein bound.

All per-count bounds are evaluated in natural-log space. Two modes:

``theorem``
    the closed form with the global constant 254 and the piecewise factor g.
``tight``
    the sum of the five intermediate bounds (clumped configurations, mixing
    of isolated occurrences, hitting-time approximation, gap correction and
    counting correction) from which the closed form is assembled.

Both modes share the k = 0 bound (hitting-time approximation) and the bound for
k > 2t/n, where the true probability vanishes for words that do not overlap
themselves before half their length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import gammaln, logsumexp

from .logspace import log_binom, log_poisson_sf, poisson_log_pmf
from .markov import MarkovModel, MixingParams, mixing_psi, overlap_probability, word_probability
from .seqio import Word
from .wordstats import DerivedScalars, ZeroProbabilityError, derived_scalars

FLOOR = 1e-300
LOG_FLOOR = math.log(FLOOR)


@dataclass(frozen=True)
class BoundConstants:
    c_psi: int = 254  # global constant of the closed form
    c_a: int = 24     # geometric approximation of hitting times, same base
    c_b: int = 25     # geometric approximation of hitting times, shifted base
    c_h: int = 105    # exponential approximation of the rescaled hitting time
    c_p: int = 116    # hitting time vs e^{-tP(A)}
    c_1: int = 5      # isolated occurrences at prescribed positions

    def consistent(self) -> bool:
        return self.c_p == self.c_h + 11 and self.c_psi == 1 + self.c_1 + 2 * self.c_p + 8 + 8


CONSTANTS = BoundConstants()


class ImpReason(str, Enum):
    PERIODIC = "PERIODIC"
    E_PSI_GE_1 = "E_PSI_GE_1"
    LAMBDA_TOO_HIGH = "LAMBDA_TOO_HIGH"
    ZETA_MARGIN_NEGATIVE = "ZETA_MARGIN_NEGATIVE"
    RANGE_EMPTY = "RANGE_EMPTY"
    NO_THRESHOLD = "NO_THRESHOLD"
    ZERO_PROBABILITY = "ZERO_PROBABILITY"

    def __str__(self) -> str:
        return self.value


class BoundUnavailable(Exception):
    """A method cannot return a result for this input; ``reason`` says why."""

    def __init__(self, reason: ImpReason, detail: str = ""):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason


MODES = ("tight", "theorem")


def check_preconditions(scalars: DerivedScalars, mode: str) -> None:
    """Raise :class:`BoundUnavailable` when the psi-mixing bound does not apply."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    st = scalars.structure
    if st.early_overlap:
        raise BoundUnavailable(ImpReason.PERIODIC, f"period {st.period} <= {st.length // 2}")
    if scalars.e_psi >= 1:
        raise BoundUnavailable(ImpReason.E_PSI_GE_1, f"e_psi = {scalars.e_psi:.6g}")
    if scalars.zeta - 11 * scalars.e_psi <= 0:
        raise BoundUnavailable(ImpReason.ZETA_MARGIN_NEGATIVE,
                               f"zeta - 11 e_psi = {scalars.zeta - 11 * scalars.e_psi:.6g}")
    if mode == "tight" and scalars.epsilon is None:
        raise BoundUnavailable(ImpReason.RANGE_EMPTY, "word too probable for bound")


class _PsiBound:
    """Log-error evaluator for one (word, model, t) with the scalars cached."""

    def __init__(self, scalars: DerivedScalars, mode: str, constants: BoundConstants = CONSTANTS):
        check_preconditions(scalars, mode)
        self.s = scalars
        self.mode = mode
        self.c = constants
        self.t = float(scalars.t)
        self.n = scalars.structure.length
        self.p = scalars.prob
        self.tp = self.t * self.p
        self.log_e = math.log(scalars.e_psi)
        self.log_pp = math.log(self.p * (1.0 + scalars.psi_n))
        self.margin = scalars.zeta - 11 * scalars.e_psi
        lam_over_e = scalars.lam / scalars.e_psi
        self.j = math.floor(lam_over_e) if math.isfinite(lam_over_e) else math.inf

    @property
    def k_max(self) -> int:
        return math.floor(2 * self.t / self.n)

    def _lead(self, k):
        # log of e^{-(t - (3k+1)n) P(A)}; kept even when the exponent turns positive
        return -(self.t - (3 * k + 1) * self.n) * self.p

    def log_zero(self) -> float:
        c = self.c
        return (math.log(c.c_p) + self.log_e + math.log(max(self.tp, 1.0))
                - self.margin * self.tp)

    def log_beyond(self, k):
        """Bound for k > 2t/n (not floored)."""
        k = np.asarray(k, dtype=float)
        return (math.log(0.5) + (k - 1) * _safe_log(self.tp) - gammaln(k) + self.log_e)

    def log_theorem(self, k):
        k = np.asarray(k, dtype=float)
        log2lam = _safe_log(2 * self.s.lam)
        j = self.j
        small = (k - 1) * log2lam - gammaln(k)
        if math.isfinite(j):
            large = (k - 1) * log2lam - gammaln(j + 1) + (k - j - 1) * self.log_e
        else:
            large = small
        g = np.where(k < j, small, large)
        return math.log(self.c.c_psi) + self.log_e + self._lead(k) + g

    def tight_terms(self, k: int) -> dict[str, float]:
        """The five log-space addends of the tight bound at 1 <= k <= 2t/n."""
        c, t, p, n, tp = self.c, self.t, self.p, self.n, self.tp
        lead = self._lead(k)
        terms = {}
        # clumped configurations: at most k-1 clusters
        if k >= 2:
            i = np.arange(1, k, dtype=float)
            i = i[i <= t]
            if i.size:
                b = (log_binom(t, i) + log_binom(k - 1, i - 1) + i * self.log_pp
                     + (k - i) * self.log_e + lead)
                terms["clumps"] = float(logsumexp(b))
        terms["isolated"] = (math.log(c.c_1) + k * math.log(t) - gammaln(k) + k * self.log_pp
                             + self.log_e + lead)
        eps = self.s.epsilon
        bracket = (8 + c.c_a * tp + c.c_a + 2 * c.c_b) * eps + 11 * tp * self.s.e_psi
        terms["hitting"] = (k * _safe_log(tp) - gammaln(k) + math.log((k + 1) / k) + math.log(bracket)
                            - self.margin * tp)
        terms["gaps"] = (k * _safe_log(tp) - gammaln(k + 1) + math.log(k + 1) + math.log(2 * n * p)
                         - tp + 2 * (k + 1) * n * p)
        terms["counting"] = math.log(k * (k + 4 * n) / t) + poisson_log_pmf(tp, k)
        return terms

    def log_tight(self, k: int) -> float:
        return float(logsumexp(list(self.tight_terms(k).values())))

    def log_error(self, k: int) -> float:
        """Floored log-error at count k."""
        if k < 0:
            raise ValueError("count must be nonnegative")
        if k == 0:
            value = self.log_zero()
        elif k * self.n > 2 * self.t:
            value = float(self.log_beyond(k))
        elif self.mode == "theorem":
            value = float(self.log_theorem(k))
        else:
            value = self.log_tight(k)
        return max(value, LOG_FLOOR)

    def log_errors(self, ks: np.ndarray) -> np.ndarray:
        """Vectorised ``log_error`` for 1 <= k <= 2t/n in theorem mode, per-k otherwise."""
        ks = np.asarray(ks)
        if self.mode == "theorem" and ks.size and ks.min() >= 1 and ks.max() * self.n <= 2 * self.t:
            return np.maximum(self.log_theorem(ks), LOG_FLOOR)
        return np.array([self.log_error(int(k)) for k in ks])


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _scalars(model, word, params, t, scalars=None):
    if scalars is not None:
        return scalars
    try:
        return derived_scalars(model, word, params, t)
    except ZeroProbabilityError as exc:
        raise BoundUnavailable(ImpReason.ZERO_PROBABILITY, str(exc)) from None


def psi_error_at(model: MarkovModel, word: Word, params: MixingParams, t: float, k: int,
                 mode: str = "tight") -> float:
    """Log of the bound on |P(N = k) - Poisson(tP(A))(k)| for ``t`` windows.

    Raises :class:`BoundUnavailable` when a precondition fails.
    """
    return _PsiBound(_scalars(model, word, params, t), mode).log_error(k)


@dataclass
class ErrorProfile:
    """Per-count log-error bounds for one word, truncated once they reach the floor.

    ``log_errors[k]`` is stored for k <= ``stop``; between ``stop`` and
    ``k_max`` the bound is the floor, and past ``k_max`` = floor(2t/n) the
    factorial closed form applies. Invalid profiles carry ``imp_reason``.
    """

    word: Word
    t: float
    method: str
    lambda0: float
    log_errors: np.ndarray = field(default_factory=lambda: np.empty(0))
    stop: int = -1
    k_max: int = 0
    imp_reason: ImpReason | None = None
    imp_detail: str = ""
    scalars: DerivedScalars | None = None
    uniform_bound: float | None = None
    chen_stein: ChenSteinBound | None = None
    _bound: _PsiBound | None = field(default=None, repr=False)
    _tail_cache: np.ndarray | None = field(default=None, repr=False)
    _head_cache: np.ndarray | None = field(default=None, repr=False)

    @property
    def valid(self) -> bool:
        return self.imp_reason is None

    @property
    def uniform(self) -> bool:
        return self.uniform_bound is not None

    def require_valid(self) -> None:
        if not self.valid:
            raise BoundUnavailable(self.imp_reason, self.imp_detail)

    def log_error(self, k: int) -> float:
        self.require_valid()
        if self.uniform:
            return _safe_log(self.uniform_bound)
        if k <= self.stop:
            return float(self.log_errors[k])
        if k <= self.k_max:
            return LOG_FLOOR
        return max(float(self._bound.log_beyond(k)), LOG_FLOOR)

    def _stored_tail(self) -> np.ndarray:
        if self._tail_cache is None:
            rev = np.logaddexp.accumulate(self.log_errors[::-1])
            self._tail_cache = rev[::-1]
        return self._tail_cache

    def _stored_head(self) -> np.ndarray:
        if self._head_cache is None:
            self._head_cache = np.logaddexp.accumulate(self.log_errors)
        return self._head_cache

    def log_beyond_tail(self, u: int) -> float:
        """log sum of the unfloored closed form over k >= max(u, k_max + 1)."""
        start = max(u, self.k_max + 1)
        # sum_{k>=start} (tp)^{k-1}/(k-1)! = e^{tp} P(Poisson(tp) >= start - 1)
        tp = self._bound.tp
        if tp <= 0:
            return -math.inf
        return math.log(0.5) + self._bound.log_e + tp + log_poisson_sf(tp, start - 1)

    def log_error_tail(self, u: int) -> float:
        """log sum_{k >= u} Error(k), never under-counting the floored region."""
        self.require_valid()
        if self.uniform:
            return _safe_log(self.uniform_bound)
        parts = []
        if u <= self.stop:
            parts.append(float(self._stored_tail()[max(u, 0)]))
        lo = max(u, self.stop + 1)
        if lo <= self.k_max:
            parts.append(LOG_FLOOR + math.log(self.k_max - lo + 1))
        parts.append(self.log_beyond_tail(u))
        return float(logsumexp(parts))

    def log_error_head(self, l: int) -> float:
        """log sum_{k <= l} Error(k)."""
        self.require_valid()
        if self.uniform:
            return _safe_log(self.uniform_bound)
        parts = [float(self._stored_head()[min(l, self.stop)])]
        hi = min(l, self.k_max)
        if hi > self.stop:
            parts.append(LOG_FLOOR + math.log(hi - self.stop))
        if l > self.k_max:
            ks = np.arange(self.k_max + 1, l + 1)
            parts.append(float(logsumexp(np.maximum(self._bound.log_beyond(ks), LOG_FLOOR))))
        return float(logsumexp(parts))


def error_profile(model: MarkovModel, word: Word, params: MixingParams, t: float,
                  mode: str = "tight", scalars: DerivedScalars | None = None,
                  chunk: int = 512) -> ErrorProfile:
    """Evaluate the per-count bound for k = 0, 1, ... until it has decayed to the floor.

    Evaluation stops at the first k > lambda whose value is at the floor, or at
    k_max. On a precondition failure the profile is returned invalid, tagged
    with the reason, rather than raising.
    """
    method = f"psi-{mode}"
    try:
        scalars = _scalars(model, word, params, t, scalars)
    except BoundUnavailable as exc:
        return ErrorProfile(word, t, method, t * word_probability(model, word), imp_reason=exc.reason,
                            imp_detail=str(exc))
    profile = ErrorProfile(word, t, method, scalars.lambda0, scalars=scalars)
    try:
        bound = _PsiBound(scalars, mode)
    except BoundUnavailable as exc:
        profile.imp_reason, profile.imp_detail = exc.reason, str(exc)
        return profile
    profile._bound = bound
    profile.k_max = bound.k_max
    values = [max(bound.log_zero(), LOG_FLOOR)]
    stop = None
    k = 1
    while stop is None and k <= bound.k_max:
        ks = np.arange(k, min(k + chunk, bound.k_max + 1))
        block = bound.log_errors(ks)
        hit = np.flatnonzero((block <= LOG_FLOOR) & (ks > scalars.lam))
        if hit.size:
            block = block[: hit[0] + 1]
            stop = int(ks[hit[0]])
        values.extend(block.tolist())
        k = int(ks[-1]) + 1
    profile.log_errors = np.asarray(values)
    profile.stop = len(values) - 1
    return profile


def chen_stein_profile(model: MarkovModel, word: Word, params: MixingParams, t: float,
                       neighborhood: int | None = None) -> ErrorProfile:
    """A uniform-error profile carrying the Chen-Stein total variation bound."""
    prob = word_probability(model, word)
    profile = ErrorProfile(word, t, "chen-stein-uniform", t * prob)
    if prob <= 0:
        profile.imp_reason = ImpReason.ZERO_PROBABILITY
        profile.imp_detail = f"word {word.text!r} has zero probability"
        return profile
    cs = chen_stein_bound(model, word, t, neighborhood, params=params)
    profile.uniform_bound = cs.tv_bound
    profile.chen_stein = cs
    return profile


@dataclass(frozen=True)
class ChenSteinBound:
    b1: float
    b2: float
    b3: float
    tv_bound: float
    lambda0: float
    neighborhood: int


def chen_stein_bound(model: MarkovModel, word: Word, t: float, neighborhood: int | None = None,
                     params: MixingParams | None = None) -> ChenSteinBound:
    """Chen-Stein bound on d_TV(count, Poisson(t P(A))) over ``t`` windows.

    The neighbourhood of window i is every window within ``neighborhood``
    positions (default 3n). Long-range dependence outside it is bounded with
    the mixing coefficient across the gap of D - n + 1 symbols.
    """
    n = word.length
    D = 3 * n if neighborhood is None else int(neighborhood)
    if D < n:
        raise ValueError(f"neighbourhood radius {D} is smaller than the word length {n}")
    if params is None:
        params = model.mixing()
    W = float(t)
    p = word_probability(model, word)
    d = np.arange(1, D + 1)
    pairs = 2.0 * np.maximum(W - d, 0.0)  # ordered pairs (i, j) at distance d
    joint = np.array([overlap_probability(model, word, int(x)) for x in d])
    b1 = p * p * (W + pairs.sum())
    b2 = float(np.dot(pairs, joint))
    b3 = 2.0 * W * p * mixing_psi(params, D - n + 1)
    lam = W * p
    total = b1 + b2 + b3
    if lam > 0:
        improved = (-math.expm1(-lam)) / lam * (b1 + b2) + min(1.0, math.sqrt(2.0 / (lam * math.e))) * b3
        tv = min(total, improved)
    else:
        tv = total
    return ChenSteinBound(float(b1), b2, float(b3), float(tv), lam, D)
