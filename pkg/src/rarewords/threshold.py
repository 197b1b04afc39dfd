"""Significance thresholds for over- and under-representation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import (BoundUnavailable, ErrorProfile, ImpReason, chen_stein_profile, error_profile)
from .logspace import log_poisson_cdf, log_poisson_sf, poisson_log_pmf
from .markov import MarkovModel, MixingParams
from .seqio import Sequence, Word, count_overlapping

__all__ = ["poisson_log_pmf", "over_threshold", "under_threshold", "classify", "ThresholdReport",
           "effective_windows", "build_profile"]

BOUNDARIES = ("at-least", "strict")
LAMBDA_CONVENTIONS = ("windows", "length")


def _check(profile: ErrorProfile, s: float, lambda_cap: float | None) -> None:
    if not 0 < s < 1:
        raise ValueError(f"significance must lie in (0, 1), got {s}")
    profile.require_valid()
    if lambda_cap is not None and profile.lambda0 > lambda_cap:
        raise BoundUnavailable(ImpReason.LAMBDA_TOO_HIGH,
                               f"lambda0 = {profile.lambda0:.6g} exceeds cap {lambda_cap:g}")


def log_upper_tail(profile: ErrorProfile, u: int) -> float:
    """log of sum_{k >= u} (Poisson(k) + Error(k))."""
    return float(np.logaddexp(log_poisson_sf(profile.lambda0, u), profile.log_error_tail(u)))


def log_lower_tail(profile: ErrorProfile, l: int) -> float:
    """log of sum_{k <= l} (Poisson(k) + Error(k))."""
    return float(np.logaddexp(log_poisson_cdf(profile.lambda0, l), profile.log_error_head(l)))


def over_threshold(profile: ErrorProfile, s: float, lambda_cap: float | None = None) -> int:
    """Smallest u >= 0 with sum_{k >= u} (Poisson(k) + Error(k)) < s.

    Raises :class:`BoundUnavailable` for an invalid profile, a Poisson
    parameter above ``lambda_cap``, or when no u up to floor(2t/n) + 1 works.
    """
    _check(profile, s, lambda_cap)
    log_s = math.log(s)
    hi = _search_limit(profile)
    if log_upper_tail(profile, hi) >= log_s:
        raise BoundUnavailable(ImpReason.NO_THRESHOLD, f"tail stays above s = {s:g}")
    lo = 0
    if log_upper_tail(profile, lo) < log_s:
        return 0
    # invariant: tail(lo) >= s > tail(hi); the tail is nonincreasing in u
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if log_upper_tail(profile, mid) < log_s:
            hi = mid
        else:
            lo = mid
    return hi


def under_threshold(profile: ErrorProfile, s: float, lambda_cap: float | None = None) -> int | None:
    """Largest l >= 0 with sum_{k <= l} (Poisson(k) + Error(k)) < s, or None if l = 0 fails."""
    _check(profile, s, lambda_cap)
    log_s = math.log(s)
    if log_lower_tail(profile, 0) >= log_s:
        return None
    lo, hi = 0, _search_limit(profile)
    if log_lower_tail(profile, hi) < log_s:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if log_lower_tail(profile, mid) < log_s:
            lo = mid
        else:
            hi = mid
    return lo


def _search_limit(profile: ErrorProfile) -> int:
    if profile.uniform:
        lam = profile.lambda0
        return int(lam + 50 * math.sqrt(lam) + 1000)
    return profile.k_max + 1


def effective_windows(seq_length: int, word_length: int, convention: str = "windows") -> int:
    """Window count W = t - n + 1, or the sequence length under the ``length`` convention."""
    if convention == "windows":
        return max(seq_length - word_length + 1, 0)
    if convention == "length":
        return seq_length
    raise ValueError(f"lambda convention must be one of {LAMBDA_CONVENTIONS}")


def build_profile(model: MarkovModel, word: Word, params: MixingParams, t: float,
                  method: str = "psi", mode: str = "tight", neighborhood: int | None = None) -> ErrorProfile:
    if method == "psi":
        return error_profile(model, word, params, t, mode)
    if method == "chen-stein":
        return chen_stein_profile(model, word, params, t, neighborhood)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class ThresholdReport:
    word: str
    s: float
    direction: str
    threshold: int | None
    imp_reason: ImpReason | None
    observed: int
    verdict: str
    method: str
    lambda0: float

    def __post_init__(self):
        if (self.threshold is None) == (self.imp_reason is None):
            raise ValueError("a report carries exactly one of threshold and imp_reason")


def report_from_profile(profile: ErrorProfile, observed: int, s: float, direction: str,
                        lambda_cap: float | None = None, boundary: str = "at-least") -> ThresholdReport:
    """Threshold and verdict for one (profile, s, direction)."""
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}")
    threshold = reason = None
    try:
        if direction == "over":
            threshold = over_threshold(profile, s, lambda_cap)
        elif direction == "under":
            threshold = under_threshold(profile, s, lambda_cap)
            if threshold is None:
                reason = ImpReason.NO_THRESHOLD
        else:
            raise ValueError(f"direction must be 'over' or 'under', got {direction!r}")
    except BoundUnavailable as exc:
        reason = exc.reason
    if reason is not None:
        verdict = "IMP"
    elif direction == "over":
        hit = observed > threshold if boundary == "strict" else observed >= threshold
        verdict = "SIGNIFICANT" if hit else "NOT_SIGNIFICANT"
    else:
        hit = observed < threshold if boundary == "strict" else observed <= threshold
        verdict = "SIGNIFICANT" if hit else "NOT_SIGNIFICANT"
    return ThresholdReport(profile.word.text, s, direction, threshold, reason, observed, verdict,
                           profile.method, profile.lambda0)


def classify(model: MarkovModel, seq: Sequence, word: Word, s: float, direction: str = "over",
             method: str = "psi", mode: str = "tight", *, params: MixingParams | None = None,
             lambda_convention: str = "windows", neighborhood: int | None = None,
             lambda_cap: float | None = None, boundary: str = "at-least") -> ThresholdReport:
    """Count the word in ``seq`` and decide whether it is exceptional at level ``s``."""
    params = params or model.mixing()
    t = effective_windows(seq.length, word.length, lambda_convention)
    profile = build_profile(model, word, params, t, method, mode, neighborhood)
    observed = count_overlapping(seq, word)
    return report_from_profile(profile, observed, s, direction, lambda_cap, boundary)
