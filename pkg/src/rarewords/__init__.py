"""Exceptional word detection in Markov sequences with explicit Poisson approximation error bounds."""
from .bounds import (CONSTANTS, BoundUnavailable, ChenSteinBound, ErrorProfile, ImpReason, chen_stein_bound,
                     chen_stein_profile, error_profile, psi_error_at)
from .markov import (ChainNotMixingError, MarkovModel, MixingParams, estimate_model, mixing_params,
                     overlap_probability, word_probability)
from .oracle import CountDistribution, brute_force_distribution, exact_distribution
from .seqio import DNA, Alphabet, FastaError, Sequence, Word, count_overlapping, parse_fasta, read_fasta
from .threshold import ThresholdReport, classify, over_threshold, poisson_log_pmf, under_threshold
from .wordstats import DerivedScalars, WordStructure, derived_scalars, e_psi, epsilon_a, word_structure, zeta

__all__ = [
    "CONSTANTS", "BoundUnavailable", "ChenSteinBound", "ErrorProfile", "ImpReason", "chen_stein_bound",
    "chen_stein_profile", "error_profile", "psi_error_at", "ChainNotMixingError", "MarkovModel",
    "MixingParams", "estimate_model", "mixing_params", "overlap_probability", "word_probability",
    "CountDistribution", "brute_force_distribution", "exact_distribution", "DNA", "Alphabet", "FastaError",
    "Sequence", "Word", "count_overlapping", "parse_fasta", "read_fasta", "ThresholdReport", "classify",
    "over_threshold", "poisson_log_pmf", "under_threshold", "DerivedScalars", "WordStructure",
    "derived_scalars", "e_psi", "epsilon_a", "word_structure", "zeta",
]
