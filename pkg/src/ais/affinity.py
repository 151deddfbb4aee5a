"""Similarity and matching measures between patterns and rating profiles.

Bit strings are compared by agreeing positions (Hamming complement) or by
the longest run of agreeing positions; real vectors by Euclidean distance;
rating profiles by Pearson correlation over co-rated items with
full-profile means; connection records by wildcard-aware field matching.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence, Sized, cast

import numpy as np
from numba import jit, prange
from scipy.spatial import distance

from .encoding import (
    WILDCARD,
    BitString,
    ConnectionRecord,
    Pattern,
    RealVector,
    UserProfile,
    encode_profile_pair,
)
from .types import BitMatrix, MatchingMatrix, RealArray, RunLengthMatrix

logger = logging.getLogger(__name__)


class PatternMismatchError(ValueError):
    """Raised when two patterns differ in variant or length."""


class PenaltyMode(Enum):
    """How Pearson scores over small overlaps are penalized."""

    LINEAR_SCALE = "linear-scale"  # Scale by n_overlap / threshold
    HARD_ZERO = "hard-zero"  # Treat as no information


class ZeroVariancePolicy(Enum):
    """What Pearson returns when a denominator term vanishes."""

    RETURN_ZERO = "return-zero"


class Measure(Enum):
    """Matching rules available to the generic affinity."""

    HAMMING = "hamming"
    CONTIGUOUS = "contiguous"
    EUCLIDEAN = "euclidean"
    PEARSON = "pearson"
    RECORD = "record"


@dataclass(frozen=True)
class AffinityConfig:
    """Pearson penalty settings.

    This class is immutable. All modifications return new instances.
    """

    overlap_penalty_threshold: int = 0
    penalty_mode: PenaltyMode = PenaltyMode.LINEAR_SCALE
    zero_variance_policy: ZeroVariancePolicy = ZeroVariancePolicy.RETURN_ZERO

    def __post_init__(self) -> None:
        """Validate the penalty threshold."""
        if self.overlap_penalty_threshold < 0:
            raise ValueError("overlap_penalty_threshold must be non-negative")

    def with_penalty(self, threshold: int, mode: PenaltyMode) -> "AffinityConfig":
        """Return new config with a different overlap penalty."""
        return replace(self, overlap_penalty_threshold=threshold, penalty_mode=mode)


DEFAULT_AFFINITY = AffinityConfig()


def _require_same_length(a: Sized, b: Sized) -> None:
    if len(a) != len(b):
        raise PatternMismatchError(f"length mismatch: {len(a)} != {len(b)}")


def hamming_score(a: BitString, b: BitString) -> int:
    """Number of positions where the two bit strings agree."""
    _require_same_length(a, b)
    return len(a) - int(np.count_nonzero(a.bits != b.bits))


def longest_contiguous(a: BitString, b: BitString) -> int:
    """Length of the longest run of consecutive agreeing positions."""
    _require_same_length(a, b)
    agree = np.concatenate(([0], (a.bits == b.bits).astype(np.int8), [0]))
    edges = np.diff(agree)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    if starts.size == 0:
        return 0
    return int(np.max(ends - starts))


@jit(nopython=True, parallel=True)  # type: ignore[misc]
def _longest_run_kernel(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """JIT-compiled longest agreeing run for every (left, right) row pair."""
    rows, length = left.shape
    cols = right.shape[0]
    result = np.zeros((rows, cols), dtype=np.int64)

    for i in prange(rows):
        for j in range(cols):
            best = 0
            run = 0
            for k in range(length):
                if left[i, k] == right[j, k]:
                    run += 1
                    if run > best:
                        best = run
                else:
                    run = 0
            result[i, j] = best

    return result


def longest_run_matrix(left: BitMatrix, right: BitMatrix) -> RunLengthMatrix:
    """Longest agreeing run between every row of `left` and every row of `right`.

    Args:
        left: Bit strings, one per row
        right: Bit strings of the same length, one per row

    Returns:
        Integer matrix of shape (len(left), len(right))
    """
    left = np.ascontiguousarray(left, dtype=np.uint8)
    right = np.ascontiguousarray(right, dtype=np.uint8)
    if left.ndim != 2 or right.ndim != 2:
        raise PatternMismatchError("bit matrices must be two-dimensional")
    if left.shape[0] == 0 or right.shape[0] == 0:
        return np.zeros((left.shape[0], right.shape[0]), dtype=np.int64)
    if left.shape[1] != right.shape[1]:
        raise PatternMismatchError(
            f"length mismatch: {left.shape[1]} != {right.shape[1]}"
        )
    return cast(RunLengthMatrix, _longest_run_kernel(left, right))


def euclidean_distance(a: RealVector, b: RealVector) -> float:
    """Standard L2 distance between two real vectors."""
    _require_same_length(a, b)
    return float(distance.euclidean(a.values, b.values))


def _penalize(r: float, n_overlap: int, cfg: AffinityConfig) -> float:
    threshold = cfg.overlap_penalty_threshold
    if 0 < n_overlap < threshold:
        if cfg.penalty_mode == PenaltyMode.HARD_ZERO:
            return 0.0
        r *= n_overlap / threshold
    return float(min(max(r, -1.0), 1.0))


def pearson(
    u: UserProfile, v: UserProfile, cfg: AffinityConfig = DEFAULT_AFFINITY
) -> float:
    """Pearson correlation over co-rated items using full-profile means.

    Returns 0 when the profiles share no items or either side has no
    variance over the shared items. Small overlaps are penalized per
    `cfg`, and the result is clamped to [-1, 1].
    """
    pairs, n_overlap = encode_profile_pair(u, v)
    if n_overlap == 0:
        return 0.0

    scores = np.asarray(pairs, dtype=np.float64)
    du = scores[:, 0] - u.mean
    dv = scores[:, 1] - v.mean
    denominator = np.sqrt(np.sum(du * du) * np.sum(dv * dv))
    if denominator == 0 or not np.isfinite(denominator):
        return 0.0

    return _penalize(float(np.sum(du * dv) / denominator), n_overlap, cfg)


def _dense_votes(
    profiles: Sequence[UserProfile], item_index: dict[int, int]
) -> tuple[RealArray, RealArray]:
    """Mean-centred vote matrix (zeros where unvoted) and its vote mask."""
    centred = np.zeros((len(profiles), len(item_index)), dtype=np.float64)
    mask = np.zeros_like(centred)
    for row, profile in enumerate(profiles):
        if not profile.votes:
            continue
        columns = [item_index[item] for item in profile.votes]
        centred[row, columns] = np.fromiter(
            profile.votes.values(), dtype=np.float64, count=len(columns)
        )
        centred[row, columns] -= profile.mean
        mask[row, columns] = 1.0
    return centred, mask


def _pearson_cross(
    left: Sequence[UserProfile],
    right: Sequence[UserProfile],
    cfg: AffinityConfig,
) -> MatchingMatrix:
    items = sorted({item for p in (*left, *right) for item in p.votes})
    item_index = {item: column for column, item in enumerate(items)}
    c_left, m_left = _dense_votes(left, item_index)
    c_right, m_right = _dense_votes(right, item_index)

    numerator = c_left @ c_right.T
    spread_left = (c_left * c_left) @ m_right.T
    spread_right = m_left @ (c_right * c_right).T
    denominator = np.sqrt(spread_left * spread_right)
    overlap = np.rint(m_left @ m_right.T).astype(np.int64)

    r = np.divide(
        numerator,
        denominator,
        out=np.zeros_like(numerator),
        where=(denominator > 0) & (overlap > 0),
    )

    threshold = cfg.overlap_penalty_threshold
    small = (overlap > 0) & (overlap < threshold)
    if np.any(small):
        if cfg.penalty_mode == PenaltyMode.HARD_ZERO:
            r[small] = 0.0
        else:
            r[small] *= overlap[small] / threshold

    return cast(MatchingMatrix, np.clip(r, -1.0, 1.0))


def pearson_matrix(
    profiles: Sequence[UserProfile], cfg: AffinityConfig = DEFAULT_AFFINITY
) -> MatchingMatrix:
    """Pairwise Pearson scores for a list of profiles, computed in bulk.

    Agrees with `pearson` entry by entry up to floating-point rounding.
    """
    logger.debug("Computing Pearson matrix for %d profiles", len(profiles))
    if not profiles:
        return np.zeros((0, 0), dtype=np.float64)
    return _pearson_cross(profiles, profiles, cfg)


def pearson_against(
    target: UserProfile,
    profiles: Sequence[UserProfile],
    cfg: AffinityConfig = DEFAULT_AFFINITY,
) -> RealArray:
    """Pearson score of `target` against each profile in order."""
    if not profiles:
        return np.zeros(0, dtype=np.float64)
    return cast(RealArray, _pearson_cross([target], profiles, cfg)[0])


def records_overlap(a: ConnectionRecord, b: ConnectionRecord) -> bool:
    """True iff every field pair is equal or has a wildcard on either side."""
    return all(
        x is WILDCARD or y is WILDCARD or x == y for x, y in zip(a.fields, b.fields)
    )


def record_match(pattern: ConnectionRecord, observed: ConnectionRecord) -> bool:
    """True iff every pattern field equals the observed field or is the wildcard.

    Raises:
        PatternMismatchError: If the observed record contains a wildcard
    """
    if observed.has_wildcards:
        raise PatternMismatchError(f"observed record has wildcards: {observed}")
    return all(p is WILDCARD or p == o for p, o in zip(pattern.fields, observed.fields))


def record_affinity(a: ConnectionRecord, b: ConnectionRecord) -> float:
    """Fraction of fields that are compatible (equal or wildcarded)."""
    compatible = sum(
        x is WILDCARD or y is WILDCARD or x == y for x, y in zip(a.fields, b.fields)
    )
    return compatible / len(a)


def _vector_correlation(a: RealVector, b: RealVector) -> float:
    da = a.values - a.values.mean()
    db = b.values - b.values.mean()
    denominator = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denominator == 0:
        return 0.0
    return float(min(max(np.sum(da * db) / denominator, -1.0), 1.0))


def affinity(
    a: Pattern,
    b: Pattern,
    measure: Measure,
    cfg: AffinityConfig = DEFAULT_AFFINITY,
) -> float:
    """Generic affinity in [0, 1] between two patterns of the same variant.

    Args:
        a: First pattern
        b: Second pattern
        measure: Matching rule to apply
        cfg: Pearson settings, used by the Pearson measure only

    Returns:
        Normalized affinity, 1.0 for identical patterns

    Raises:
        PatternMismatchError: On variant or length mismatch, or a measure
            that does not apply to the variant
    """
    if type(a) is not type(b):
        raise PatternMismatchError(
            f"variant mismatch: {type(a).__name__} vs {type(b).__name__}"
        )

    match measure, a, b:
        case Measure.HAMMING, BitString(), BitString():
            return hamming_score(a, b) / len(a)
        case Measure.CONTIGUOUS, BitString(), BitString():
            return longest_contiguous(a, b) / len(a)
        case Measure.EUCLIDEAN, RealVector(), RealVector():
            return 1.0 / (1.0 + euclidean_distance(a, b))
        case Measure.PEARSON, UserProfile(), UserProfile():
            if a == b and len(a) > 0:
                return 1.0
            return (pearson(a, b, cfg) + 1.0) / 2.0
        case Measure.PEARSON, RealVector(), RealVector():
            _require_same_length(a, b)
            if a == b:
                return 1.0
            return (_vector_correlation(a, b) + 1.0) / 2.0
        case Measure.RECORD, ConnectionRecord(), ConnectionRecord():
            return record_affinity(a, b)
        case _:
            raise PatternMismatchError(
                f"measure {measure.value} does not apply to {type(a).__name__}"
            )
