"""Tests for matching measures between patterns and profiles."""

import numpy as np
import pytest

from ais.affinity import (
    AffinityConfig,
    Measure,
    PatternMismatchError,
    PenaltyMode,
    affinity,
    euclidean_distance,
    hamming_score,
    longest_contiguous,
    longest_run_matrix,
    pearson,
    pearson_against,
    pearson_matrix,
    record_affinity,
    record_match,
    records_overlap,
)
from ais.encoding import BitString, RealVector, UserProfile, encode_profile_pair
from ais.synthetic import as_matrix, bit_universe, make_planted_dataset
from tests.conftest import WORKED_EXAMPLES, bits, record

BIT_CASES = WORKED_EXAMPLES["bit_matching"]


def random_profile(
    user_id: int, rng: np.random.Generator, n_items: int = 30
) -> UserProfile:
    size = int(rng.integers(0, n_items + 1))
    items = rng.choice(n_items, size=size, replace=False)
    return UserProfile(
        user_id=user_id, votes={int(i): int(rng.integers(0, 6)) for i in items}
    )


def naive_scores(a: list[int], b: list[int]) -> tuple[int, int]:
    """Agreeing positions and longest agreeing run, one position at a time."""
    agree = best = run = 0
    for x, y in zip(a, b):
        if x == y:
            agree += 1
            run += 1
            best = max(best, run)
        else:
            run = 0
    return agree, best


class TestBitMatching:
    """Tests for Hamming and r-contiguous scores."""

    @pytest.mark.parametrize("case", BIT_CASES)
    def test_worked_examples(self, case: dict) -> None:
        """Test matching scores against hand-worked examples.

        Given: Two bit strings of equal length
        When: Scoring agreeing positions and the longest agreeing run
        Then: Should reproduce the worked values exactly
        """
        a, b = bits(case["a"]), bits(case["b"])

        assert hamming_score(a, b) == case["hamming"]
        assert longest_contiguous(a, b) == case["contiguous"]

    def test_length_mismatch(self) -> None:
        with pytest.raises(PatternMismatchError, match="length"):
            hamming_score(bits("01"), bits("011"))
        with pytest.raises(PatternMismatchError):
            longest_contiguous(bits("01"), bits("011"))

    @pytest.mark.oracle
    def test_all_8bit_pairs_against_naive(self) -> None:
        """Test both scores on every pair of 8-bit strings.

        Given: All 2^8 x 2^8 pairs of 8-bit strings
        When: Scoring each pair both ways and through the bulk kernel
        Then: Should equal the per-position reference, be symmetric, and
            never give a run longer than the agreement count
        """
        universe = bit_universe(8)
        rows = [[int(bit) for bit in row] for row in universe]
        patterns = [BitString(row) for row in universe]
        runs = longest_run_matrix(universe, universe)

        for i, (a, row_a) in enumerate(zip(patterns, rows)):
            for j, (b, row_b) in enumerate(zip(patterns, rows)):
                agree, best = naive_scores(row_a, row_b)
                hamming = hamming_score(a, b)
                contiguous = longest_contiguous(a, b)

                assert (hamming, contiguous) == (agree, best)
                assert runs[i, j] == best
                assert hamming == hamming_score(b, a)
                assert contiguous == longest_contiguous(b, a)
                assert contiguous <= hamming

    def test_run_matrix_empty_side(self) -> None:
        empty = as_matrix([])
        assert longest_run_matrix(empty, bit_universe(3)).shape == (0, 8)

    def test_run_matrix_length_mismatch(self) -> None:
        with pytest.raises(PatternMismatchError):
            longest_run_matrix(bit_universe(3), bit_universe(4))


class TestPearson:
    """Tests for Pearson correlation over co-rated items."""

    def test_full_profile_means(self) -> None:
        """Test means come from each user's full profile, not the overlap.

        Given: Users whose overlap means differ from their full means
        When: Correlating them
        Then: Should centre on the full-profile means
        """
        u = UserProfile(user_id=1, votes={1: 5, 2: 1, 3: 3})  # mean 3
        v = UserProfile(user_id=2, votes={1: 4, 2: 2, 4: 0})  # mean 2
        # Shared items 1, 2: du = (2, -2), dv = (2, 0)
        expected = (2 * 2 + -2 * 0) / np.sqrt((4 + 4) * (4 + 0))

        assert pearson(u, v) == pytest.approx(expected, abs=1e-12)

    def test_zero_overlap_is_zero(self) -> None:
        u = UserProfile(user_id=1, votes={1: 5, 2: 1})
        v = UserProfile(user_id=2, votes={3: 4, 4: 2})
        assert pearson(u, v) == 0.0

    def test_zero_variance_is_zero(self) -> None:
        u = UserProfile(user_id=1, votes={1: 3, 2: 3})
        v = UserProfile(user_id=2, votes={1: 5, 2: 1})
        assert pearson(u, v) == 0.0

    def test_self_correlation(self) -> None:
        u = UserProfile(user_id=1, votes={1: 5, 2: 1, 3: 2})
        assert pearson(u, u) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize(
        "mode,expected_scale",
        [(PenaltyMode.LINEAR_SCALE, 2 / 4), (PenaltyMode.HARD_ZERO, 0.0)],
    )
    def test_small_overlap_penalty(
        self, mode: PenaltyMode, expected_scale: float
    ) -> None:
        """Test overlaps below the threshold are scaled down or zeroed."""
        u = UserProfile(user_id=1, votes={1: 5, 2: 1, 3: 3})
        v = UserProfile(user_id=2, votes={1: 5, 2: 1, 4: 3})
        raw = pearson(u, v)
        cfg = AffinityConfig().with_penalty(4, mode)

        assert pearson(u, v, cfg) == pytest.approx(raw * expected_scale, abs=1e-12)

    @pytest.mark.oracle
    def test_contract_on_random_pairs(self) -> None:
        """Test range, zero-overlap and self-correlation on random profiles.

        Given: 10,000 random profile pairs
        When: Correlating each pair and each profile with itself
        Then: Should stay in [-1, 1], give exactly 0 without overlap and
            1 for self-correlation when votes vary
        """
        rng = np.random.default_rng(2024)
        for _ in range(10_000):
            u = random_profile(1, rng)
            v = random_profile(2, rng)
            r = pearson(u, v)

            assert -1.0 <= r <= 1.0
            if not (u.items & v.items):
                assert r == 0.0
        for index in range(200):
            u = random_profile(index, rng)
            if len(set(u.votes.values())) > 1:
                assert pearson(u, u) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric(self) -> None:
        """Test correlation and co-rated pairing do not depend on order."""
        rng = np.random.default_rng(11)
        for _ in range(500):
            u = random_profile(1, rng)
            v = random_profile(2, rng)
            pairs, overlap = encode_profile_pair(u, v)
            swapped, swapped_overlap = encode_profile_pair(v, u)

            assert pearson(u, v) == pytest.approx(pearson(v, u), abs=1e-12)
            assert overlap == swapped_overlap == len(u.items & v.items)
            assert pairs == [(b, a) for a, b in swapped]

    def test_matrix_agrees_with_scalar(self) -> None:
        """Test the bulk matrix matches scalar Pearson entry by entry."""
        profiles = make_planted_dataset(n_users=25, n_items=30, votes_per_user=8)
        cfg = AffinityConfig().with_penalty(5, PenaltyMode.LINEAR_SCALE)

        matrix = pearson_matrix(profiles, cfg)
        against = pearson_against(profiles[0], profiles, cfg)

        for i, u in enumerate(profiles):
            assert against[i] == pytest.approx(pearson(profiles[0], u, cfg), abs=1e-12)
            for j, v in enumerate(profiles):
                assert matrix[i, j] == pytest.approx(pearson(u, v, cfg), abs=1e-12)

    def test_matrix_of_nothing(self) -> None:
        assert pearson_matrix([]).shape == (0, 0)


class TestRecords:
    """Tests for wildcard-aware record matching."""

    def test_record_match_with_wildcards(self) -> None:
        pattern = record("tcp * * 10.0.0.2 80")

        assert record_match(pattern, record("tcp 1.1.1.1 999 10.0.0.2 80"))
        assert not record_match(pattern, record("udp 1.1.1.1 999 10.0.0.2 80"))

    def test_observed_wildcard_rejected(self) -> None:
        with pytest.raises(PatternMismatchError):
            record_match(record("tcp * * * *"), record("tcp * 1 1.1.1.1 1"))

    def test_overlap_is_symmetric(self) -> None:
        a = record("tcp * 80 1.1.1.1 *")
        b = record("* 2.2.2.2 80 1.1.1.1 22")

        assert records_overlap(a, b) and records_overlap(b, a)
        assert not records_overlap(a, record("udp 2.2.2.2 80 1.1.1.1 22"))

    def test_record_affinity_fraction(self) -> None:
        a = record("tcp 1.1.1.1 80 2.2.2.2 22")
        b = record("tcp 1.1.1.1 81 * 23")
        assert record_affinity(a, b) == pytest.approx(3 / 5)


class TestGenericAffinity:
    """Tests for the normalized affinity dispatcher."""

    def test_normalized_bit_measures(self) -> None:
        a, b = bits("00000"), bits("00011")

        assert affinity(a, b, Measure.HAMMING) == pytest.approx(3 / 5)
        assert affinity(a, b, Measure.CONTIGUOUS) == pytest.approx(3 / 5)

    def test_euclidean(self) -> None:
        a = RealVector(np.array([0.0, 0.0]))
        b = RealVector(np.array([3.0, 4.0]))

        assert euclidean_distance(a, b) == pytest.approx(5.0)
        assert affinity(a, b, Measure.EUCLIDEAN) == pytest.approx(1 / 6)

    @pytest.mark.parametrize(
        "pattern,measure",
        [
            (bits("0101"), Measure.HAMMING),
            (RealVector(np.array([1.0, -2.0])), Measure.EUCLIDEAN),
            (RealVector(np.array([1.0, -2.0])), Measure.PEARSON),
            (UserProfile(user_id=1, votes={1: 3, 2: 3}), Measure.PEARSON),
            (record("tcp * 1 1.1.1.1 2"), Measure.RECORD),
        ],
    )
    def test_identical_patterns_score_one(
        self, pattern: object, measure: Measure
    ) -> None:
        assert affinity(pattern, pattern, measure) == 1.0  # type: ignore[arg-type]

    @pytest.mark.parametrize(
        "a,b,measure",
        [
            (bits("0110"), bits("1100"), Measure.HAMMING),
            (bits("0110"), bits("1100"), Measure.CONTIGUOUS),
            (
                RealVector(np.array([1.0, 2.0])),
                RealVector(np.array([-1.0, 0.5])),
                Measure.EUCLIDEAN,
            ),
            (
                UserProfile(user_id=1, votes={1: 5, 2: 1, 3: 4}),
                UserProfile(user_id=2, votes={1: 4, 2: 2, 3: 1, 4: 0}),
                Measure.PEARSON,
            ),
            (
                record("tcp 1.1.1.1 80 2.2.2.2 22"),
                record("tcp * 81 2.2.2.2 22"),
                Measure.RECORD,
            ),
        ],
    )
    def test_symmetric(self, a: object, b: object, measure: Measure) -> None:
        forward = affinity(a, b, measure)  # type: ignore[arg-type]
        backward = affinity(b, a, measure)  # type: ignore[arg-type]
        assert forward == pytest.approx(backward)

    def test_variant_mismatch(self) -> None:
        with pytest.raises(PatternMismatchError, match="variant"):
            affinity(bits("01"), RealVector(np.array([0.0, 1.0])), Measure.HAMMING)

    def test_measure_not_applicable(self) -> None:
        with pytest.raises(PatternMismatchError, match="does not apply"):
            affinity(bits("01"), bits("10"), Measure.EUCLIDEAN)
