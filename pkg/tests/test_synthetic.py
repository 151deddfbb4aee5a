"""Tests for synthetic dataset and bit-string generators."""

import numpy as np
import pytest

from ais.synthetic import (
    as_matrix,
    bit_universe,
    make_planted_dataset,
    random_self_set,
    to_bitstrings,
)


class TestPlantedDataset:
    """Tests for the planted-prototype ratings generator."""

    def test_shape_and_ranges(self) -> None:
        profiles = make_planted_dataset(n_users=30, n_items=20, votes_per_user=10)

        assert [p.user_id for p in profiles] == list(range(1, 31))
        for profile in profiles:
            assert len(profile) == 10
            assert all(1 <= item <= 20 for item in profile.votes)
            assert all(0 <= score <= 5 for score in profile.votes.values())

    def test_seeded(self) -> None:
        """Test the same seed reproduces the dataset and another seed does not."""
        first = make_planted_dataset(n_users=10, seed=4)

        assert make_planted_dataset(n_users=10, seed=4) == first
        assert make_planted_dataset(n_users=10, seed=5) != first

    def test_too_many_votes(self) -> None:
        with pytest.raises(ValueError, match="votes_per_user"):
            make_planted_dataset(n_items=5, votes_per_user=6)


class TestBitGenerators:
    """Tests for bit-string universes and self sets."""

    def test_universe_counting_order(self) -> None:
        universe = bit_universe(3)

        assert universe.shape == (8, 3)
        assert [str(p) for p in to_bitstrings(universe)][:3] == ["000", "001", "010"]
        assert str(to_bitstrings(universe)[-1]) == "111"

    @pytest.mark.parametrize("length", [0, 17])
    def test_universe_bounds(self, length: int) -> None:
        with pytest.raises(ValueError):
            bit_universe(length)

    def test_random_self_set_distinct(self, rng: np.random.Generator) -> None:
        self_set = random_self_set(8, 64, rng)

        assert len(self_set) == 64
        assert len(set(self_set)) == 64
        assert all(len(p) == 8 for p in self_set)

    def test_random_self_set_too_large(self, rng: np.random.Generator) -> None:
        with pytest.raises(ValueError):
            random_self_set(2, 5, rng)

    def test_as_matrix(self) -> None:
        strings = to_bitstrings(bit_universe(2))

        np.testing.assert_array_equal(as_matrix(strings), bit_universe(2))
        assert as_matrix([]).shape == (0, 0)
