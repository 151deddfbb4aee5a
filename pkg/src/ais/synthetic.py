"""Synthetic data generators for tests and experiments."""

from typing import Sequence

import numpy as np

from .encoding import DEFAULT_VOTE_RANGE, BitString, UserProfile, VoteRange
from .types import BitMatrix


def make_planted_dataset(
    n_users: int = 200,
    n_items: int = 100,
    n_prototypes: int = 4,
    votes_per_user: int = 40,
    seed: int = 0,
    vote_range: VoteRange = DEFAULT_VOTE_RANGE,
    noise_range: tuple[float, float] = (0.3, 1.5),
) -> list[UserProfile]:
    """Users drawn around a few planted taste prototypes.

    Each prototype assigns a uniform random score to every item. A user
    picks a prototype, a personal noise level from `noise_range` and a
    random subset of items, and votes the prototype's score plus Gaussian
    noise, rounded and clipped to the vote range. User and item ids start
    at 1.

    Args:
        n_users: Number of users
        n_items: Size of the item catalogue
        n_prototypes: Number of planted tastes
        votes_per_user: Votes per user, at most n_items
        seed: Seed for the generator
        vote_range: Score bounds
        noise_range: Bounds of the per-user noise standard deviation

    Returns:
        List of user profiles ordered by user id
    """
    if not 0 < votes_per_user <= n_items:
        raise ValueError("votes_per_user must be in [1, n_items]")
    if n_prototypes < 1 or n_users < 1:
        raise ValueError("n_users and n_prototypes must be positive")

    rng = np.random.default_rng(seed)
    low, high = vote_range.low, vote_range.high
    prototypes = rng.integers(low, high + 1, size=(n_prototypes, n_items))

    profiles = []
    for user in range(n_users):
        taste = prototypes[rng.integers(n_prototypes)]
        sigma = rng.uniform(*noise_range)
        items = np.sort(rng.choice(n_items, size=votes_per_user, replace=False))
        noisy = taste[items] + rng.normal(0.0, sigma, size=votes_per_user)
        scores = np.clip(np.rint(noisy), low, high).astype(np.int64)
        profiles.append(
            UserProfile(
                user_id=user + 1,
                votes={int(i) + 1: int(s) for i, s in zip(items, scores)},
            )
        )
    return profiles


def bit_universe(length: int) -> BitMatrix:
    """All 2**length bit strings as rows, in counting order (MSB first)."""
    if not 1 <= length <= 16:
        raise ValueError("length must be in [1, 16]")
    values = np.arange(2**length, dtype=np.uint32)
    shifts = np.arange(length - 1, -1, -1, dtype=np.uint32)
    return ((values[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def to_bitstrings(matrix: BitMatrix) -> list[BitString]:
    return [BitString(row) for row in matrix]


def random_self_set(
    length: int, size: int, rng: np.random.Generator
) -> list[BitString]:
    """`size` distinct random bit strings of the given length."""
    if size > 2**length:
        raise ValueError(f"cannot draw {size} distinct strings of length {length}")
    picks = rng.choice(2**length, size=size, replace=False)
    shifts = np.arange(length - 1, -1, -1)
    return [
        BitString(((int(value) >> shifts) & 1).astype(np.uint8)) for value in picks
    ]


def as_matrix(patterns: Sequence[BitString]) -> BitMatrix:
    """Stack bit strings into one matrix, one per row."""
    if not patterns:
        return np.zeros((0, 0), dtype=np.uint8)
    return np.vstack([p.bits for p in patterns])
