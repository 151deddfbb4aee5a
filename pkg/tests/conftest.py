"""Shared test fixtures and utilities."""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from ais.encoding import BitString, ConnectionRecord, UserProfile
from ais.parsers import format_ratings, parse_record_line
from ais.state import NetworkConfig

TEST_DATA = Path(__file__).parent / "test_data"

with open(TEST_DATA / "worked_examples.json") as f:
    WORKED_EXAMPLES: dict[str, Any] = json.load(f)


def bits(text: str) -> BitString:
    """Creates a bit string from '0'/'1' text."""
    return BitString.from_text(text)


def record(line: str) -> ConnectionRecord:
    """Creates a connection record from a log line."""
    return parse_record_line(line)


def profile(user_id: int, votes: dict[int, int]) -> UserProfile:
    return UserProfile(user_id=user_id, votes=votes)


def load_profiles() -> list[UserProfile]:
    """Profiles from the worked-example ratings table, ordered by user id.

    Returns:
        List of user profiles
    """
    users = WORKED_EXAMPLES["ratings"]["users"]
    return [
        UserProfile(
            user_id=int(user_id),
            votes={int(item): score for item, score in votes.items()},
        )
        for user_id, votes in sorted(users.items(), key=lambda kv: int(kv[0]))
    ]


@pytest.fixture
def profiles() -> list[UserProfile]:
    """Provides the small worked-example ratings table."""
    return load_profiles()


@pytest.fixture
def ratings_file(tmp_path: Path) -> Path:
    """Writes the worked-example ratings table to a temporary file.

    Returns:
        Path to the tab-separated ratings file
    """
    path = tmp_path / "ratings.tsv"
    path.write_text(format_ratings(load_profiles()))
    return path


@pytest.fixture
def network_config() -> NetworkConfig:
    """Provides the default network configuration."""
    return NetworkConfig()


@pytest.fixture
def rng() -> np.random.Generator:
    """Provides a generator pinned to seed 0."""
    return np.random.default_rng(0)
