"""Pattern representations shared by the matching, network and detector modules.

Antigens and antibodies are encoded the same way: a bit string, a real
vector, or a categorical connection record whose fields may be wildcards.
Rating profiles are encoded separately as sparse vote sets.
"""

import ipaddress
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Optional, TypeAlias, Union

import numpy as np

from .types import BitArray, ItemId, RealArray, Score, ScorePair, UserId


class Wildcard(Enum):
    """Distinguished 'any value' token for record fields."""

    ANY = "*"

    def __str__(self) -> str:
        return self.value


WILDCARD = Wildcard.ANY

PORT_RANGE = (0, 65535)


@dataclass(frozen=True, eq=False)
class BitString:
    """Immutable bit string backed by a read-only uint8 array."""

    bits: BitArray

    def __post_init__(self) -> None:
        """Ensures a non-empty, read-only {0,1} uint8 array."""
        array = np.array(self.bits, dtype=np.uint8)
        if array.ndim != 1 or array.size == 0:
            raise ValueError("bits must be a non-empty one-dimensional sequence")
        if np.any(array > 1):
            raise ValueError("bits must contain only 0 and 1")
        array.setflags(write=False)
        object.__setattr__(self, "bits", array)

    @classmethod
    def from_text(cls, text: str) -> "BitString":
        """Builds a bit string from a '0'/'1' character string."""
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    def __str__(self) -> str:
        return "".join("1" if bit else "0" for bit in self.bits)


@dataclass(frozen=True, eq=False)
class RealVector:
    """Immutable vector of finite reals."""

    values: RealArray

    def __post_init__(self) -> None:
        """Ensures a non-empty, finite, read-only float64 array."""
        array = np.array(self.values, dtype=np.float64)
        if array.ndim != 1 or array.size == 0:
            raise ValueError("values must be a non-empty one-dimensional sequence")
        if not np.all(np.isfinite(array)):
            raise ValueError("values must be finite")
        array.setflags(write=False)
        object.__setattr__(self, "values", array)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RealVector):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


Field: TypeAlias = Union[str, int, Wildcard]


@dataclass(frozen=True)
class ConnectionRecord:
    """Connection 5-tuple; any field may be the wildcard."""

    protocol: Union[str, Wildcard]
    source_ip: Union[str, Wildcard]
    source_port: Union[int, Wildcard]
    dest_ip: Union[str, Wildcard]
    dest_port: Union[int, Wildcard]

    FIELD_NAMES = ("protocol", "source_ip", "source_port", "dest_ip", "dest_port")

    def __post_init__(self) -> None:
        """Validates ports and dotted-quad addresses when concrete."""
        if self.protocol is not WILDCARD and not self.protocol:
            raise ValueError("protocol must be a non-empty token")
        for name in ("source_ip", "dest_ip"):
            value = getattr(self, name)
            if value is not WILDCARD and not is_dotted_quad(value):
                raise ValueError(f"{name} is not a dotted-quad address: {value!r}")
        for name in ("source_port", "dest_port"):
            value = getattr(self, name)
            if value is WILDCARD:
                continue
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            if not PORT_RANGE[0] <= value <= PORT_RANGE[1]:
                raise ValueError(f"{name} out of range: {value}")

    @property
    def fields(self) -> tuple[Field, ...]:
        return (
            self.protocol,
            self.source_ip,
            self.source_port,
            self.dest_ip,
            self.dest_port,
        )

    @property
    def has_wildcards(self) -> bool:
        return any(value is WILDCARD for value in self.fields)

    def __len__(self) -> int:
        return len(self.FIELD_NAMES)

    def __str__(self) -> str:
        return " ".join(str(value) for value in self.fields)


# The three pattern variants that can be compared by the generic affinity
AttributeString: TypeAlias = Union[BitString, RealVector, ConnectionRecord]


def is_dotted_quad(token: str) -> bool:
    """True for a syntactically valid IPv4 dotted-quad string."""
    if not isinstance(token, str):
        return False
    try:
        ipaddress.IPv4Address(token)
    except ValueError:
        return False
    return token.count(".") == 3


@dataclass(frozen=True)
class VoteRange:
    """Inclusive score bounds for rating files."""

    low: int = 0
    high: int = 5

    def __post_init__(self) -> None:
        if self.low >= self.high:
            raise ValueError(f"low must be below high, got [{self.low}, {self.high}]")

    def contains(self, score: float) -> bool:
        return self.low <= score <= self.high

    def clamp(self, score: float) -> float:
        return float(min(max(score, self.low), self.high))


DEFAULT_VOTE_RANGE = VoteRange()


@dataclass(frozen=True)
class UserProfile:
    """A user's votes keyed by item id.

    The vote mapping is treated as immutable once constructed.
    """

    user_id: UserId
    votes: Mapping[ItemId, Score] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "votes", dict(self.votes))

    @classmethod
    def from_pairs(
        cls, user_id: UserId, pairs: Iterable[tuple[ItemId, Score]]
    ) -> "UserProfile":
        """Builds a profile; later duplicates of an item win."""
        return cls(user_id=user_id, votes=dict(pairs))

    @cached_property
    def mean(self) -> float:
        """Average vote over all of the user's items."""
        if not self.votes:
            raise ValueError(f"user {self.user_id} has no votes")
        return float(np.mean(list(self.votes.values())))

    @property
    def items(self) -> frozenset[ItemId]:
        return frozenset(self.votes)

    def without(self, item_ids: Iterable[ItemId]) -> "UserProfile":
        """Copy with the given items removed."""
        hidden = set(item_ids)
        return UserProfile(
            user_id=self.user_id,
            votes={i: s for i, s in self.votes.items() if i not in hidden},
        )

    def __len__(self) -> int:
        return len(self.votes)


def encode_profile_pair(
    u: UserProfile, v: UserProfile
) -> tuple[list[ScorePair], int]:
    """Pairs the votes of items both users rated, ordered by item id.

    Returns:
        Tuple of (list of (u_score, v_score), number of overlapping items)
    """
    shared = sorted(u.votes.keys() & v.votes.keys())
    return [(u.votes[i], v.votes[i]) for i in shared], len(shared)


def find_profile(
    profiles: Iterable[UserProfile], user_id: UserId
) -> Optional[UserProfile]:
    for profile in profiles:
        if profile.user_id == user_id:
            return profile
    return None


# Anything an antibody or antigen can carry; profiles act as patterns in
# the recommender network
Pattern: TypeAlias = Union[AttributeString, UserProfile]


@dataclass(frozen=True)
class RecordDomain:
    """Value domains used when drawing or re-drawing record fields.

    Empty domains fall back to uniformly random addresses and ports.
    """

    protocols: tuple[str, ...] = ("tcp", "udp", "icmp")
    ips: tuple[str, ...] = ()
    ports: tuple[int, ...] = ()
    wildcard_probability: float = 0.2

    def __post_init__(self) -> None:
        if not 0 <= self.wildcard_probability <= 1:
            raise ValueError("wildcard_probability must be in [0, 1]")
        if not self.protocols:
            raise ValueError("protocols must not be empty")

    @classmethod
    def from_records(
        cls, records: Iterable[ConnectionRecord], wildcard_probability: float = 0.2
    ) -> "RecordDomain":
        """Domain spanning the concrete values seen in `records`."""
        records = list(records)

        def concrete(*names: str) -> list[Field]:
            return [
                getattr(r, name)
                for r in records
                for name in names
                if getattr(r, name) is not WILDCARD
            ]

        protocols = tuple(sorted(set(map(str, concrete("protocol")))))
        return cls(
            protocols=protocols or cls.protocols,
            ips=tuple(sorted(set(map(str, concrete("source_ip", "dest_ip"))))),
            ports=tuple(sorted({int(p) for p in concrete("source_port", "dest_port")})),
            wildcard_probability=wildcard_probability,
        )

    def draw_field(self, index: int, rng: np.random.Generator) -> Field:
        """Random value for field `index` of a record, possibly the wildcard."""
        if rng.random() < self.wildcard_probability:
            return WILDCARD
        match ConnectionRecord.FIELD_NAMES[index]:
            case "protocol":
                return self.protocols[int(rng.integers(len(self.protocols)))]
            case "source_ip" | "dest_ip":
                if self.ips:
                    return self.ips[int(rng.integers(len(self.ips)))]
                return ".".join(str(int(o)) for o in rng.integers(0, 256, size=4))
            case _:
                if self.ports:
                    return self.ports[int(rng.integers(len(self.ports)))]
                return int(rng.integers(PORT_RANGE[0], PORT_RANGE[1] + 1))

    def draw_record(self, rng: np.random.Generator) -> ConnectionRecord:
        count = len(ConnectionRecord.FIELD_NAMES)
        fields = [self.draw_field(i, rng) for i in range(count)]
        return ConnectionRecord(*fields)  # type: ignore[arg-type]
