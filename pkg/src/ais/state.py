"""Immutable state for the immune-network engine.

The antibody pool is held column-wise: patterns, source ids and
concentrations side by side, plus the cached matching values between
antibodies and against every antigen. All updates return new instances.
"""

import dataclasses
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .encoding import Pattern
from .types import AntigenMatching, Concentrations, Matcher, MatchingMatrix


class PoolFullError(Exception):
    """Raised when adding an antibody to a pool at capacity."""


class DynamicsMode(Enum):
    """Concentration update rule."""

    PLAIN = "plain"  # Stimulation and death only
    IDIOTYPIC = "idiotypic"  # Adds antibody-antibody suppression


class ExitCondition(Enum):
    """Why a stabilization run stopped."""

    STABLE = "stable"
    ITERATION_LIMIT = "iteration-limit"


@dataclasses.dataclass(frozen=True)
class Antibody:
    """A pattern with a concentration and the id of whatever it came from."""

    pattern: Optional[Pattern]
    concentration: float = 1.0
    source_id: int = 0

    def __post_init__(self) -> None:
        if self.concentration < 0:
            raise ValueError("concentration must be non-negative")


@dataclasses.dataclass(frozen=True)
class Antigen:
    """The target pattern antibodies are stimulated by."""

    pattern: Optional[Pattern]
    concentration: float = 1.0

    def __post_init__(self) -> None:
        if self.concentration <= 0:
            raise ValueError("concentration must be positive")


@dataclasses.dataclass(frozen=True)
class NetworkConfig:
    """Rate constants, pool bounds and stabilization settings.

    Rates follow the single-antigen idiotypic equation: stimulation (k1),
    suppression (k2) and death (k3). The plain stepper reads only
    stimulation and death.

    This class is immutable. All modifications return new instances.
    """

    stimulation_rate: float = 0.5
    suppression_rate: float = 0.5
    death_rate: float = 0.1
    dt: float = 1.0
    pool_capacity: int = 20
    initial_concentration: float = 1.0
    drop_threshold: float = 0.5
    saturation_cap: Optional[float] = None  # Defaults to 100x initial
    stabilization_window: int = 10
    max_iterations: int = 10_000

    def __post_init__(self) -> None:
        """Validate rates and the threshold ordering."""
        if self.stimulation_rate <= 0:
            raise ValueError("stimulation_rate must be positive")
        if self.suppression_rate < 0:
            raise ValueError("suppression_rate must be non-negative")
        if not 0 < self.death_rate < 1:
            raise ValueError("death_rate must be in (0, 1)")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.death_rate * self.dt >= 1:
            raise ValueError("death_rate * dt must be below 1")
        if self.pool_capacity < 2:
            raise ValueError("pool_capacity must be at least 2")
        if self.initial_concentration <= 0:
            raise ValueError("initial_concentration must be positive")
        if not 0 <= self.drop_threshold < self.initial_concentration:
            raise ValueError(
                "drop_threshold must be in [0, initial_concentration), "
                f"got {self.drop_threshold}"
            )
        if self.cap < self.initial_concentration:
            raise ValueError("saturation_cap must be at least initial_concentration")
        if self.stabilization_window < 1:
            raise ValueError("stabilization_window must be at least 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    @property
    def cap(self) -> float:
        """Effective saturation cap."""
        if self.saturation_cap is None:
            return 100.0 * self.initial_concentration
        return self.saturation_cap

    def with_suppression(self, suppression_rate: float) -> "NetworkConfig":
        """Return new config with a different suppression rate."""
        return dataclasses.replace(self, suppression_rate=suppression_rate)

    def with_capacity(self, pool_capacity: int) -> "NetworkConfig":
        """Return new config with a different pool capacity."""
        return dataclasses.replace(self, pool_capacity=pool_capacity)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclasses.dataclass(frozen=True, eq=False)
class ImmuneNetwork:
    """Bounded antibody pool with cached matchings and stabilization counters.

    `matching[i, j]` is the matching between antibodies i and j, with a zero
    diagonal; `antigen_matching[i, j]` is the matching between antibody i
    and antigen j.
    """

    config: NetworkConfig
    antigens: tuple[Antigen, ...] = ()
    patterns: tuple[Optional[Pattern], ...] = ()
    source_ids: tuple[int, ...] = ()
    concentrations: Concentrations = dataclasses.field(
        default_factory=lambda: _frozen(np.zeros(0))
    )
    matching: MatchingMatrix = dataclasses.field(
        default_factory=lambda: _frozen(np.zeros((0, 0)))
    )
    antigen_matching: AntigenMatching = dataclasses.field(
        default_factory=lambda: _frozen(np.zeros((0, 0)))
    )
    matcher: Optional[Matcher] = None
    iteration_count: int = 0
    iterations_since_size_change: int = 0
    exit_condition: Optional[ExitCondition] = None

    @classmethod
    def create(
        cls,
        config: NetworkConfig,
        antigens: Sequence[Antigen],
        matcher: Matcher,
    ) -> "ImmuneNetwork":
        """Create an empty pool facing the given antigens."""
        return cls(
            config=config,
            antigens=tuple(antigens),
            antigen_matching=_frozen(np.zeros((0, len(antigens)))),
            matcher=matcher,
        )

    @classmethod
    def from_matrices(
        cls,
        config: NetworkConfig,
        concentrations: Sequence[float],
        matching: np.ndarray,
        antigen_matching: np.ndarray,
        antigen_concentrations: Sequence[float] = (1.0,),
        source_ids: Optional[Sequence[int]] = None,
    ) -> "ImmuneNetwork":
        """Create a pool from explicit matchings instead of patterns.

        Patterns are left as `None` and no matcher is attached, so the pool
        cannot grow. The diagonal of `matching` is ignored.

        Raises:
            ValueError: If any dimension disagrees with the pool size
        """
        x = np.array(concentrations, dtype=np.float64)
        n, n_antigens = len(x), len(antigen_concentrations)
        if n == 0:
            raise ValueError("at least one antibody is required")
        m = np.array(matching, dtype=np.float64)
        if m.shape != (n, n):
            raise ValueError(f"matching must be {n}x{n}, got shape {m.shape}")
        m_antigen = np.array(antigen_matching, dtype=np.float64)
        if m_antigen.ndim == 1:
            m_antigen = m_antigen.reshape(-1, 1)
        if m_antigen.shape != (n, n_antigens):
            raise ValueError(
                f"antigen_matching must be {n}x{n_antigens}, "
                f"got shape {m_antigen.shape}"
            )
        if n > config.pool_capacity:
            raise ValueError(
                f"{n} antibodies exceed pool_capacity {config.pool_capacity}"
            )
        if np.any(x < 0):
            raise ValueError("concentrations must be non-negative")
        ids = tuple(source_ids) if source_ids is not None else tuple(range(n))
        if len(ids) != n:
            raise ValueError("source_ids must match the number of antibodies")
        np.fill_diagonal(m, 0.0)

        return cls(
            config=config,
            antigens=tuple(
                Antigen(pattern=None, concentration=y)
                for y in antigen_concentrations
            ),
            patterns=(None,) * n,
            source_ids=ids,
            concentrations=_frozen(np.minimum(x, config.cap)),
            matching=_frozen(m),
            antigen_matching=_frozen(m_antigen),
        )

    @property
    def size(self) -> int:
        return len(self.source_ids)

    @property
    def is_full(self) -> bool:
        return self.size >= self.config.pool_capacity

    @property
    def is_empty(self) -> bool:
        return self.size == 0

    @property
    def is_settled(self) -> bool:
        """True once the pool is stable or the iteration bound is hit."""
        return (
            self.iterations_since_size_change >= self.config.stabilization_window
            or self.iteration_count >= self.config.max_iterations
        )

    @property
    def antigen_concentrations(self) -> Concentrations:
        return np.array([a.concentration for a in self.antigens], dtype=np.float64)

    @property
    def antibodies(self) -> tuple[Antibody, ...]:
        """Antibody view of the pool, in pool order."""
        return tuple(
            Antibody(pattern=p, concentration=float(x), source_id=s)
            for p, x, s in zip(self.patterns, self.concentrations, self.source_ids)
        )

    def with_concentrations(self, concentrations: Concentrations) -> "ImmuneNetwork":
        """Create new state with updated concentrations."""
        return dataclasses.replace(self, concentrations=_frozen(concentrations))

    def with_iteration(self) -> "ImmuneNetwork":
        """Create new state with the iteration counter advanced."""
        return dataclasses.replace(self, iteration_count=self.iteration_count + 1)

    def with_exit_condition(self, condition: ExitCondition) -> "ImmuneNetwork":
        """Create new state with the stabilization outcome recorded."""
        return dataclasses.replace(self, exit_condition=condition)

    def keep(self, mask: np.ndarray) -> "ImmuneNetwork":
        """Create new state holding only the antibodies selected by `mask`."""
        index = np.flatnonzero(mask)
        return dataclasses.replace(
            self,
            patterns=tuple(self.patterns[i] for i in index),
            source_ids=tuple(self.source_ids[i] for i in index),
            concentrations=_frozen(self.concentrations[index]),
            matching=_frozen(self.matching[np.ix_(index, index)]),
            antigen_matching=_frozen(self.antigen_matching[index]),
        )
