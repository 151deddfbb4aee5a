"""Clonal expansion and affinity-scaled hypermutation."""

import logging
from dataclasses import dataclass, replace
from typing import Optional, TypeVar

import numpy as np

from .affinity import DEFAULT_AFFINITY, AffinityConfig, Measure, affinity
from .encoding import (
    BitString,
    ConnectionRecord,
    RealVector,
    RecordDomain,
)
from .state import Antibody, Antigen

logger = logging.getLogger(__name__)

CLONE_SCALE = 10  # Clones produced at affinity 1 with clone_factor 1

P = TypeVar("P", BitString, RealVector, ConnectionRecord)


@dataclass(frozen=True)
class CloneConfig:
    """Clone count and mutation settings.

    This class is immutable. All modifications return new instances.
    """

    clone_factor: float = 1.0
    base_mutation_rate: float = 0.1
    inverse_affinity_mutation: bool = True  # Closer matches mutate less
    real_noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate scaling factors and the mutation rate."""
        if self.clone_factor <= 0:
            raise ValueError("clone_factor must be positive")
        if not 0 < self.base_mutation_rate <= 1:
            raise ValueError("base_mutation_rate must be in (0, 1]")
        if self.real_noise_scale < 0:
            raise ValueError("real_noise_scale must be non-negative")

    def with_mutation(
        self, base_mutation_rate: float, inverse_affinity_mutation: bool
    ) -> "CloneConfig":
        """Return new config with different mutation settings."""
        return replace(
            self,
            base_mutation_rate=base_mutation_rate,
            inverse_affinity_mutation=inverse_affinity_mutation,
        )


DEFAULT_CLONE = CloneConfig()


def _check_affinity(value: float) -> None:
    if not 0 <= value <= 1:
        raise ValueError(f"affinity must be in [0, 1], got {value}")


def clone_count(affinity_value: float, cfg: CloneConfig = DEFAULT_CLONE) -> int:
    """Number of clones for a cell of the given affinity, at least one."""
    _check_affinity(affinity_value)
    return max(1, int(np.floor(cfg.clone_factor * affinity_value * CLONE_SCALE + 0.5)))


def mutation_probability(
    affinity_value: float, cfg: CloneConfig = DEFAULT_CLONE
) -> float:
    """Per-position mutation probability for the given affinity."""
    _check_affinity(affinity_value)
    if cfg.inverse_affinity_mutation:
        return cfg.base_mutation_rate * (1.0 - affinity_value)
    return cfg.base_mutation_rate * affinity_value


def hypermutate(
    pattern: P,
    affinity_value: float,
    cfg: CloneConfig = DEFAULT_CLONE,
    rng: Optional[np.random.Generator] = None,
    domain: Optional[RecordDomain] = None,
) -> P:
    """Mutate every position independently with an affinity-scaled probability.

    Bit strings flip bits, real vectors get zero-mean Gaussian noise with a
    standard deviation of probability times `real_noise_scale`, and records
    re-draw fields from `domain` (by default the record's own values plus
    the wildcard). A zero probability returns the input unchanged.

    Args:
        pattern: Pattern to mutate
        affinity_value: Affinity of the pattern in [0, 1]
        cfg: Mutation settings
        rng: Random stream; a fresh stream from `cfg.seed` if omitted
        domain: Field domains for records

    Returns:
        A pattern of the same variant and length
    """
    probability = mutation_probability(affinity_value, cfg)
    if probability == 0:
        return pattern
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)

    match pattern:
        case BitString():
            flips = rng.random(len(pattern)) < probability
            mutated = BitString(pattern.bits ^ flips.astype(np.uint8))
            return mutated  # type: ignore[return-value]
        case RealVector():
            noise = rng.normal(0.0, probability * cfg.real_noise_scale, len(pattern))
            return RealVector(pattern.values + noise)  # type: ignore[return-value]
        case ConnectionRecord():
            domain = domain or RecordDomain.from_records([pattern])
            fields = [
                domain.draw_field(index, rng) if rng.random() < probability else value
                for index, value in enumerate(pattern.fields)
            ]
            return ConnectionRecord(*fields)  # type: ignore[arg-type, return-value]
        case _:
            raise TypeError(f"cannot mutate {type(pattern).__name__}")


def clonal_expand(
    ab: Antibody,
    antigen: Antigen,
    cfg: CloneConfig = DEFAULT_CLONE,
    measure: Measure = Measure.HAMMING,
    rng: Optional[np.random.Generator] = None,
    initial_concentration: float = 1.0,
    domain: Optional[RecordDomain] = None,
    affinity_cfg: AffinityConfig = DEFAULT_AFFINITY,
) -> list[Antibody]:
    """Clones of `ab` in proportion to its affinity for `antigen`, each mutated.

    The parent itself is not returned. Clones keep the parent's source id
    and start at `initial_concentration`.
    """
    if ab.pattern is None or antigen.pattern is None:
        raise ValueError("clonal expansion needs concrete patterns")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    value = affinity(ab.pattern, antigen.pattern, measure, affinity_cfg)
    count = clone_count(value, cfg)
    logger.debug(
        "Expanding antibody %d: affinity %.3f, %d clones", ab.source_id, value, count
    )
    return [
        Antibody(
            pattern=hypermutate(
                ab.pattern, value, cfg, rng, domain  # type: ignore[type-var]
            ),
            concentration=initial_concentration,
            source_id=ab.source_id,
        )
        for _ in range(count)
    ]
