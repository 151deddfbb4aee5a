"""Negative-selection anomaly detection.

Random candidate detectors are censored against a self set: any candidate
that matches a self pattern is discarded (or, optionally, hypermutated and
re-censored), and the survivors mature. Mature detectors then monitor
traffic, counting matches; once a detector's count reaches its activation
threshold it raises alerts. A confirmed detector is promoted to memory,
which alerts on its first match and never expires.

Bit strings match under the r-contiguous rule (longest agreeing run of at
least r positions); connection records match field by field with
wildcards.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .affinity import (
    longest_contiguous,
    longest_run_matrix,
    record_affinity,
    record_match,
    records_overlap,
)
from .clonal import DEFAULT_CLONE, CloneConfig, hypermutate
from .encoding import AttributeString, BitString, ConnectionRecord, RecordDomain
from .synthetic import as_matrix, bit_universe
from .types import AlertRow, BitMatrix

logger = logging.getLogger(__name__)

DetectorPattern = Union[BitString, ConnectionRecord]

EXHAUSTIVE_MAX_LENGTH = 16


class DetectorGenerationError(Exception):
    """Raised when no candidate survives censoring."""


class PromotionError(Exception):
    """Raised when promoting a detector that has not been activated."""


class PatternKind(Enum):
    """Pattern variant detectors are built from."""

    BITS = "bits"
    RECORD = "record"


class DetectorState(Enum):
    """Detector lifecycle stage."""

    IMMATURE = "immature"
    MATURE = "mature"
    MEMORY = "memory"


@dataclass(frozen=True)
class Detector:
    """A pattern with its lifecycle state and match bookkeeping."""

    detector_id: int
    pattern: DetectorPattern
    state: DetectorState = DetectorState.IMMATURE
    match_count: int = 0
    activation_threshold: int = 1
    age: int = 0  # Traffic items monitored while mature

    def __post_init__(self) -> None:
        if self.activation_threshold < 1:
            raise ValueError("activation_threshold must be at least 1")
        if self.state == DetectorState.MEMORY and self.activation_threshold != 1:
            raise ValueError("memory detectors must have activation_threshold 1")
        if self.match_count < 0:
            raise ValueError("match_count must be non-negative")

    @property
    def is_activated(self) -> bool:
        return self.match_count >= self.activation_threshold


@dataclass(frozen=True)
class Alert:
    """One traffic item matched by an activated detector."""

    traffic_index: int
    detector_id: int
    pattern: DetectorPattern

    @property
    def row(self) -> AlertRow:
        return (self.traffic_index, self.detector_id)


@dataclass(frozen=True)
class NegSelConfig:
    """Detector generation and monitoring settings.

    This class is immutable. All modifications return new instances.
    """

    r: int = 4
    target_detector_count: int = 50
    max_generation_attempts: int = 10_000
    activation_threshold: int = 1
    mutate_instead_of_discard: bool = False
    mutation_attempts_per_candidate: int = 3
    pattern_length: int = 8
    pattern_kind: PatternKind = PatternKind.BITS
    lifetime: Optional[int] = None  # Max traffic items per mature detector
    wildcard_probability: float = 0.2
    mutation: CloneConfig = field(
        default_factory=lambda: DEFAULT_CLONE.with_mutation(0.3, False)
    )
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate counts and the match length."""
        if self.r < 1:
            raise ValueError("r must be at least 1")
        if self.pattern_length < 1:
            raise ValueError("pattern_length must be at least 1")
        if self.pattern_kind == PatternKind.BITS and self.r > self.pattern_length:
            raise ValueError(
                f"r must not exceed pattern_length ({self.r} > {self.pattern_length})"
            )
        if self.target_detector_count < 1:
            raise ValueError("target_detector_count must be at least 1")
        if self.max_generation_attempts < 1:
            raise ValueError("max_generation_attempts must be at least 1")
        if self.activation_threshold < 1:
            raise ValueError("activation_threshold must be at least 1")
        if self.mutation_attempts_per_candidate < 0:
            raise ValueError("mutation_attempts_per_candidate must be non-negative")
        if self.lifetime is not None and self.lifetime < 1:
            raise ValueError("lifetime must be at least 1")
        if not 0 <= self.wildcard_probability <= 1:
            raise ValueError("wildcard_probability must be in [0, 1]")

    def with_pattern(self, kind: PatternKind, length: int) -> "NegSelConfig":
        """Return new config for a different pattern variant or length."""
        return replace(self, pattern_kind=kind, pattern_length=length)

    def with_seed(self, seed: int) -> "NegSelConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class GenerationReport:
    """Outcome of one detector generation run."""

    detectors: list[Detector]
    draws: int  # Candidates drawn
    rescued: int  # Detectors that survived only after hypermutation


class _SelfSet:
    """Self patterns prepared for fast censoring."""

    def __init__(self, self_set: Sequence[AttributeString], cfg: NegSelConfig) -> None:
        self.cfg = cfg
        self.records: list[ConnectionRecord] = []
        self.matrix: BitMatrix = np.zeros((0, cfg.pattern_length), dtype=np.uint8)
        if cfg.pattern_kind == PatternKind.BITS:
            strings = [_expect_bits(p, cfg) for p in self_set]
            if strings:
                self.matrix = as_matrix(strings)
        else:
            self.records = [_expect_record(p) for p in self_set]

    def matches(self, pattern: DetectorPattern) -> bool:
        """True if the pattern matches any self pattern."""
        if isinstance(pattern, BitString):
            if self.matrix.shape[0] == 0:
                return False
            runs = longest_run_matrix(pattern.bits[None, :], self.matrix)
            return bool(runs.max() >= self.cfg.r)
        return any(records_overlap(pattern, s) for s in self.records)

    def closest(self, pattern: DetectorPattern) -> float:
        """Affinity in [0, 1] to the closest self pattern."""
        if isinstance(pattern, BitString):
            if self.matrix.shape[0] == 0:
                return 0.0
            runs = longest_run_matrix(pattern.bits[None, :], self.matrix)
            return float(runs.max()) / len(pattern)
        return max((record_affinity(pattern, s) for s in self.records), default=0.0)


def _expect_bits(pattern: AttributeString, cfg: NegSelConfig) -> BitString:
    if not isinstance(pattern, BitString):
        raise ValueError(f"expected bit strings, got {type(pattern).__name__}")
    if len(pattern) != cfg.pattern_length:
        raise ValueError(
            f"pattern length {len(pattern)} differs from pattern_length "
            f"{cfg.pattern_length}"
        )
    return pattern


def _expect_record(pattern: AttributeString) -> ConnectionRecord:
    if not isinstance(pattern, ConnectionRecord):
        raise ValueError(f"expected connection records, got {type(pattern).__name__}")
    return pattern


def matches(
    detector: DetectorPattern, item: AttributeString, cfg: NegSelConfig
) -> bool:
    """Match rule between one detector pattern and one observed item."""
    if isinstance(detector, BitString):
        return longest_contiguous(detector, _expect_bits(item, cfg)) >= cfg.r
    return record_match(detector, _expect_record(item))


def censor(
    candidate: Detector, self_set: Sequence[AttributeString], cfg: NegSelConfig
) -> Optional[Detector]:
    """Mature the candidate unless it matches a self pattern.

    Returns:
        The matured detector, or None if the candidate is eliminated

    Raises:
        ValueError: If the candidate is not immature
    """
    if candidate.state != DetectorState.IMMATURE:
        raise ValueError(f"detector {candidate.detector_id} is not immature")
    if _SelfSet(self_set, cfg).matches(candidate.pattern):
        return None
    return replace(candidate, state=DetectorState.MATURE)


def _draw_candidate(
    cfg: NegSelConfig, rng: np.random.Generator, domain: Optional[RecordDomain]
) -> DetectorPattern:
    if cfg.pattern_kind == PatternKind.BITS:
        return BitString(rng.integers(0, 2, size=cfg.pattern_length, dtype=np.uint8))
    assert domain is not None
    return domain.draw_record(rng)


def run_generation(
    self_set: Sequence[AttributeString],
    cfg: NegSelConfig,
    rng: Optional[np.random.Generator] = None,
) -> GenerationReport:
    """Draw and censor random candidates until enough detectors mature.

    Candidates whose pattern was already drawn are rejected. With
    `mutate_instead_of_discard`, a self-matching candidate is hypermutated
    up to `mutation_attempts_per_candidate` times, scaled by its affinity
    to the closest self pattern, and each mutant is re-censored.

    Coverage only shrinks as the self set grows while `target_detector_count`
    is out of reach. Once the target stops generation early, the detectors
    are whichever survivors were drawn first, so a larger self set can end
    up matching strings a smaller one did not.

    Args:
        self_set: Trusted patterns
        cfg: Generation settings
        rng: Random stream; a fresh stream from `cfg.seed` if omitted

    Returns:
        Report with the mature detectors, draws used and rescued count

    Raises:
        DetectorGenerationError: If every draw is used up without a survivor
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    prepared = _SelfSet(self_set, cfg)
    domain = None
    if cfg.pattern_kind == PatternKind.RECORD:
        domain = RecordDomain.from_records(prepared.records, cfg.wildcard_probability)

    detectors: list[Detector] = []
    seen: set[DetectorPattern] = set()
    draws = 0
    rescued = 0

    while (
        len(detectors) < cfg.target_detector_count
        and draws < cfg.max_generation_attempts
    ):
        draws += 1
        pattern = _draw_candidate(cfg, rng, domain)
        if pattern in seen:
            continue
        seen.add(pattern)

        survived = not prepared.matches(pattern)
        if not survived and cfg.mutate_instead_of_discard:
            for _ in range(cfg.mutation_attempts_per_candidate):
                closeness = prepared.closest(pattern)
                pattern = hypermutate(pattern, closeness, cfg.mutation, rng, domain)
                if pattern in seen:
                    continue
                seen.add(pattern)
                if not prepared.matches(pattern):
                    survived = True
                    rescued += 1
                    break

        if survived:
            detectors.append(
                Detector(
                    detector_id=len(detectors),
                    pattern=pattern,
                    state=DetectorState.MATURE,
                    activation_threshold=cfg.activation_threshold,
                )
            )

    if not detectors:
        raise DetectorGenerationError(
            f"no candidate survived censoring after {draws} draws; "
            "the self set covers the pattern space under this matching rule"
        )
    if len(detectors) < cfg.target_detector_count:
        logger.warning(
            "Generated %d of %d detectors in %d draws",
            len(detectors),
            cfg.target_detector_count,
            draws,
        )
    logger.info(
        "Generated %d detectors in %d draws (%d rescued by mutation)",
        len(detectors),
        draws,
        rescued,
    )
    return GenerationReport(detectors=detectors, draws=draws, rescued=rescued)


def generate_detectors(
    self_set: Sequence[AttributeString],
    cfg: NegSelConfig,
    rng: Optional[np.random.Generator] = None,
) -> list[Detector]:
    """Mature detectors from seeded random generation."""
    return run_generation(self_set, cfg, rng).detectors


def generate_exhaustive(
    self_set: Sequence[AttributeString], cfg: NegSelConfig
) -> list[Detector]:
    """Every bit string of `pattern_length` that survives censoring.

    Detectors are in counting order. Only available for bit strings of
    length up to 16.

    Raises:
        ValueError: For records or patterns longer than 16 bits
        DetectorGenerationError: If no string survives
    """
    if cfg.pattern_kind != PatternKind.BITS:
        raise ValueError("exhaustive generation needs bit-string patterns")
    if cfg.pattern_length > EXHAUSTIVE_MAX_LENGTH:
        raise ValueError(
            f"exhaustive generation supports lengths up to {EXHAUSTIVE_MAX_LENGTH}"
        )

    prepared = _SelfSet(self_set, cfg)
    universe = bit_universe(cfg.pattern_length)
    if prepared.matrix.shape[0] == 0:
        survivors = universe
    else:
        runs = longest_run_matrix(universe, prepared.matrix)
        survivors = universe[runs.max(axis=1) < cfg.r]

    if survivors.shape[0] == 0:
        raise DetectorGenerationError(
            "no bit string survives censoring; the self set covers the pattern "
            "space under this matching rule"
        )
    return [
        Detector(
            detector_id=index,
            pattern=BitString(row),
            state=DetectorState.MATURE,
            activation_threshold=cfg.activation_threshold,
        )
        for index, row in enumerate(survivors)
    ]


def _match_table(
    detectors: Sequence[Detector], traffic: Sequence[AttributeString], cfg: NegSelConfig
) -> np.ndarray:
    """Boolean (traffic x detector) table of raw matches."""
    if not detectors or not traffic:
        return np.zeros((len(traffic), len(detectors)), dtype=np.bool_)
    if cfg.pattern_kind == PatternKind.BITS:
        items = as_matrix([_expect_bits(t, cfg) for t in traffic])
        patterns = as_matrix([_expect_bits(d.pattern, cfg) for d in detectors])
        return longest_run_matrix(items, patterns) >= cfg.r
    return np.array(
        [[matches(d.pattern, t, cfg) for d in detectors] for t in traffic],
        dtype=np.bool_,
    )


def monitor(
    detectors: Sequence[Detector],
    traffic: Sequence[AttributeString],
    cfg: NegSelConfig,
) -> tuple[list[Alert], list[Detector]]:
    """Run traffic past the detectors in order.

    Every match increments the detector's match count; a match that brings
    the count to the activation threshold or beyond raises an alert. A
    mature detector stops monitoring once it has seen `lifetime` items;
    memory detectors never expire.

    Returns:
        Tuple of:
        - Alerts ordered by traffic index, then detector index
        - Detectors with updated match counts and ages

    Raises:
        ValueError: If a detector is still immature
    """
    for detector in detectors:
        if detector.state == DetectorState.IMMATURE:
            raise ValueError(f"detector {detector.detector_id} is immature")

    table = _match_table(detectors, traffic, cfg)
    counts = [d.match_count for d in detectors]
    ages = [d.age for d in detectors]
    alerts: list[Alert] = []

    for t in range(len(traffic)):
        for d, detector in enumerate(detectors):
            mortal = detector.state == DetectorState.MATURE and cfg.lifetime is not None
            if mortal and ages[d] >= cfg.lifetime:  # type: ignore[operator]
                continue
            ages[d] += 1
            if not table[t, d]:
                continue
            counts[d] += 1
            if counts[d] >= detector.activation_threshold:
                alerts.append(Alert(t, detector.detector_id, detector.pattern))

    updated = [
        replace(detector, match_count=count, age=age)
        for detector, count, age in zip(detectors, counts, ages)
    ]
    logger.info("Monitored %d items: %d alerts", len(traffic), len(alerts))
    return alerts, updated


def promote(detector: Detector, operator_confirmed: bool) -> Optional[Detector]:
    """Resolve an activated detector.

    Returns:
        A memory detector if confirmed, otherwise None (discarded)

    Raises:
        PromotionError: If the detector has not been activated
    """
    if not detector.is_activated:
        raise PromotionError(
            f"detector {detector.detector_id} has {detector.match_count} matches, "
            f"below its threshold {detector.activation_threshold}"
        )
    if not operator_confirmed:
        return None
    return replace(
        detector, state=DetectorState.MEMORY, activation_threshold=1, match_count=0
    )


def promote_activated(
    detectors: Sequence[Detector], operator_confirmed: bool
) -> tuple[list[Detector], int]:
    """Apply one operator decision to every activated detector.

    Returns:
        Tuple of (remaining detectors, number of activated detectors resolved)
    """
    remaining: list[Detector] = []
    resolved = 0
    for detector in detectors:
        if detector.state != DetectorState.MEMORY and detector.is_activated:
            resolved += 1
            promoted = promote(detector, operator_confirmed)
            if promoted is not None:
                remaining.append(promoted)
        else:
            remaining.append(detector)
    return remaining, resolved


def matched_set(
    detectors: Sequence[Detector], cfg: NegSelConfig
) -> frozenset[BitString]:
    """Every bit string of `pattern_length` matched by at least one detector."""
    if cfg.pattern_length > EXHAUSTIVE_MAX_LENGTH:
        raise ValueError(f"matched set supports lengths up to {EXHAUSTIVE_MAX_LENGTH}")
    universe = bit_universe(cfg.pattern_length)
    if not detectors:
        return frozenset()
    patterns = as_matrix([_expect_bits(d.pattern, cfg) for d in detectors])
    hit = (longest_run_matrix(universe, patterns) >= cfg.r).any(axis=1)
    return frozenset(BitString(row) for row in universe[hit])
