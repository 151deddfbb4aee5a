"""Run configuration: per-module settings merged from defaults, file and flags.

A config file holds flat `section.key = value` lines; `#` starts a comment.
Lists are comma-separated and matrices are `;`-separated rows of
comma-separated numbers. Command-line overrides use the same dotted keys
(`--network.death_rate=0.2`) and win over the file, which wins over the
dataclass defaults.
"""

import dataclasses
import logging
import os
import types
import typing
import zlib
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import numpy as np

from .affinity import AffinityConfig
from .clonal import CloneConfig
from .encoding import VoteRange
from .negsel import NegSelConfig
from .recommender import RecommenderConfig
from .state import DynamicsMode, NetworkConfig

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "AIS_CONFIG"


class ConfigError(Exception):
    """Raised for unknown keys, unparsable values or invalid settings."""


@dataclass(frozen=True)
class RatingsConfig:
    """Accepted vote range for ratings files."""

    min_score: int = 0
    max_score: int = 5

    def __post_init__(self) -> None:
        if self.min_score >= self.max_score:
            raise ValueError("min_score must be below max_score")

    @property
    def vote_range(self) -> VoteRange:
        return VoteRange(low=self.min_score, high=self.max_score)


@dataclass(frozen=True)
class EvaluateConfig:
    """Holdout evaluation settings."""

    holdout_fraction: float = 0.2
    seeds: tuple[int, ...] = ()  # Empty means the run's global seed
    sample_users: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0 < self.holdout_fraction < 1:
            raise ValueError("holdout_fraction must be in (0, 1)")
        if any(s < 0 for s in self.seeds):
            raise ValueError("seeds must be non-negative")
        if self.sample_users is not None and self.sample_users < 1:
            raise ValueError("sample_users must be at least 1")


@dataclass(frozen=True)
class SimulateConfig:
    """Explicit antibody/antigen setup for direct dynamics runs."""

    steps: int = 100
    mode: DynamicsMode = DynamicsMode.IDIOTYPIC
    concentrations: tuple[float, ...] = (1.0, 1.0)
    antigen_concentrations: tuple[float, ...] = (1.0,)
    matching: tuple[tuple[float, ...], ...] = ((0.0, 0.5), (0.5, 0.0))
    antigen_matching: tuple[tuple[float, ...], ...] = ((0.8,), (0.3,))

    def __post_init__(self) -> None:
        """Validate the step count and matrix dimensions."""
        n, n_antigens = len(self.concentrations), len(self.antigen_concentrations)
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if n == 0:
            raise ValueError("concentrations must list at least one antibody")
        if n_antigens == 0:
            raise ValueError("antigen_concentrations must list at least one antigen")
        if len(self.matching) != n or any(len(row) != n for row in self.matching):
            raise ValueError(f"matching must be a {n}x{n} matrix")
        if len(self.antigen_matching) != n or any(
            len(row) != n_antigens for row in self.antigen_matching
        ):
            raise ValueError(f"antigen_matching must be a {n}x{n_antigens} matrix")
        if self.mode == DynamicsMode.IDIOTYPIC and n_antigens != 1:
            raise ValueError("mode idiotypic needs exactly one antigen")


def _default_negsel_mutation() -> CloneConfig:
    return NegSelConfig().mutation


@dataclass(frozen=True)
class RunConfig:
    """Every setting for one CLI invocation.

    This class is immutable. All modifications return new instances.
    """

    seed: int = 0
    out: str = "out"
    ratings: RatingsConfig = field(default_factory=RatingsConfig)
    affinity: AffinityConfig = field(default_factory=AffinityConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    recommender: RecommenderConfig = field(default_factory=RecommenderConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)
    negsel: NegSelConfig = field(default_factory=NegSelConfig)
    clonal: CloneConfig = field(default_factory=_default_negsel_mutation)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def recommender_config(self) -> RecommenderConfig:
        """Recommender settings with the network, affinity and ratings sections."""
        return replace(
            self.recommender,
            network=self.network,
            affinity=self.affinity,
            vote_range=self.ratings.vote_range,
        )

    def negsel_config(self) -> NegSelConfig:
        """Negative-selection settings seeded from the global seed."""
        mutation = replace(self.clonal, seed=derive_seed(self.seed, "clonal"))
        return replace(
            self.negsel, mutation=mutation, seed=derive_seed(self.seed, "detect")
        )

    def evaluation_seeds(self) -> tuple[int, ...]:
        return self.evaluate.seeds or (self.seed,)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)

    def with_out(self, out: str) -> "RunConfig":
        return replace(self, out=out)

    def with_idiotypic(self, enabled: bool) -> "RunConfig":
        return replace(self, recommender=self.recommender.with_idiotypic(enabled))


SECTIONS: dict[str, type] = {
    "ratings": RatingsConfig,
    "affinity": AffinityConfig,
    "network": NetworkConfig,
    "recommender": RecommenderConfig,
    "evaluate": EvaluateConfig,
    "negsel": NegSelConfig,
    "clonal": CloneConfig,
    "simulate": SimulateConfig,
}
TOP_LEVEL = ("seed", "out")


def derive_seed(seed: int, label: str) -> int:
    """Stable per-purpose seed derived from the global seed and a label."""
    sequence = np.random.SeedSequence([seed, zlib.crc32(label.encode("utf-8"))])
    return int(sequence.generate_state(1)[0])


def _configurable_fields(cls: type) -> dict[str, Any]:
    """Field name to resolved type, skipping seeds and nested configs."""
    hints = typing.get_type_hints(cls)
    return {
        f.name: hints[f.name]
        for f in dataclasses.fields(cls)
        if f.name != "seed" and not dataclasses.is_dataclass(hints[f.name])
    }


def config_keys() -> list[str]:
    """Every dotted key a config file or override may set."""
    keys = list(TOP_LEVEL)
    for section, cls in SECTIONS.items():
        keys.extend(f"{section}.{name}" for name in _configurable_fields(cls))
    return keys


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "on", "yes", "1"):
        return True
    if lowered in ("false", "off", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_float(raw: str) -> float:
    value = float(raw)
    if not np.isfinite(value):
        raise ValueError(f"expected a finite number, got {raw!r}")
    return value


def convert_value(raw: str, hint: Any) -> Any:
    """Convert a raw config string to the type named by `hint`.

    Raises:
        ValueError: If the string does not parse as that type
    """
    raw = raw.strip()
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)

    if origin in (Union, types.UnionType) and type(None) in args:
        if raw.lower() in ("", "none"):
            return None
        (inner,) = [a for a in args if a is not type(None)]
        return convert_value(raw, inner)
    if origin is tuple:
        inner = args[0]
        if typing.get_origin(inner) is tuple:
            rows = [row for row in raw.split(";") if row.strip()]
            return tuple(convert_value(row, inner) for row in rows)
        items = [item for item in raw.split(",") if item.strip()]
        return tuple(convert_value(item, inner) for item in items)
    if isinstance(hint, type) and issubclass(hint, Enum):
        for member in hint:
            if raw.lower() in (str(member.value).lower(), member.name.lower()):
                return member
        choices = ", ".join(str(m.value) for m in hint)
        raise ValueError(f"expected one of {choices}, got {raw!r}")
    if hint is bool:
        return _parse_bool(raw)
    if hint is int:
        return int(raw)
    if hint is float:
        return _parse_float(raw)
    if hint is str:
        return raw
    raise ValueError(f"unsupported setting type {hint!r}")


def parse_config_text(content: str) -> dict[str, tuple[str, int]]:
    """Raw `key -> (value, line number)` pairs from config file content.

    Raises:
        ConfigError: On malformed lines, unknown keys or duplicates
    """
    known = set(config_keys())
    values: dict[str, tuple[str, int]] = {}
    for number, raw in enumerate(content.lstrip("\ufeff").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {number}: unknown key {key!r}")
        if key in values:
            raise ConfigError(
                f"line {number}: duplicate key {key!r} "
                f"(first set on line {values[key][1]})"
            )
        values[key] = (value, number)
    return values


def build_config(
    file_values: Mapping[str, tuple[str, int]],
    overrides: Mapping[str, str],
) -> RunConfig:
    """Merge raw file values and overrides over the defaults and validate.

    Raises:
        ConfigError: Naming the dotted key of the first invalid setting
    """
    known = set(config_keys())
    for key in overrides:
        if key not in known:
            raise ConfigError(f"unknown key {key!r}")

    def located(key: str) -> tuple[str, str]:
        if key in overrides:
            return overrides[key], f"{key} (command line)"
        value, number = file_values[key]
        return value, f"{key} (line {number})"

    def convert(key: str, hint: Any) -> Any:
        raw, where = located(key)
        try:
            return convert_value(raw, hint)
        except ValueError as e:
            raise ConfigError(f"{where}: {e}") from e

    merged = {**{k: v for k, (v, _) in file_values.items()}, **overrides}
    defaults = RunConfig()
    top: dict[str, Any] = {}
    if "seed" in merged:
        top["seed"] = convert("seed", int)
    if "out" in merged:
        top["out"] = convert("out", str)

    for section, cls in SECTIONS.items():
        kwargs = {
            name: convert(f"{section}.{name}", hint)
            for name, hint in _configurable_fields(cls).items()
            if f"{section}.{name}" in merged
        }
        try:
            top[section] = replace(getattr(defaults, section), **kwargs)
        except ValueError as e:
            raise ConfigError(f"{section}.{e}") from e

    try:
        config = RunConfig(**top)
        # Cross-section checks happen when the composed configs are built
        config.recommender_config()
        config.negsel_config()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return config


def default_config_path() -> Optional[Path]:
    """Config path from the environment, if set."""
    value = os.environ.get(CONFIG_ENV_VAR)
    return Path(value) if value else None


def load_config(
    path: Optional[Path] = None, overrides: Optional[Mapping[str, str]] = None
) -> RunConfig:
    """Load a run configuration.

    Args:
        path: Config file; falls back to the environment variable, then to
            defaults only
        overrides: Dotted-key overrides from the command line

    Returns:
        Validated run configuration

    Raises:
        ConfigError: On any invalid key or value
        FileNotFoundError: If the config file does not exist
    """
    path = path or default_config_path()
    file_values: dict[str, tuple[str, int]] = {}
    if path is not None:
        logger.info("Loading config from %s", path)
        file_values = parse_config_text(path.read_text(encoding="utf-8"))
    return build_config(file_values, overrides or {})
