"""Collaborative-filtering recommender built on a stabilizing antibody pool.

The target user is the sole antigen. Other users enter the pool one at a
time as antibodies; whenever the pool is full it is iterated until
something drops out or the pool stabilizes. The surviving antibodies are
the target's neighbourhood, and their concentrations weigh their votes.
"""

import copy
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .affinity import DEFAULT_AFFINITY, AffinityConfig, pearson_against, pearson_matrix
from .dynamics import Observer, add_antibody, iterate_once, run_until_stable
from .encoding import DEFAULT_VOTE_RANGE, UserProfile, VoteRange
from .metrics import EvaluationMetrics, create_metrics, update_metrics
from .state import Antibody, Antigen, DynamicsMode, ImmuneNetwork, NetworkConfig
from .types import ItemId, RealArray, UserId

logger = logging.getLogger(__name__)

METHODS = ("ais", "global_mean", "knn")


class ProfileError(Exception):
    """Raised when profiles do not meet a recommender precondition."""


@dataclass(frozen=True)
class Prediction:
    """Predicted score for one item the target has not voted on."""

    item_id: ItemId
    predicted_score: float
    support: int  # Neighbours who voted on the item


@dataclass(frozen=True)
class RecommenderConfig:
    """Network, matching and prediction settings for one recommender run.

    This class is immutable. All modifications return new instances.
    """

    network: NetworkConfig = field(default_factory=NetworkConfig)
    affinity: AffinityConfig = DEFAULT_AFFINITY
    vote_range: VoteRange = DEFAULT_VOTE_RANGE
    idiotypic_enabled: bool = False
    min_support: int = 1
    top_n: int = 10
    antigen_concentration: float = 1.0
    knn_k: int = 20

    def __post_init__(self) -> None:
        """Validate prediction settings."""
        if self.min_support < 1:
            raise ValueError("min_support must be at least 1")
        if self.top_n < 1:
            raise ValueError("top_n must be at least 1")
        if self.antigen_concentration <= 0:
            raise ValueError("antigen_concentration must be positive")
        if self.knn_k < 1:
            raise ValueError("knn_k must be at least 1")

    @property
    def mode(self) -> DynamicsMode:
        if self.idiotypic_enabled:
            return DynamicsMode.IDIOTYPIC
        return DynamicsMode.PLAIN

    def with_idiotypic(self, enabled: bool) -> "RecommenderConfig":
        """Return new config with the idiotypic effect switched on or off."""
        return replace(self, idiotypic_enabled=enabled)

    def with_network(self, network: NetworkConfig) -> "RecommenderConfig":
        """Return new config with different network settings."""
        return replace(self, network=network)


DEFAULT_RECOMMENDER = RecommenderConfig()


class ProfileMatcher:
    """Pearson matching between profiles, precomputed and looked up by user id.

    Scores for the current target are computed against the stored
    profiles by `for_target`; lookups involving the target's user id use
    those scores, so the target may be a reduced copy of a stored profile.
    """

    def __init__(
        self,
        profiles: Sequence[UserProfile],
        cfg: AffinityConfig = DEFAULT_AFFINITY,
    ) -> None:
        self.profiles = list(profiles)
        self.cfg = cfg
        self._index = {p.user_id: i for i, p in enumerate(self.profiles)}
        if len(self._index) != len(self.profiles):
            raise ProfileError("duplicate user ids among profiles")
        self._matrix = pearson_matrix(self.profiles, cfg)
        self._target_id: Optional[UserId] = None
        self._target_scores: RealArray = np.zeros(0)

    def for_target(self, target: UserProfile) -> "ProfileMatcher":
        """Copy sharing the pairwise scores, with `target`'s scores attached."""
        matcher = copy.copy(self)
        matcher._target_id = target.user_id
        matcher._target_scores = pearson_against(target, self.profiles, self.cfg)
        return matcher

    def target_scores(self) -> dict[UserId, float]:
        """Scores of the attached target against every stored profile."""
        return {
            p.user_id: float(s) for p, s in zip(self.profiles, self._target_scores)
        }

    def score(self, a: UserId, b: UserId) -> float:
        if a == b:
            return 1.0
        if a == self._target_id:
            return float(self._target_scores[self._index[b]])
        if b == self._target_id:
            return float(self._target_scores[self._index[a]])
        return float(self._matrix[self._index[a], self._index[b]])

    def __call__(self, a: object, b: object) -> float:
        if not isinstance(a, UserProfile) or not isinstance(b, UserProfile):
            raise TypeError("ProfileMatcher compares UserProfile instances only")
        return self.score(a.user_id, b.user_id)


def build_neighbourhood(
    target: UserProfile,
    candidates: Sequence[UserProfile],
    cfg: RecommenderConfig = DEFAULT_RECOMMENDER,
    matcher: Optional[ProfileMatcher] = None,
    observer: Optional[Observer] = None,
) -> ImmuneNetwork:
    """Grow and stabilize the antibody pool around a target user.

    Candidates are added in input order. Whenever the pool is full it is
    iterated until an antibody drops out or the pool stabilizes; once a
    full pool has settled no further candidates are added. A final
    stabilization pass runs after the last addition.

    Args:
        target: User to advise, used as the sole antigen
        candidates: Other users, in insertion order
        cfg: Recommender configuration
        matcher: Precomputed matcher covering the candidates, if any
        observer: Called with the network after every iteration

    Returns:
        The final, settled network

    Raises:
        ProfileError: If the target is among the candidates
    """
    if any(c.user_id == target.user_id for c in candidates):
        raise ProfileError(f"target user {target.user_id} is among the candidates")

    base = matcher if matcher is not None else ProfileMatcher(candidates, cfg.affinity)
    net = ImmuneNetwork.create(
        cfg.network,
        [Antigen(pattern=target, concentration=cfg.antigen_concentration)],
        base.for_target(target),
    )
    mode = cfg.mode

    for candidate in candidates:
        if net.is_full:
            break
        antibody = Antibody(pattern=candidate, source_id=candidate.user_id)
        net = add_antibody(net, antibody)
        while net.is_full and not net.is_settled:
            net, _ = iterate_once(net, mode)
            if observer is not None:
                observer(net)

    net = run_until_stable(net, mode, observer=observer)
    logger.debug(
        "Neighbourhood for user %d: %d antibodies after %d iterations (%s)",
        target.user_id,
        net.size,
        net.iteration_count,
        net.exit_condition.value if net.exit_condition else "unsettled",
    )
    return net


def _weighted_offsets(
    target: UserProfile,
    neighbours: Iterable[tuple[UserProfile, float]],
    cfg: RecommenderConfig,
) -> list[Prediction]:
    """Target mean plus the weighted mean of neighbour offsets, per unvoted item."""
    if not target.votes:
        raise ProfileError(f"user {target.user_id} has no votes")

    offset_sum: dict[ItemId, float] = defaultdict(float)
    weight_sum: dict[ItemId, float] = defaultdict(float)
    support: dict[ItemId, int] = defaultdict(int)
    for profile, weight in neighbours:
        if weight <= 0 or not profile.votes:
            continue
        mean = profile.mean
        for item_id, score in profile.votes.items():
            if item_id in target.votes:
                continue
            offset_sum[item_id] += weight * (score - mean)
            weight_sum[item_id] += weight
            support[item_id] += 1

    predictions = []
    for item_id in sorted(support):
        if support[item_id] < cfg.min_support or weight_sum[item_id] <= 0:
            continue
        score = target.mean + offset_sum[item_id] / weight_sum[item_id]
        predictions.append(
            Prediction(
                item_id=item_id,
                predicted_score=cfg.vote_range.clamp(score),
                support=support[item_id],
            )
        )
    return predictions


def predict(
    net: ImmuneNetwork,
    target: UserProfile,
    cfg: RecommenderConfig = DEFAULT_RECOMMENDER,
) -> list[Prediction]:
    """Concentration-weighted predictions for items the target has not voted on.

    Returns:
        Predictions ordered by item id; empty for an empty network
    """
    neighbours = [
        (pattern, float(x))
        for pattern, x in zip(net.patterns, net.concentrations)
        if isinstance(pattern, UserProfile)
    ]
    return _weighted_offsets(target, neighbours, cfg)


def recommend_top_n(predictions: Sequence[Prediction], n: int) -> list[Prediction]:
    """Best `n` predictions by score, then support, then lower item id."""
    if n < 0:
        raise ValueError("n must be non-negative")
    ranked = sorted(
        predictions, key=lambda p: (-p.predicted_score, -p.support, p.item_id)
    )
    return ranked[:n]


def predict_knn(
    target: UserProfile,
    candidates: Sequence[UserProfile],
    cfg: RecommenderConfig = DEFAULT_RECOMMENDER,
    matcher: Optional[ProfileMatcher] = None,
) -> list[Prediction]:
    """k-nearest-neighbour baseline over positively correlated candidates.

    The `knn_k` candidates with the highest positive Pearson score are the
    neighbourhood; their mean offsets are weighted by that score.
    """
    base = matcher if matcher is not None else ProfileMatcher(candidates, cfg.affinity)
    scores = base.for_target(target).target_scores()
    ranked = sorted(
        (c for c in candidates if scores.get(c.user_id, 0.0) > 0),
        key=lambda c: (-scores[c.user_id], c.user_id),
    )
    neighbours = [(c, scores[c.user_id]) for c in ranked[: cfg.knn_k]]
    return _weighted_offsets(target, neighbours, cfg)


def predict_global_mean(
    profiles: Iterable[UserProfile], item_ids: Iterable[ItemId]
) -> list[Prediction]:
    """Baseline predicting the mean of every known vote for each item."""
    votes = [score for profile in profiles for score in profile.votes.values()]
    if not votes:
        return []
    mean = float(np.mean(votes))
    return [
        Prediction(item_id=item_id, predicted_score=mean, support=len(votes))
        for item_id in sorted(set(item_ids))
    ]


def mean_pairwise_pearson(net: ImmuneNetwork) -> float:
    """Mean matching over distinct antibody pairs; 0.0 for fewer than two."""
    if net.size < 2:
        return 0.0
    upper = np.triu_indices(net.size, k=1)
    return float(np.mean(net.matching[upper]))


def evaluate_methods(
    dataset: Sequence[UserProfile],
    holdout_fraction: float,
    cfg: RecommenderConfig = DEFAULT_RECOMMENDER,
    seed: int = 0,
    sample_users: Optional[int] = None,
    methods: Sequence[str] = METHODS,
) -> dict[str, EvaluationMetrics]:
    """Hold out votes and score several predictors on the same split.

    For every user with at least two votes, round(holdout_fraction * n)
    votes (at least one, at most n - 1) are hidden at random. The other
    users keep their full profiles. All methods see the same split.

    Args:
        dataset: All user profiles
        holdout_fraction: Fraction of each user's votes to hide, in (0, 1)
        cfg: Recommender configuration
        seed: Seed for the holdout split and user sample
        sample_users: Evaluate only this many randomly chosen users
        methods: Any of "ais", "global_mean" and "knn"

    Returns:
        Metrics keyed by method name

    Raises:
        ProfileError: If the dataset has fewer than two users
        ValueError: If holdout_fraction or a method name is invalid
    """
    if len(dataset) < 2:
        raise ProfileError(f"evaluation needs at least 2 users, got {len(dataset)}")
    if not 0 < holdout_fraction < 1:
        raise ValueError("holdout_fraction must be in (0, 1)")
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown evaluation methods: {sorted(unknown)}")

    rng = np.random.default_rng(seed)
    eligible = [i for i, p in enumerate(dataset) if len(p) >= 2]
    if sample_users is not None and sample_users < len(eligible):
        chosen = rng.choice(len(eligible), size=sample_users, replace=False)
        eligible = [eligible[i] for i in sorted(chosen)]

    matcher = ProfileMatcher(dataset, cfg.affinity)
    results = {method: create_metrics() for method in methods}

    for index in eligible:
        profile = dataset[index]
        items = sorted(profile.votes)
        k = min(max(int(round(holdout_fraction * len(items))), 1), len(items) - 1)
        hidden = [int(i) for i in rng.choice(items, size=k, replace=False)]
        visible = profile.without(hidden)
        candidates = [p for j, p in enumerate(dataset) if j != index]

        for method in methods:
            match method:
                case "ais":
                    net = build_neighbourhood(visible, candidates, cfg, matcher)
                    predictions = predict(net, visible, cfg)
                case "knn":
                    predictions = predict_knn(visible, candidates, cfg, matcher)
                case _:
                    predictions = predict_global_mean([visible, *candidates], hidden)
            predicted = {p.item_id: p.predicted_score for p in predictions}
            errors = [
                abs(predicted[i] - profile.votes[i]) for i in hidden if i in predicted
            ]
            results[method] = update_metrics(results[method], errors, k)

    for method, metrics in results.items():
        logger.info(
            "Evaluation seed %d, %s: mae=%s coverage=%.3f",
            seed,
            method,
            "n/a" if metrics.mae is None else f"{metrics.mae:.4f}",
            metrics.coverage,
        )
    return results


def evaluate_mae(
    dataset: Sequence[UserProfile],
    holdout_fraction: float,
    cfg: RecommenderConfig = DEFAULT_RECOMMENDER,
    seed: int = 0,
    sample_users: Optional[int] = None,
) -> tuple[Optional[float], float]:
    """MAE and coverage of the immune-network recommender on a seeded holdout.

    Returns:
        Tuple of (mae, coverage); mae is None when coverage is 0
    """
    metrics = evaluate_methods(
        dataset, holdout_fraction, cfg, seed, sample_users, methods=("ais",)
    )["ais"]
    return metrics.mae, metrics.coverage
