"""Prediction-accuracy metrics for recommender evaluation."""

from dataclasses import dataclass, replace
from typing import Iterable, Optional


@dataclass(frozen=True)
class EvaluationMetrics:
    """Running totals over hidden votes."""

    absolute_error_sum: float = 0.0
    predicted: int = 0  # Hidden votes that received a prediction
    hidden: int = 0  # Hidden votes overall

    @property
    def mae(self) -> Optional[float]:
        """Mean absolute error over predicted votes, None when nothing was predicted."""
        if self.predicted == 0:
            return None
        return self.absolute_error_sum / self.predicted

    @property
    def coverage(self) -> float:
        """Fraction of hidden votes that received a prediction."""
        if self.hidden == 0:
            return 0.0
        return self.predicted / self.hidden


def create_metrics() -> EvaluationMetrics:
    """Create an empty metrics instance."""
    return EvaluationMetrics()


def update_metrics(
    metrics: EvaluationMetrics,
    errors: Iterable[float],
    hidden: int,
) -> EvaluationMetrics:
    """Fold one user's results into the totals.

    Args:
        metrics: Current metrics instance
        errors: Absolute errors of the predicted hidden votes
        hidden: Number of votes hidden for this user

    Returns:
        New metrics instance with updated totals
    """
    errors = list(errors)
    if len(errors) > hidden:
        raise ValueError("more predictions than hidden votes")
    return replace(
        metrics,
        absolute_error_sum=metrics.absolute_error_sum + float(sum(errors)),
        predicted=metrics.predicted + len(errors),
        hidden=metrics.hidden + hidden,
    )
