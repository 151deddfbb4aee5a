"""Discrete-time concentration dynamics for the antibody pool.

Each step is one explicit Euler update of every antibody concentration,
computed from the pre-step snapshot and clamped to [0, cap]:

    plain:      dx_i = k1 * sum_j m_ij * y_j * x_i - k3 * x_i
    idiotypic:  dx_i = k1 * m_i * y * x_i - (k2 / n) * sum_{j != i} m_ij * x_i * x_j
                       - k3 * x_i

Antibodies below the drop threshold are removed between steps; the pool
counts as stable once its size has not changed for a fixed window of
iterations.
"""

import dataclasses
import logging
from typing import Callable, Optional

import numpy as np

from .state import (
    Antibody,
    DynamicsMode,
    ExitCondition,
    ImmuneNetwork,
    NetworkConfig,
    PoolFullError,
)
from .types import Concentrations, TrajectoryRow

logger = logging.getLogger(__name__)

Observer = Callable[[ImmuneNetwork], None]


class TrajectoryRecorder:
    """Observer collecting (iteration, source_id, concentration) rows."""

    def __init__(self) -> None:
        self.rows: list[TrajectoryRow] = []

    def __call__(self, net: ImmuneNetwork) -> None:
        self.rows.extend(
            (net.iteration_count, source_id, float(x))
            for source_id, x in zip(net.source_ids, net.concentrations)
        )


def add_antibody(net: ImmuneNetwork, ab: Antibody) -> ImmuneNetwork:
    """Append an antibody at the configured initial concentration.

    Matching values against every pool member and every antigen are
    computed once here with the network's matcher.

    Raises:
        PoolFullError: If the pool is at capacity
        ValueError: If the network has no matcher
    """
    if net.is_full:
        raise PoolFullError(f"pool is at capacity {net.config.pool_capacity}")
    if net.matcher is None:
        raise ValueError("network has no matcher; it was built from matrices")

    matcher = net.matcher
    n = net.size
    row = np.array([matcher(ab.pattern, p) for p in net.patterns], dtype=np.float64)
    matching = np.zeros((n + 1, n + 1), dtype=np.float64)
    matching[:n, :n] = net.matching
    matching[n, :n] = row
    matching[:n, n] = row

    antigen_row = np.array(
        [matcher(ab.pattern, antigen.pattern) for antigen in net.antigens],
        dtype=np.float64,
    )
    antigen_matching = np.vstack([net.antigen_matching, antigen_row[None, :]])

    concentrations = np.append(net.concentrations, net.config.initial_concentration)
    for array in (matching, antigen_matching, concentrations):
        array.setflags(write=False)

    logger.debug("Added antibody %s at pool size %d", ab.source_id, n + 1)
    return dataclasses.replace(
        net,
        patterns=(*net.patterns, ab.pattern),
        source_ids=(*net.source_ids, ab.source_id),
        concentrations=concentrations,
        matching=matching,
        antigen_matching=antigen_matching,
        iterations_since_size_change=0,
        exit_condition=None,
    )


def _stimulation(net: ImmuneNetwork, cfg: NetworkConfig) -> Concentrations:
    y = net.antigen_concentrations
    x = net.concentrations
    return cfg.stimulation_rate * (net.antigen_matching @ y) * x


def _advance(
    net: ImmuneNetwork, cfg: NetworkConfig, derivative: Concentrations
) -> ImmuneNetwork:
    updated = np.clip(net.concentrations + cfg.dt * derivative, 0.0, cfg.cap)
    return net.with_concentrations(updated).with_iteration()


def step_plain(
    net: ImmuneNetwork, cfg: Optional[NetworkConfig] = None
) -> ImmuneNetwork:
    """One synchronous update with stimulation by every antigen and death.

    Raises:
        ValueError: If the pool is empty
    """
    cfg = cfg or net.config
    if net.is_empty:
        raise ValueError("cannot step an empty pool")
    death = cfg.death_rate * net.concentrations
    return _advance(net, cfg, _stimulation(net, cfg) - death)


def step_idiotypic(
    net: ImmuneNetwork, cfg: Optional[NetworkConfig] = None
) -> ImmuneNetwork:
    """One synchronous update adding suppression between similar antibodies.

    The suppression sum runs over the other antibodies only and is
    averaged over the current pool size. With a zero suppression rate the
    result is bitwise identical to `step_plain`.

    Raises:
        ValueError: If the pool is empty or there is not exactly one antigen
    """
    cfg = cfg or net.config
    if len(net.antigens) != 1:
        raise ValueError(
            f"idiotypic step needs exactly one antigen, got {len(net.antigens)}; "
            "use step_plain for several antigens"
        )
    if net.is_empty:
        raise ValueError("cannot step an empty pool")

    x = net.concentrations
    suppression = (cfg.suppression_rate / net.size) * (net.matching @ x) * x
    death = cfg.death_rate * x
    return _advance(net, cfg, _stimulation(net, cfg) - suppression - death)


def step(
    net: ImmuneNetwork, mode: DynamicsMode, cfg: Optional[NetworkConfig] = None
) -> ImmuneNetwork:
    """Dispatch to the stepper for `mode`."""
    match mode:
        case DynamicsMode.IDIOTYPIC:
            return step_idiotypic(net, cfg)
        case _:
            return step_plain(net, cfg)


def drop_out(
    net: ImmuneNetwork, cfg: Optional[NetworkConfig] = None
) -> tuple[ImmuneNetwork, list[Antibody]]:
    """Remove antibodies whose concentration fell strictly below the threshold.

    Returns:
        Tuple of:
        - Network with the survivors; the size-change counter is reset if
          anything was removed and incremented otherwise
        - Removed antibodies in pool order
    """
    cfg = cfg or net.config
    below = net.concentrations < cfg.drop_threshold
    if not np.any(below):
        return (
            dataclasses.replace(
                net, iterations_since_size_change=net.iterations_since_size_change + 1
            ),
            [],
        )

    dropped = [ab for ab, low in zip(net.antibodies, below) if low]
    logger.debug(
        "Dropped %d antibodies at iteration %d", len(dropped), net.iteration_count
    )
    survivors = net.keep(~below)
    return dataclasses.replace(survivors, iterations_since_size_change=0), dropped


def iterate_once(
    net: ImmuneNetwork,
    mode: DynamicsMode,
    cfg: Optional[NetworkConfig] = None,
) -> tuple[ImmuneNetwork, list[Antibody]]:
    """One {step, drop_out} iteration.

    An empty pool is not stepped; the iteration still counts toward the
    stabilization window.
    """
    if net.is_empty:
        return (
            dataclasses.replace(
                net,
                iteration_count=net.iteration_count + 1,
                iterations_since_size_change=net.iterations_since_size_change + 1,
            ),
            [],
        )
    return drop_out(step(net, mode, cfg), cfg)


def _exit_condition(net: ImmuneNetwork, cfg: NetworkConfig) -> ExitCondition:
    if net.iterations_since_size_change >= cfg.stabilization_window:
        return ExitCondition.STABLE
    return ExitCondition.ITERATION_LIMIT


def run_until_stable(
    net: ImmuneNetwork,
    mode: DynamicsMode = DynamicsMode.PLAIN,
    cfg: Optional[NetworkConfig] = None,
    observer: Optional[Observer] = None,
) -> ImmuneNetwork:
    """Iterate until the pool size holds for the stabilization window.

    Stops early at `max_iterations`; the returned network records which
    condition fired. An empty pool is stable immediately.
    """
    cfg = cfg or net.config
    if net.is_empty:
        return net.with_exit_condition(ExitCondition.STABLE)

    while not (
        net.iterations_since_size_change >= cfg.stabilization_window
        or net.iteration_count >= cfg.max_iterations
    ):
        net, _ = iterate_once(net, mode, cfg)
        if observer is not None:
            observer(net)

    condition = _exit_condition(net, cfg)
    logger.debug(
        "Pool settled (%s) at size %d after %d iterations",
        condition.value,
        net.size,
        net.iteration_count,
    )
    return net.with_exit_condition(condition)


def run_steps(
    net: ImmuneNetwork,
    steps: int,
    mode: DynamicsMode = DynamicsMode.PLAIN,
    cfg: Optional[NetworkConfig] = None,
    observer: Optional[Observer] = None,
) -> ImmuneNetwork:
    """Apply `steps` bare updates with no drop-out.

    The observer sees the initial state and the state after every step.
    """
    if observer is not None:
        observer(net)
    for _ in range(steps):
        net = step(net, mode, cfg)
        if observer is not None:
            observer(net)
    return net
