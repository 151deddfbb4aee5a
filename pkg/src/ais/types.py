"""Type definitions for the immune-system toolkit.

Defines core type aliases for pattern arrays, matching matrices,
concentration vectors and report rows used throughout the codebase.
"""

from typing import Callable, TypeAlias

import numpy as np
from numpy.typing import NDArray

# Pattern payloads
BitArray: TypeAlias = NDArray[np.uint8]  # Bit-string payload, values in {0, 1}
RealArray: TypeAlias = NDArray[np.float64]  # Real-vector payload
BitMatrix: TypeAlias = NDArray[np.uint8]  # One bit-string per row

# Network state
Concentrations: TypeAlias = NDArray[np.float64]  # x_i per antibody
MatchingMatrix: TypeAlias = NDArray[np.float64]  # m_ij, antibody x antibody
AntigenMatching: TypeAlias = NDArray[np.float64]  # m_ji, antibody x antigen
RunLengthMatrix: TypeAlias = NDArray[np.int64]  # Longest agreeing runs

# Ratings
ItemId: TypeAlias = int
UserId: TypeAlias = int
Score: TypeAlias = int
ScorePair: TypeAlias = tuple[Score, Score]  # (u's vote, v's vote) for one item

# Reports
TrajectoryRow: TypeAlias = tuple[int, int, float]  # (iteration, source_id, x)
AlertRow: TypeAlias = tuple[int, int]  # (traffic_index, detector_id)

# Callbacks
Matcher: TypeAlias = Callable[[object, object], float]  # Pairwise matching m
