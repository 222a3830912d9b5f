"""Reported case-study results, kept for regression comparisons.

Amounts are in currency units as displayed (rounded to the nearest 10 or 100).
"""

from __future__ import annotations

import numpy as np

from msmo.lattice import ScenarioPath
from msmo.model import ObjectiveMatrix

PATHS = (
    ("S2", "S1"), ("S2", "S2"), ("S2", "S3"),
    ("S3", "S2"), ("S3", "S3"), ("S3", "S4"),
    ("S4", "S3"), ("S4", "S4"), ("S4", "S5"),
)

# remained fund, then withdrawals at stages 0, 1, 2
THREE_STAGE = (
    (3_697_200, 250_000, 250_020, 1_357_300),
    (4_127_600, 250_000, 250_020, 985_500),
    (4_791_900, 250_000, 250_020, 366_600),
    (4_521_000, 250_000, 250_150, 924_700),
    (4_944_700, 250_000, 250_150, 927_900),
    (5_352_800, 250_000, 250_150, 797_800),
    (5_123_500, 250_000, 500_000, 867_600),
    (5_583_700, 250_000, 500_000, 622_300),
    (7_507_800, 250_000, 500_000, 250_000),
)

MOVING_HORIZON = (
    (4_172_400, 250_000, 250_000, 250_000),
    (4_759_800, 250_000, 250_000, 289_930),
    (5_172_400, 250_000, 250_000, 250_000),
    (4_668_200, 250_000, 250_000, 782_250),
    (5_092_100, 250_000, 250_000, 761_110),
    (5_667_500, 250_000, 250_000, 500_000),
    (4_653_700, 250_000, 500_000, 1_177_800),
    (5_366_900, 250_000, 500_000, 677_300),
    (7_305_600, 250_000, 500_000, 250_000),
)

PROFITS = {
    "three-stage": (554_600, 613_200, 658_500, 945_800, 1_372_700, 1_650_700, 1_741_100, 1_956_000, 3_507_800),
    "moving-horizon": (-77_640, 549_710, 922_360, 950_500, 1_353_200, 1_667_500, 1_581_600, 1_794_200, 3_305_600),
}

INITIAL_DECISION = {
    "three-stage": (1_000_000, 1_000_000, 0, 0, 2_728_200),
    "moving-horizon": (1_000_000, 1_584_010, 0, 0, 2_144_190),
}

_TABLES = {"three-stage": THREE_STAGE, "moving-horizon": MOVING_HORIZON}


def published_rows(solution: str) -> tuple:
    try:
        return _TABLES[solution]
    except KeyError:
        raise KeyError(f"unknown solution {solution!r}; choose from {sorted(_TABLES)}") from None


def published_matrix(solution: str) -> ObjectiveMatrix:
    """(fund, cumulative withdrawal) matrix over the nine paths, in currency units."""
    rows = published_rows(solution)
    values = np.array([[r[0] for r in rows], [sum(r[1:]) for r in rows]], dtype=float)
    paths = tuple(ScenarioPath(p, k) for k, p in enumerate(PATHS))
    return ObjectiveMatrix(values, paths, ("max", "max"))
