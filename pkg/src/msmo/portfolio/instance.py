"""Sequential portfolio instance data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from msmo.errors import InvalidInstanceError
from msmo.lattice import ScenarioTree, build_tree

MONEY_SCALE = 1_000_000  # LP coefficients are expressed in millions


@dataclass(frozen=True)
class PortfolioInstance:
    """Tables of the case study, stored as printed.

    ``growth_percent[state][i]`` is the growth of option i in that state and
    ``penalty_percent[state][i][j]`` the (non-positive, as printed) change when
    moving funds from option i to option j; column ``len(options)`` is the
    withdrawal column.  Goals are in millions, one ``{state: goal}`` dict per
    stage.  Money amounts are integral currency units.
    """

    options: tuple
    states: tuple
    transitions: dict
    root_state: str
    growth_percent: dict
    penalty_percent: dict
    initial_funds: tuple
    min_withdrawal: tuple
    fund_goals: tuple
    withdrawal_goals: tuple
    initial_capital: int
    max_withdrawal: Optional[int] = None
    enforce_max_withdrawal: bool = False
    stage_count: int = 3
    name: str = "portfolio"
    currency: str = "EUR"

    def __post_init__(self):
        self.validate()

    # -- derived tables ----------------------------------------------------
    @property
    def n_options(self) -> int:
        return len(self.options)

    def growth(self, state) -> np.ndarray:
        """Growth fractions per option (e.g. 0.16 for +16%)."""
        return np.array(self.growth_percent[state], dtype=float) / 100.0

    def loss(self, state) -> np.ndarray:
        """(n, n+1) loss fractions; column n is withdrawal."""
        return -np.array(self.penalty_percent[state], dtype=float) / 100.0

    def tree(self) -> ScenarioTree:
        return build_tree(
            self.stage_count,
            [list(self.states)] * (self.stage_count - 1),
            {s: list(t) for s, t in self.transitions.items()},
            self.root_state,
        )

    def fund_goal(self, stage: int, state) -> float:
        try:
            return float(self.fund_goals[stage][state])
        except (KeyError, IndexError):
            raise InvalidInstanceError(f"no fund goal for stage {stage}, state {state}") from None

    def withdrawal_goal(self, stage: int, state) -> float:
        try:
            return float(self.withdrawal_goals[stage][state])
        except (KeyError, IndexError):
            raise InvalidInstanceError(f"no withdrawal goal for stage {stage}, state {state}") from None

    def with_changes(self, **changes) -> "PortfolioInstance":
        from dataclasses import replace

        return replace(self, **changes)

    # -- validation --------------------------------------------------------
    def validate(self):
        n = len(self.options)
        if n == 0 or len(set(self.options)) != n:
            raise InvalidInstanceError("options must be non-empty and unique")
        if self.stage_count < 2:
            raise InvalidInstanceError("stage_count must be >= 2")
        if self.root_state not in self.states:
            raise InvalidInstanceError(f"root state {self.root_state!r} is not declared")
        for s in self.states:
            if s not in self.growth_percent:
                raise InvalidInstanceError(f"missing growth row for state {s}")
            if s not in self.penalty_percent:
                raise InvalidInstanceError(f"missing penalty table for state {s}")
            g = np.array(self.growth_percent[s], dtype=float)
            if g.shape != (n,) or np.any(g <= -100.0) or not np.all(np.isfinite(g)):
                raise InvalidInstanceError(f"growth for {s} must be {n} values above -100%")
            p = np.array(self.penalty_percent[s], dtype=float)
            if p.shape != (n, n + 1):
                raise InvalidInstanceError(f"penalty table for {s} must be {n}x{n + 1}")
            loss = -p / 100.0
            if np.any(loss < 0) or np.any(loss >= 1):
                raise InvalidInstanceError(f"penalty fractions for {s} must lie in [0, 1)")
            if np.any(np.diag(loss[:, :n]) != 0):
                raise InvalidInstanceError(f"diagonal penalties for {s} must be 0")
        if len(self.initial_funds) != n or any(f < 0 for f in self.initial_funds):
            raise InvalidInstanceError(f"initial_funds needs {n} nonnegative amounts")
        if sum(self.initial_funds) != self.initial_capital:
            raise InvalidInstanceError(
                f"initial funds sum to {sum(self.initial_funds)}, capital is {self.initial_capital}"
            )
        if len(self.min_withdrawal) != self.stage_count or any(w < 0 for w in self.min_withdrawal):
            raise InvalidInstanceError(f"min_withdrawal needs {self.stage_count} nonnegative amounts")
        if self.enforce_max_withdrawal:
            if self.max_withdrawal is None:
                raise InvalidInstanceError("enforce_max_withdrawal set without max_withdrawal")
            if any(self.max_withdrawal < w for w in self.min_withdrawal):
                raise InvalidInstanceError("max_withdrawal is below a minimum withdrawal")
        if len(self.fund_goals) != self.stage_count or len(self.withdrawal_goals) != self.stage_count:
            raise InvalidInstanceError(f"goals need one table per stage ({self.stage_count})")
        for table in (*self.fund_goals, *self.withdrawal_goals):
            for s in table:
                if s not in self.states:
                    raise InvalidInstanceError(f"goal for undeclared state {s!r}")
        for src, dsts in self.transitions.items():
            if src not in self.states or any(d not in self.states for d in dsts):
                raise InvalidInstanceError(f"transition {src!r} -> {dsts!r} uses undeclared states")


# Case-study data; the initial funds are our own default.
TRANSITIONS = {
    "S1": ("S1", "S2"),
    "S2": ("S1", "S2", "S3"),
    "S3": ("S2", "S3", "S4"),
    "S4": ("S3", "S4", "S5"),
    "S5": ("S4", "S5"),
}

GROWTH_PERCENT = {
    "S1": (-20, -2, 8, 4, -15),
    "S2": (4, 8, 8.5, 7, 6),
    "S3": (16, 11.5, 9, 12, 15),
    "S4": (20, 20, 9.5, 16, 20),
    "S5": (50, 30, 10, 20, 35),
}

PENALTY_PERCENT = {
    "S1": (
        (0, -2.5, -3, -3, -2, -3),
        (-0.05, 0, -1, -0.1, -0.1, -0.3),
        (-0.01, -0.1, 0, -0.01, -0.01, -0.1),
        (-0.01, -0.01, -0.8, 0, -0.01, -0.2),
        (-0.1, -2.5, -3, -3, 0, -2.5),
    ),
    "S2": (
        (0, -1, -1.2, -1.0, -0.7, -2),
        (-0.5, 0, -1.0, -0.5, -0.3, -0.4),
        (-0.7, -0.2, 0, -0.01, -0.2, -0.3),
        (-0.5, -1, -1.5, 0, -0.1, -0.4),
        (-0.2, -1, -1.5, -0.1, 0, -1.5),
    ),
    "S3": (
        (0, -0.4, -0.5, -0.3, -1.0, -1.0),
        (-1.1, 0, -0.2, -0.01, -1.1, -1.2),
        (-1.2, -1, 0, -0.3, -1.0, -2),
        (-1.1, -1.5, -0.7, 0, -1.0, -2),
        (-0.8, -0.3, -0.3, -0.2, 0, -0.8),
    ),
    "S4": (
        (0, -0.01, -0.01, -0.01, -0.5, -0.1),
        (-2, 0, -0.1, -0.1, -2, -1.5),
        (-3, -2.5, 0, -0.7, -3, -2.5),
        (-3, -2, -0.1, 0, -3, -2.5),
        (-5, -0.01, -0.01, -0.01, 0, -0.1),
    ),
    "S5": (
        (0, -0.01, -0.01, -0.01, -1.5, -0.2),
        (-1.5, 0, -0.05, -0.1, -2.5, -1.5),
        (-3, -2.5, 0, -1, -3, -2.5),
        (-2.5, -2, -0.1, 0, -3, -2.5),
        (-0.01, -0.01, -0.01, -0.01, 0, -0.1),
    ),
}

FUND_GOALS = (
    {"S3": 5.5},
    {"S2": 6.5, "S3": 7, "S4": 7.5},
    {"S1": 7, "S2": 7.5, "S3": 8, "S4": 9, "S5": 11},
)

WITHDRAWAL_GOALS = (
    {"S3": 0.75},
    {"S2": 0.5, "S3": 0.75, "S4": 1},
    {"S1": 0.5, "S2": 0.5, "S3": 0.75, "S4": 1, "S5": 1.5},
)


def default_instance(**overrides) -> PortfolioInstance:
    """The case-study instance with 1 000 000 placed in each option."""
    data = dict(
        options=("I1", "I2", "I3", "I4", "I5"),
        states=("S1", "S2", "S3", "S4", "S5"),
        transitions=dict(TRANSITIONS),
        root_state="S3",
        growth_percent=dict(GROWTH_PERCENT),
        penalty_percent=dict(PENALTY_PERCENT),
        initial_funds=(1_000_000,) * 5,
        min_withdrawal=(250_000,) * 3,
        fund_goals=FUND_GOALS,
        withdrawal_goals=WITHDRAWAL_GOALS,
        initial_capital=5_000_000,
        max_withdrawal=1_500_000,
        enforce_max_withdrawal=False,
        stage_count=3,
        name="sequential-portfolio",
        currency="EUR",
    )
    data.update(overrides)
    return PortfolioInstance(**data)
