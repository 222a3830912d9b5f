"""Profit-threshold robustness of a solution across scenario paths."""

from __future__ import annotations

from dataclasses import dataclass

from msmo.errors import ShapeMismatchError
from msmo.model import ObjectiveMatrix


def profit(remained, withdrawals, initial_capital):
    """Money left invested plus everything withdrawn, minus the capital put in.

    ``withdrawals`` may be a single total or a sequence of per-stage amounts.
    """
    total = withdrawals if isinstance(withdrawals, (int, float)) else sum(withdrawals)
    return remained + total - initial_capital


@dataclass(frozen=True)
class PathProfit:
    path: tuple
    label: str
    remained_fund: float
    total_withdrawal: float
    profit: float


@dataclass(frozen=True)
class RobustnessReport:
    rows: tuple
    min_acceptable_profit: float
    robust: bool
    worst_path: tuple
    worst_profit: float

    def profits(self) -> list:
        return [r.profit for r in self.rows]

    def format(self) -> str:
        lines = [f"{'path':<6}{'states':<12}{'remained':>14}{'withdrawn':>14}{'profit':>14}"]
        for r in self.rows:
            lines.append(
                f"{r.label:<6}{','.join(r.path):<12}{r.remained_fund:14.0f}{r.total_withdrawal:14.0f}{r.profit:14.0f}"
            )
        verdict = "robust" if self.robust else "not robust"
        lines.append(
            f"threshold {self.min_acceptable_profit:.0f}: {verdict}; worst path "
            f"{','.join(self.worst_path)} with profit {self.worst_profit:.0f}"
        )
        return "\n".join(lines) + "\n"


def robustness_report(matrix: ObjectiveMatrix, threshold: float, capital: float) -> RobustnessReport:
    """Per-path profit of a (fund, cumulative withdrawal) matrix in money units."""
    if matrix.m != 2:
        raise ShapeMismatchError("expected exactly two objective rows (fund, withdrawals)")
    if not matrix.paths:
        raise ShapeMismatchError("matrix has no paths")
    rows = []
    for k, path in enumerate(matrix.paths):
        remained, withdrawn = float(matrix.values[0, k]), float(matrix.values[1, k])
        rows.append(PathProfit(path.states, f"s{k + 1}", remained, withdrawn, profit(remained, withdrawn, capital)))
    worst = min(rows, key=lambda r: r.profit)
    return RobustnessReport(
        rows=tuple(rows),
        min_acceptable_profit=float(threshold),
        robust=worst.profit >= threshold,
        worst_path=worst.path,
        worst_profit=worst.profit,
    )
