"""Data-quality checks that need no external benchmark.

Three views: raw report volume per interview, hold-one-out size
recovery for each probe population, and the sensitivity of the degree
estimate to dropping each probe population.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import DegenerateVisibilityError, EmptyCellError
from .groups import GroupId, GroupScheme
from .surveydata import KnownPopulationTable, RespondentRecord


@dataclass(frozen=True)
class InterviewYield:
    """Unweighted death reports per interview, incomplete ones included."""

    death_reports: int
    interviews: int

    @property
    def per_interview(self) -> float:
        return self.death_reports / self.interviews


def deaths_per_interview(records: Sequence[RespondentRecord]) -> InterviewYield:
    """How many deaths an average interview surfaced.

    Counts every reported death, complete or not: the point is raw
    data yield, not estimation input.
    """
    if not records:
        raise EmptyCellError(None, "no interviews")
    return InterviewYield(
        death_reports=sum(len(r.death_reports) for r in records),
        interviews=len(records),
    )


def _kp_matrix(
    records: Sequence[RespondentRecord], kp_table: KnownPopulationTable
) -> np.ndarray:
    names = kp_table.names
    out = np.zeros((len(records), len(names)))
    for i, rec in enumerate(records):
        for j, name in enumerate(names):
            v = rec.kp_connections.get(name)
            if v:
                out[i, j] = v
    return out


@dataclass(frozen=True)
class HoldoutCheck:
    """Predicted vs known size for one held-out probe population."""

    name: str
    predicted_size: float
    known_size: float

    @property
    def ratio(self) -> float:
        return self.predicted_size / self.known_size


def internal_consistency_holdout(
    records: Sequence[RespondentRecord],
    kp_table: KnownPopulationTable,
    frame_size: float | None = None,
) -> list[HoldoutCheck]:
    """Predict each probe population's size from the others.

    For each population: estimate the frame's average degree from the
    remaining populations, then scale the held-out population's report
    total into a size estimate. If reporting were proportional to
    size everywhere, every prediction would be exact. The frame size
    enters both steps and cancels, so the ``frame_size`` argument only
    matters as a guard against a zero weight sum.
    """
    if not records:
        raise EmptyCellError(None, "no interviews")
    weights = np.array([r.weight for r in records], dtype=float)
    if frame_size is None:
        frame_size = float(weights.sum())
    if frame_size <= 0:
        raise ValueError("frame size must be positive")
    matrix = _kp_matrix(records, kp_table)
    weighted_totals = weights @ matrix  # report total per population
    grand_total = float(weighted_totals.sum())
    checks = []
    for j, name in enumerate(kp_table.names):
        size_j = kp_table.sizes[name]
        rest_total = grand_total - float(weighted_totals[j])
        rest_size = kp_table.total - size_j
        if rest_total <= 0:
            raise DegenerateVisibilityError(
                None,
                f"no connections reported to any population besides {name!r}",
            )
        predicted = float(weighted_totals[j]) * rest_size / rest_total
        checks.append(
            HoldoutCheck(name=name, predicted_size=predicted, known_size=size_j)
        )
    return checks


@dataclass
class LeaveOneOutDegrees:
    """Average-degree estimates per cell, with each probe dropped in turn.

    ``baseline[cell]`` uses every population; ``dropped[name][cell]``
    omits one. ``to_frame()`` lays it out as one row per cell with a
    column per held-out population.
    """

    baseline: dict[GroupId, float]
    dropped: dict[str, dict[GroupId, float]]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for g, value in self.baseline.items():
            row: dict = {
                "group": g.label,
                "all_populations": value,
            }
            for name, degrees in self.dropped.items():
                row[f"without_{name}"] = degrees.get(g, float("nan"))
            rows.append(row)
        return pd.DataFrame(rows)


def loo_degree(
    records: Sequence[RespondentRecord],
    kp_table: KnownPopulationTable,
    scheme: GroupScheme,
    frame_size: float | None = None,
) -> LeaveOneOutDegrees:
    """Recompute each cell's average degree dropping one probe at a time.

    A population nobody reported contributes nothing to the numerator,
    so dropping it scales the estimate up by the ratio of combined
    sizes; large jumps flag populations whose reports are out of line
    with their size.
    """
    weights = np.array([r.weight for r in records], dtype=float)
    if frame_size is None:
        frame_size = float(weights.sum())
    matrix = _kp_matrix(records, kp_table)
    groups = scheme.groups
    member_w = {}
    cell_totals = {}
    for g in groups:
        mask = np.array(
            [g.contains(r.age, r.sex) for r in records], dtype=bool
        )
        if not mask.any():
            continue
        member_w[g] = float(weights[mask].sum())
        cell_totals[g] = weights[mask] @ matrix[mask]

    def degree(g: GroupId, totals: np.ndarray, combined_size: float) -> float:
        return (float(totals.sum()) / combined_size) * (
            frame_size / member_w[g]
        )

    names = kp_table.names
    baseline = {
        g: degree(g, cell_totals[g], kp_table.total) for g in cell_totals
    }
    dropped: dict[str, dict[GroupId, float]] = {}
    for j, name in enumerate(names):
        keep = [k for k in range(len(names)) if k != j]
        rest_size = kp_table.total - kp_table.sizes[name]
        dropped[name] = {
            g: degree(g, cell_totals[g][keep], rest_size) for g in cell_totals
        }
    return LeaveOneOutDegrees(baseline=baseline, dropped=dropped)
