"""Death-rate estimators built from network reports.

The chain has three weighted ingredients, all Horvitz-Thompson style
totals over the respondent sample:

* the total number of deaths respondents report in a cell,
* the average number of frame connections per cell member, estimated
  from reported connections to probe populations of known size,
* the cell's population, estimated by summing weights over the
  respondents who belong to it.

Dividing reported deaths by average visibility gives a death count;
dividing again by the cell population gives the death rate. The whole
chain collapses to a ratio of two weighted report totals times a known
constant, which is why rescaling all weights by one factor (with the
frame size held fixed) leaves the rates untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateVisibilityError, EmptyCellError
from .groups import GroupId, GroupScheme, assign_group
from .surveydata import (
    FrameTotals,
    KnownPopulationTable,
    RespondentRecord,
    filter_tie_definition,
)

__all__ = [
    "DegreeEstimate",
    "DeathRateEstimate",
    "RateTable",
    "RateEstimator",
    "ht_death_reports",
    "kp_average_degree",
    "estimate_deaths",
    "estimate_exposure",
    "network_survival_rate",
    "network_survival_rate_general",
]


def _weights_vector(
    records: Sequence[RespondentRecord], weights=None
) -> np.ndarray:
    if weights is None:
        return np.array([r.weight for r in records], dtype=float)
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(records),):
        raise ValueError(
            f"weights shape {w.shape} does not match {len(records)} records"
        )
    return w


def _member_indices(
    records: Sequence[RespondentRecord], group: GroupId
) -> np.ndarray:
    return np.array(
        [i for i, r in enumerate(records) if group.contains(r.age, r.sex)],
        dtype=np.intp,
    )


def _death_report_counts(
    records: Sequence[RespondentRecord], group: GroupId
) -> np.ndarray:
    """Complete reported deaths falling in ``group``, per respondent.

    Attribution uses the decedent's reported age and sex; reports with
    either missing are never counted.
    """
    counts = np.zeros(len(records))
    for i, rec in enumerate(records):
        for rep in rec.death_reports:
            if not rep.incomplete and group.contains(rep.death_age, rep.death_sex):
                counts[i] += 1.0
    return counts


def ht_death_reports(
    records: Sequence[RespondentRecord], group: GroupId, weights=None
) -> float:
    """Weighted total of deaths reported in a cell.

    Every respondent contributes, whatever their own cell: the report
    total estimates how many times the frame population as a whole
    would mention a death in ``group``.
    """
    w = _weights_vector(records, weights)
    return float(np.sum(_death_report_counts(records, group) * w))


@dataclass(frozen=True)
class DegreeEstimate:
    """Average frame connections per member of one cell."""

    group: GroupId
    avg_degree: float
    report_total: float  # weighted connections to all probe populations
    frame_size_used: float
    group_frame_size_used: float


def kp_average_degree(
    records: Sequence[RespondentRecord],
    group: GroupId,
    kp_table: KnownPopulationTable,
    frame_size: float | None = None,
    group_frame_size: float | None = None,
    weights=None,
) -> DegreeEstimate:
    """Estimate a cell's average personal-network size within the frame.

    Connections reported to the probe populations, divided by the
    combined probe size, give the fraction of the frame each cell
    member reaches; scaling by the frame-to-cell population ratio
    turns that into an average connection count. Both population sizes
    default to weight sums.

    Raises
    ------
    EmptyCellError
        no respondents belong to the cell.
    DegenerateVisibilityError
        cell members reported zero probe connections in total.
    """
    w = _weights_vector(records, weights)
    idx = _member_indices(records, group)
    if idx.size == 0:
        raise EmptyCellError(group)
    kp_totals = np.array(
        [r.kp_total(kp_table.names) for r in records], dtype=float
    )
    report_total = float(np.sum(kp_totals[idx] * w[idx]))
    cell_size = (
        float(np.sum(w[idx])) if group_frame_size is None else float(group_frame_size)
    )
    frame = float(np.sum(w)) if frame_size is None else float(frame_size)
    if report_total <= 0:
        raise DegenerateVisibilityError(group)
    avg = (report_total / kp_table.total) * (frame / cell_size)
    return DegreeEstimate(
        group=group,
        avg_degree=avg,
        report_total=report_total,
        frame_size_used=frame,
        group_frame_size_used=cell_size,
    )


def estimate_deaths(report_total: float, degree) -> float:
    """Deaths in a cell: reported deaths deflated by average visibility.

    ``degree`` may be a :class:`DegreeEstimate` or a plain average.
    """
    if isinstance(degree, DegreeEstimate):
        value, group = degree.avg_degree, degree.group
    else:
        value, group = float(degree), None
    if value <= 0:
        raise DegenerateVisibilityError(group)
    return report_total / value


def estimate_exposure(
    records: Sequence[RespondentRecord], group: GroupId, weights=None
) -> float:
    """Cell population (person-years of exposure): sum of member weights."""
    w = _weights_vector(records, weights)
    idx = _member_indices(records, group)
    if idx.size == 0:
        raise EmptyCellError(group)
    return float(np.sum(w[idx]))


def network_survival_rate_general(
    report_total: float, visibility: float, exposure: float
) -> float:
    """Death rate from any visibility estimate: reports / (visibility x exposure)."""
    if visibility <= 0:
        raise DegenerateVisibilityError(None, "visibility must be positive")
    if exposure <= 0:
        raise EmptyCellError(None, "exposure must be positive")
    return report_total / (visibility * exposure)


@dataclass(frozen=True)
class DeathRateEstimate:
    """All the pieces of one cell's death-rate estimate."""

    group: GroupId
    report_total: float
    degree: DegreeEstimate
    deaths: float
    exposure: float
    rate: float


@dataclass
class RateTable:
    """Per-cell estimates plus structured failures for cells that
    could not be estimated (no members, or zero probe connections).

    Failed cells never poison the others: they are absent from
    ``estimates`` and carried in ``failures`` keyed by cell.
    """

    estimates: dict[GroupId, DeathRateEstimate] = field(default_factory=dict)
    failures: dict[GroupId, Exception] = field(default_factory=dict)

    def rates(self) -> dict[GroupId, float]:
        return {g: e.rate for g, e in self.estimates.items()}

    def __iter__(self):
        return iter(self.estimates.values())

    def __getitem__(self, group: GroupId) -> DeathRateEstimate:
        if group in self.failures:
            raise self.failures[group]
        return self.estimates[group]


class RateEstimator:
    """Network-survival rates as a reusable callable.

    Builds its per-survey arrays once per record table, so repeated
    evaluation under different weight vectors (the bootstrap's access
    pattern) costs a handful of vector operations per call. Calling
    the instance returns ``{cell: rate}`` with failed cells simply
    absent, which is the shape the bootstrap wants; :meth:`table`
    returns the full result object.

    Records must already be filtered to a single tie definition when
    mixing definitions would matter; pass ``frame_totals`` to pin the
    frame size instead of deriving it from the weight sum.
    """

    def __init__(
        self,
        kp_table: KnownPopulationTable,
        scheme: GroupScheme,
        frame_totals: FrameTotals | None = None,
    ):
        self.kp_table = kp_table
        self.scheme = scheme
        self.frame_totals = frame_totals
        self._cache_key: tuple[int, int] | None = None
        self._arrays: dict | None = None

    def _prepare(self, records: Sequence[RespondentRecord]) -> dict:
        key = (id(records), len(records))
        if self._cache_key == key:
            return self._arrays
        groups = self.scheme.groups
        base_w = np.array([r.weight for r in records], dtype=float)
        kp_totals = np.array(
            [r.kp_total(self.kp_table.names) for r in records], dtype=float
        )
        members = {g: _member_indices(records, g) for g in groups}
        death_counts = {g: _death_report_counts(records, g) for g in groups}
        self._arrays = {
            "groups": groups,
            "base_w": base_w,
            "kp_totals": kp_totals,
            "members": members,
            "death_counts": death_counts,
        }
        self._cache_key = key
        return self._arrays

    def table(
        self, records: Sequence[RespondentRecord], weights=None
    ) -> RateTable:
        arrays = self._prepare(records)
        w = arrays["base_w"] if weights is None else _weights_vector(records, weights)
        frame = (
            float(np.sum(w))
            if self.frame_totals is None
            else float(self.frame_totals.frame_size)
        )
        out = RateTable()
        for group in arrays["groups"]:
            idx = arrays["members"][group]
            if idx.size == 0:
                out.failures[group] = EmptyCellError(group)
                continue
            kp_report_total = float(np.sum(arrays["kp_totals"][idx] * w[idx]))
            if kp_report_total <= 0:
                out.failures[group] = DegenerateVisibilityError(group)
                continue
            exposure = float(np.sum(w[idx]))
            avg = (kp_report_total / self.kp_table.total) * (frame / exposure)
            degree = DegreeEstimate(
                group=group,
                avg_degree=avg,
                report_total=kp_report_total,
                frame_size_used=frame,
                group_frame_size_used=exposure,
            )
            report_total = float(np.sum(arrays["death_counts"][group] * w))
            out.estimates[group] = DeathRateEstimate(
                group=group,
                report_total=report_total,
                degree=degree,
                deaths=report_total / avg,
                exposure=exposure,
                rate=report_total / (avg * exposure),
            )
        return out

    def __call__(
        self, records: Sequence[RespondentRecord], weights=None
    ) -> dict[GroupId, float]:
        return self.table(records, weights).rates()


def network_survival_rate(
    records: Sequence[RespondentRecord],
    kp_table: KnownPopulationTable,
    scheme: GroupScheme,
    frame_totals: FrameTotals | None = None,
    weights=None,
    tie_definition: str | None = None,
) -> RateTable:
    """Estimate death rates for every cell in the scheme.

    Convenience wrapper over :class:`RateEstimator`. When
    ``tie_definition`` is given the records are filtered first; an
    explicit ``weights`` vector cannot be combined with filtering
    because it would no longer align with the records.
    """
    if tie_definition is not None:
        if weights is not None:
            raise ValueError(
                "pass pre-filtered records when overriding weights"
            )
        records = filter_tie_definition(records, tie_definition)
    return RateEstimator(kp_table, scheme, frame_totals).table(records, weights)
