"""Sibling-history death rates, the survey-standard comparator.

Respondents list their siblings with birth month, survival status and
death month (century-month codes, months since January 1900). Each
sibling contributes person-months of exposure to the age-sex cells
they pass through during the reference window before the interview,
and a death event if they died inside it. Rates are weighted deaths
over weighted exposure; the respondent reports on siblings only and
never counts themself.

Date conventions, at month resolution: a sibling is exposed from
their birth month up to (not including) their death month, and the
death event itself is placed mid-month for age assignment. A sibling
who died exactly six months into a twelve-month window therefore
contributes 0.5 person-years, and their death age is the age they
reached halfway through the death month.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import EmptyCellError, SchemaError, ValidationError
from .groups import GroupId, GroupScheme, assign_group
from .surveydata import normalize_sex

DEFAULT_WINDOW_MONTHS = 84


@dataclass(frozen=True)
class SiblingRecord:
    """One sibling listed in one interview."""

    respondent_id: str
    respondent_weight: float
    stratum_id: str
    psu_id: str
    sibling_index: int
    sex: str
    birth_cmc: int
    alive: bool
    death_cmc: int | None
    interview_cmc: int


def load_siblings(path) -> list[SiblingRecord]:
    """Read the sibling roster CSV.

    Columns: respondent_id, respondent_weight, stratum_id, psu_id,
    sibling_index, sex, birth_cmc, alive_flag, death_cmc (blank when
    alive), interview_cmc.
    """
    table = pd.read_csv(path, dtype={"respondent_id": str})
    needed = [
        "respondent_id", "respondent_weight", "stratum_id", "psu_id",
        "sibling_index", "sex", "birth_cmc", "alive_flag",
        "death_cmc", "interview_cmc",
    ]
    for column in needed:
        if column not in table.columns:
            raise SchemaError(f"{path}: missing required column {column!r}")
    records = []
    for row in table.itertuples(index=False):
        alive = bool(int(row.alive_flag))
        death = None if pd.isna(row.death_cmc) else int(row.death_cmc)
        if alive and death is not None:
            raise ValidationError(
                f"sibling {row.respondent_id}/{row.sibling_index} is "
                "flagged alive but has a death month"
            )
        if not alive and death is None:
            raise ValidationError(
                f"sibling {row.respondent_id}/{row.sibling_index} is "
                "flagged dead but has no death month"
            )
        if row.respondent_weight <= 0:
            raise ValidationError(
                f"non-positive weight for respondent {row.respondent_id}"
            )
        records.append(
            SiblingRecord(
                respondent_id=str(row.respondent_id),
                respondent_weight=float(row.respondent_weight),
                stratum_id=str(row.stratum_id),
                psu_id=str(row.psu_id),
                sibling_index=int(row.sibling_index),
                sex=normalize_sex(row.sex),
                birth_cmc=int(row.birth_cmc),
                alive=alive,
                death_cmc=death,
                interview_cmc=int(row.interview_cmc),
            )
        )
    return records


@dataclass
class SiblingContribution:
    """One respondent's sibling exposure and deaths by cell."""

    respondent_id: str
    stratum_id: str
    psu_id: str
    weight: float
    exposure: dict[GroupId, float] = field(default_factory=dict)
    deaths: dict[GroupId, float] = field(default_factory=dict)

    def total_exposure(self) -> float:
        return sum(self.exposure.values())


def _expand_one(
    sib: SiblingRecord,
    scheme: GroupScheme,
    window_months: int,
    exposure: dict[GroupId, float],
    deaths: dict[GroupId, float],
):
    window_start = sib.interview_cmc - window_months
    window_end = sib.interview_cmc
    alive_until = window_end if sib.alive else sib.death_cmc
    t0 = max(sib.birth_cmc, window_start)
    t1 = min(alive_until, window_end)
    if t1 > t0:
        # split the exposed span at the months where the sibling
        # crosses an age-bin boundary
        cuts = [t0]
        for edge in scheme.age_breaks:
            boundary = sib.birth_cmc + 12 * edge
            if t0 < boundary < t1:
                cuts.append(boundary)
        cuts.append(t1)
        for s0, s1 in zip(cuts, cuts[1:]):
            age_years = (s0 - sib.birth_cmc) / 12.0
            cell = assign_group(age_years, sib.sex, scheme)
            if cell is not None:
                exposure[cell] = exposure.get(cell, 0.0) + (s1 - s0) / 12.0
    if not sib.alive and window_start <= sib.death_cmc < window_end:
        age_at_death = (sib.death_cmc + 0.5 - sib.birth_cmc) / 12.0
        cell = assign_group(age_at_death, sib.sex, scheme)
        if cell is not None:
            deaths[cell] = deaths.get(cell, 0.0) + 1.0


def expand_sibling_histories(
    siblings: Sequence[SiblingRecord],
    scheme: GroupScheme,
    window_months: int = DEFAULT_WINDOW_MONTHS,
) -> list[SiblingContribution]:
    """Turn sibling rosters into per-respondent exposure and deaths.

    Exposure lands only in cells the scheme defines; months lived at
    ages outside the age breaks are dropped, so a sibling's total
    credited exposure can be less than their time in the window.
    """
    if window_months <= 0:
        raise ValueError(f"window must be positive, got {window_months}")
    by_respondent: dict[str, SiblingContribution] = {}
    for sib in siblings:
        contrib = by_respondent.get(sib.respondent_id)
        if contrib is None:
            contrib = SiblingContribution(
                respondent_id=sib.respondent_id,
                stratum_id=sib.stratum_id,
                psu_id=sib.psu_id,
                weight=sib.respondent_weight,
            )
            by_respondent[sib.respondent_id] = contrib
        _expand_one(sib, scheme, window_months, contrib.exposure, contrib.deaths)
    return list(by_respondent.values())


@dataclass(frozen=True)
class SiblingRateEstimate:
    group: GroupId
    deaths: float
    exposure: float
    rate: float


@dataclass
class SiblingRateTable:
    estimates: dict[GroupId, SiblingRateEstimate] = field(default_factory=dict)
    failures: dict[GroupId, Exception] = field(default_factory=dict)

    def rates(self) -> dict[GroupId, float]:
        return {g: e.rate for g, e in self.estimates.items()}

    def __iter__(self):
        return iter(self.estimates.values())


class SiblingRateEstimator:
    """Weighted sibling death rates as a bootstrap-compatible callable.

    Mirrors the network estimator's calling convention: evaluate on
    the contribution list with an optional replacement weight vector
    aligned to it, returning ``{cell: rate}``.
    """

    def __init__(self, scheme: GroupScheme):
        self.scheme = scheme
        self._cache_key = None
        self._arrays = None

    def _prepare(self, contributions: Sequence[SiblingContribution]):
        key = (id(contributions), len(contributions))
        if self._cache_key == key:
            return self._arrays
        groups = self.scheme.groups
        n = len(contributions)
        base_w = np.array([c.weight for c in contributions], dtype=float)
        exposure = {g: np.zeros(n) for g in groups}
        deaths = {g: np.zeros(n) for g in groups}
        for i, c in enumerate(contributions):
            for g, v in c.exposure.items():
                if g in exposure:
                    exposure[g][i] = v
            for g, v in c.deaths.items():
                if g in deaths:
                    deaths[g][i] = v
        self._arrays = {
            "groups": groups, "base_w": base_w,
            "exposure": exposure, "deaths": deaths,
        }
        self._cache_key = key
        return self._arrays

    def table(
        self, contributions: Sequence[SiblingContribution], weights=None
    ) -> SiblingRateTable:
        arrays = self._prepare(contributions)
        if weights is None:
            w = arrays["base_w"]
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != arrays["base_w"].shape:
                raise ValueError("weights do not align with contributions")
        out = SiblingRateTable()
        for g in arrays["groups"]:
            exp = float(np.sum(arrays["exposure"][g] * w))
            if exp <= 0:
                out.failures[g] = EmptyCellError(
                    g, f"no sibling exposure in cell {g}"
                )
                continue
            dead = float(np.sum(arrays["deaths"][g] * w))
            out.estimates[g] = SiblingRateEstimate(
                group=g, deaths=dead, exposure=exp, rate=dead / exp
            )
        return out

    def __call__(self, contributions, weights=None) -> dict[GroupId, float]:
        return self.table(contributions, weights).rates()


def sibling_survival_rate(
    siblings: Sequence[SiblingRecord],
    scheme: GroupScheme,
    window_months: int = DEFAULT_WINDOW_MONTHS,
) -> SiblingRateTable:
    """Expand rosters and estimate death rates in one step."""
    contributions = expand_sibling_histories(siblings, scheme, window_months)
    return SiblingRateEstimator(scheme).table(contributions)
