"""Survey records and the cleaning steps that prepare them.

The ingestion target is a pair of CSV files in the layout produced by
a typical household-survey extract:

``respondents.csv``
    one row per interview: ``respondent_id, stratum_id, psu_id,
    weight, age, sex, tie_definition`` plus one ``kp_<name>`` column
    per known population holding the reported connection count.

``deaths.csv``
    one row per reported death: ``respondent_id, death_age,
    death_sex``. Blank age or sex marks the report incomplete; such
    reports stay attached to the respondent (they count in interview
    diagnostics) but are excluded from estimation totals.

``known_populations.csv``
    ``name, size`` rows giving each probe population and its known
    size.

All cleaning operations are pure: they return new record lists and
leave their inputs untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import pandas as pd

from .errors import SchemaError, ValidationError
from .groups import FEMALE, MALE, GroupScheme

_SEX_ALIASES = {
    "f": FEMALE,
    "female": FEMALE,
    "m": MALE,
    "male": MALE,
}

KP_COLUMN_PREFIX = "kp_"


def normalize_sex(value) -> str:
    code = str(value).strip().lower()
    try:
        return _SEX_ALIASES[code]
    except KeyError:
        raise ValidationError(f"unrecognized sex code: {value!r}") from None


@dataclass(frozen=True)
class DeathReport:
    """One death a respondent reported from their personal network."""

    death_age: int | None
    death_sex: str | None
    tie_definition: str = ""

    @property
    def incomplete(self) -> bool:
        """True when age or sex is missing; incomplete reports never
        enter estimation totals but are tallied in diagnostics."""
        return self.death_age is None or self.death_sex is None


@dataclass(frozen=True)
class RespondentRecord:
    """One interview: design identifiers, demographics, and reports."""

    respondent_id: str
    stratum_id: str
    psu_id: str
    weight: float
    age: int
    sex: str
    tie_definition: str = ""
    kp_connections: Mapping[str, int] = field(default_factory=dict)
    death_reports: tuple[DeathReport, ...] = ()

    def kp_total(self, names: Iterable[str]) -> float:
        """Sum of reported connections over the given populations."""
        return float(sum(self.kp_connections.get(n, 0) for n in names))


@dataclass(frozen=True)
class KnownPopulationTable:
    """Probe populations and their known sizes."""

    sizes: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "sizes", dict(self.sizes))
        for name, size in self.sizes.items():
            if size <= 0:
                raise ValidationError(
                    f"known population {name!r} has non-positive size {size}"
                )

    @property
    def names(self) -> list[str]:
        return list(self.sizes)

    @property
    def total(self) -> float:
        """Combined size of all probe populations."""
        return float(sum(self.sizes.values()))

    def without(self, name: str) -> "KnownPopulationTable":
        if name not in self.sizes:
            raise KeyError(name)
        return KnownPopulationTable(
            {k: v for k, v in self.sizes.items() if k != name}
        )


@dataclass(frozen=True)
class FrameTotals:
    """Size of the survey frame and where that number came from."""

    frame_size: float
    source: str  # "config" or "estimated_from_weights"

    def __post_init__(self):
        if self.frame_size <= 0:
            raise ValidationError(
                f"frame size must be positive, got {self.frame_size}"
            )


def frame_totals_from_weights(records: Sequence[RespondentRecord]) -> FrameTotals:
    """Default frame size: the sum of the (de-normalized) weights."""
    total = float(sum(r.weight for r in records))
    return FrameTotals(total, source="estimated_from_weights")


@dataclass
class LoadResult:
    """Validated records plus ingestion bookkeeping."""

    records: list[RespondentRecord]
    rows_read: int
    death_reports: int
    incomplete_death_reports: int


def _require_columns(frame: pd.DataFrame, needed: Sequence[str], path: str):
    for column in needed:
        if column not in frame.columns:
            raise SchemaError(f"{path}: missing required column {column!r}")


def load_known_populations(path) -> KnownPopulationTable:
    """Read the ``name, size`` table of probe populations."""
    table = pd.read_csv(path)
    _require_columns(table, ["name", "size"], str(path))
    sizes: dict[str, float] = {}
    for row in table.itertuples(index=False):
        name = str(row.name).strip()
        if name in sizes:
            raise ValidationError(f"duplicate known population {name!r}")
        sizes[name] = float(row.size)
    return KnownPopulationTable(sizes)


def load_respondents(respondents_path, deaths_path=None) -> LoadResult:
    """Read and validate the respondent and death-report files.

    Raises
    ------
    SchemaError
        when a required column is absent.
    ValidationError
        when a row fails validation (non-positive weight, unknown sex
        code, death report pointing at an unknown respondent).
    """
    table = pd.read_csv(respondents_path, dtype={"respondent_id": str})
    _require_columns(
        table,
        ["respondent_id", "stratum_id", "psu_id", "weight", "age", "sex"],
        str(respondents_path),
    )
    kp_columns = [c for c in table.columns if c.startswith(KP_COLUMN_PREFIX)]

    bad_weights = table[~(table["weight"] > 0)]
    if len(bad_weights):
        ids = ", ".join(str(i) for i in bad_weights["respondent_id"].head(5))
        raise ValidationError(
            f"{len(bad_weights)} respondent(s) with non-positive weight "
            f"(first ids: {ids})"
        )
    if table["respondent_id"].duplicated().any():
        dupes = table.loc[table["respondent_id"].duplicated(), "respondent_id"]
        raise ValidationError(f"duplicate respondent_id {dupes.iloc[0]!r}")

    reports_by_respondent: dict[str, list[DeathReport]] = {}
    death_rows = 0
    incomplete = 0
    if deaths_path is not None:
        deaths = pd.read_csv(deaths_path, dtype={"respondent_id": str})
        _require_columns(
            deaths, ["respondent_id", "death_age", "death_sex"], str(deaths_path)
        )
        known_ids = set(table["respondent_id"])
        tie_by_id = (
            dict(zip(table["respondent_id"], table["tie_definition"].astype(str)))
            if "tie_definition" in table.columns
            else {}
        )
        for row in deaths.itertuples(index=False):
            rid = str(row.respondent_id)
            if rid not in known_ids:
                raise ValidationError(
                    f"death report for unknown respondent {rid!r}"
                )
            age = None if pd.isna(row.death_age) else int(row.death_age)
            sex = (
                None
                if pd.isna(row.death_sex) or str(row.death_sex).strip() == ""
                else normalize_sex(row.death_sex)
            )
            report = DeathReport(age, sex, tie_by_id.get(rid, ""))
            incomplete += report.incomplete
            death_rows += 1
            reports_by_respondent.setdefault(rid, []).append(report)

    records = []
    for row in table.itertuples(index=False):
        rid = str(row.respondent_id)
        kp = {
            c[len(KP_COLUMN_PREFIX):]: int(getattr(row, c))
            for c in kp_columns
            if not pd.isna(getattr(row, c))
        }
        if any(v < 0 for v in kp.values()):
            raise ValidationError(f"negative connection count for {rid!r}")
        records.append(
            RespondentRecord(
                respondent_id=rid,
                stratum_id=str(row.stratum_id),
                psu_id=str(row.psu_id),
                weight=float(row.weight),
                age=int(row.age),
                sex=normalize_sex(row.sex),
                tie_definition=(
                    str(row.tie_definition)
                    if "tie_definition" in table.columns
                    else ""
                ),
                kp_connections=kp,
                death_reports=tuple(reports_by_respondent.get(rid, ())),
            )
        )
    return LoadResult(
        records=records,
        rows_read=len(records),
        death_reports=death_rows,
        incomplete_death_reports=incomplete,
    )


@dataclass
class TopcodeResult:
    records: list[RespondentRecord]
    affected_entries: int


def topcode_kp_reports(
    records: Sequence[RespondentRecord], cap: int = 30
) -> TopcodeResult:
    """Cap each known-population connection count at ``cap``.

    Large reported counts are implausible recall artifacts; the
    conventional cap is 30. Returns new records and the number of
    entries that were reduced.
    """
    if cap <= 0:
        raise ValueError(f"topcode cap must be positive, got {cap}")
    out = []
    affected = 0
    for rec in records:
        over = {k: v for k, v in rec.kp_connections.items() if v > cap}
        if over:
            affected += len(over)
            capped = dict(rec.kp_connections)
            for k in over:
                capped[k] = cap
            rec = replace(rec, kp_connections=capped)
        out.append(rec)
    return TopcodeResult(out, affected)


def denormalize_weights(
    records: Sequence[RespondentRecord], target_frame_size: float
) -> list[RespondentRecord]:
    """Rescale weights so they sum to the frame population size.

    Survey files often ship weights normalized to mean 1; estimation
    needs weights on the population scale.
    """
    if target_frame_size <= 0:
        raise ValueError(
            f"target frame size must be positive, got {target_frame_size}"
        )
    current = sum(r.weight for r in records)
    if current <= 0 or math.isnan(current):
        raise ValidationError("cannot rescale: weights sum to zero")
    factor = target_frame_size / current
    return [replace(r, weight=r.weight * factor) for r in records]


@dataclass
class TruncationResult:
    records: list[RespondentRecord]
    excluded: int


def truncate_frame(
    records: Sequence[RespondentRecord],
    age_ranges: Mapping[str, tuple[int, int]],
) -> TruncationResult:
    """Drop respondents outside the per-sex eligible age ranges.

    ``age_ranges`` maps sex to a half-open [lo, hi) interval, e.g.
    ``{"female": (15, 50), "male": (15, 60)}`` for the usual survey
    eligibility rule. Sexes not in the mapping are kept as-is.
    """
    kept = []
    excluded = 0
    for rec in records:
        span = age_ranges.get(rec.sex)
        if span is not None and not (span[0] <= rec.age < span[1]):
            excluded += 1
            continue
        kept.append(rec)
    return TruncationResult(kept, excluded)


def filter_tie_definition(
    records: Sequence[RespondentRecord], label: str
) -> list[RespondentRecord]:
    """Keep only interviews conducted under one tie definition."""
    return [r for r in records if r.tie_definition == label]


def scheme_from_breaks(age_breaks: Sequence[int], **kwargs) -> GroupScheme:
    """Convenience constructor mirroring the JSON config layout."""
    return GroupScheme(tuple(int(b) for b in age_breaks), **kwargs)
