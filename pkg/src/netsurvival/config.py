"""Analysis configuration and the standard cleaning pipeline."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ConfigError
from .groups import FEMALE, MALE, GroupScheme
from .surveydata import (
    FrameTotals,
    KnownPopulationTable,
    RespondentRecord,
    denormalize_weights,
    filter_tie_definition,
    frame_totals_from_weights,
    topcode_kp_reports,
    truncate_frame,
)

DEFAULT_TOPCODE_CAP = 30


@dataclass(frozen=True)
class AnalysisConfig:
    """Estimation settings read from the JSON config file.

    ``frame_age_ranges`` holds the per-sex eligibility spans used to
    truncate the respondent file; a single span in the JSON applies to
    both sexes. ``frame_size`` overrides the frame total (weights are
    rescaled to it); left null, the weight sum is trusted.
    """

    age_breaks: tuple[int, ...]
    sexes: tuple[str, ...] = (FEMALE, MALE)
    frame_age_ranges: Mapping[str, tuple[int, int]] = field(default_factory=dict)
    topcode_cap: int = DEFAULT_TOPCODE_CAP
    frame_size: float | None = None
    tie_definition: str | None = None

    @property
    def scheme(self) -> GroupScheme:
        return GroupScheme(self.age_breaks, self.sexes)

    @classmethod
    def from_dict(cls, raw: Mapping) -> "AnalysisConfig":
        raw = dict(raw)
        try:
            breaks = tuple(int(b) for b in raw.pop("age_breaks"))
        except KeyError:
            raise ConfigError("config missing 'age_breaks'") from None
        sexes = tuple(raw.pop("sexes", (FEMALE, MALE)))
        span = raw.pop("frame_age_range", None)
        if span is None:
            ranges = {}
        elif isinstance(span, Mapping):
            ranges = {
                sex: (int(lo), int(hi)) for sex, (lo, hi) in span.items()
            }
        else:
            lo, hi = span
            ranges = {sex: (int(lo), int(hi)) for sex in sexes}
        frame_size = raw.pop("frame_size", None)
        config = cls(
            age_breaks=breaks,
            sexes=sexes,
            frame_age_ranges=ranges,
            topcode_cap=int(raw.pop("topcode_cap", DEFAULT_TOPCODE_CAP)),
            frame_size=None if frame_size is None else float(frame_size),
            tie_definition=raw.pop("tie_definition", None),
        )
        if raw:
            raise ConfigError(f"unknown config keys: {sorted(raw)}")
        return config

    @classmethod
    def from_json(cls, path) -> "AnalysisConfig":
        with open(path) as handle:
            return cls.from_dict(json.load(handle))


@dataclass
class PreparedSurvey:
    """Cleaned records plus what the cleaning did, for the manifest."""

    records: list[RespondentRecord]
    kp_table: KnownPopulationTable
    frame_totals: FrameTotals
    scheme: GroupScheme
    excluded_by_age: int
    topcoded_entries: int
    tie_definition: str | None


def prepare_survey(
    records: Sequence[RespondentRecord],
    kp_table: KnownPopulationTable,
    config: AnalysisConfig,
    tie_definition: str | None = None,
) -> PreparedSurvey:
    """Run the standard cleaning order on loaded records.

    Filter to one tie definition, truncate to the eligible age spans,
    cap the probe connection counts, then settle the frame total
    (rescaling weights when the config pins it).
    """
    tie = tie_definition if tie_definition is not None else config.tie_definition
    working = list(records)
    if tie is not None:
        working = filter_tie_definition(working, tie)
    truncation = truncate_frame(working, config.frame_age_ranges)
    topcoded = topcode_kp_reports(truncation.records, config.topcode_cap)
    working = topcoded.records
    if config.frame_size is not None:
        working = denormalize_weights(working, config.frame_size)
        totals = FrameTotals(config.frame_size, source="config")
    else:
        totals = frame_totals_from_weights(working)
    return PreparedSurvey(
        records=working,
        kp_table=kp_table,
        frame_totals=totals,
        scheme=config.scheme,
        excluded_by_age=truncation.excluded,
        topcoded_entries=topcoded.affected_entries,
        tie_definition=tie,
    )
