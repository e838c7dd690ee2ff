"""Abridged life-table arithmetic on top of the estimated rates.

Converts age-specific death rates into probabilities of dying and
chains them into summary quantities such as the probability an
adult alive at 15 dies before 60.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ScheduleError
from .groups import GroupId


def rate_to_probability(
    rate: float, width: float, avg_years_lived: float | None = None
) -> float:
    """Probability of dying inside an age bin given its death rate.

    Uses the standard actuarial conversion ``width * rate / (1 +
    (width - a) * rate)`` where ``a`` is the average time lived in the
    bin by those who die there, defaulting to half the width. The
    result is clamped to [0, 1].
    """
    if width <= 0:
        raise ValueError(f"bin width must be positive, got {width}")
    if rate < 0:
        raise ValueError(f"death rate cannot be negative, got {rate}")
    a = width / 2.0 if avg_years_lived is None else float(avg_years_lived)
    if not 0 <= a <= width:
        raise ValueError(f"average years lived {a} outside [0, {width}]")
    q = width * rate / (1.0 + (width - a) * rate)
    return min(max(q, 0.0), 1.0)


@dataclass(frozen=True)
class RateSchedule:
    """Death rates over an ordered set of half-open age bins."""

    bins: tuple[tuple[float, float], ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        bins = tuple((float(lo), float(hi)) for lo, hi in self.bins)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "rates", rates)
        if len(bins) != len(rates):
            raise ScheduleError(
                f"{len(bins)} bins but {len(rates)} rates"
            )
        if not bins:
            raise ScheduleError("empty rate schedule")
        for lo, hi in bins:
            if hi <= lo:
                raise ScheduleError(f"empty age bin [{lo}, {hi})")
        for (_, hi), (lo, _) in zip(bins, bins[1:]):
            if lo < hi:
                raise ScheduleError(
                    f"age bins overlap around {lo}; sort and deduplicate first"
                )

    @classmethod
    def from_items(cls, items: Sequence[tuple[float, float, float]]) -> "RateSchedule":
        """Build from (age_lo, age_hi, rate) triples in any order."""
        ordered = sorted(items, key=lambda t: t[0])
        return cls(
            bins=tuple((lo, hi) for lo, hi, _ in ordered),
            rates=tuple(r for _, _, r in ordered),
        )


def schedule_for_sex(rates: Mapping[GroupId, float], sex: str) -> RateSchedule:
    """Extract one sex's rate schedule from a per-cell rate mapping."""
    items = [
        (g.age_lo, g.age_hi, r) for g, r in rates.items() if g.sex == sex
    ]
    if not items:
        raise ScheduleError(f"no cells for sex {sex!r}")
    return RateSchedule.from_items(items)


def death_probability(
    schedule: RateSchedule, from_age: float = 15, to_age: float = 60
) -> float:
    """Probability of dying before ``to_age`` given alive at ``from_age``.

    The span is partitioned by the schedule's bins; a bin that sticks
    out past either end is truncated and its rate applied over the
    shorter width (with the average-time-lived default recomputed for
    that width). Survival multiplies across the pieces.

    Raises
    ------
    ScheduleError
        when any part of [from_age, to_age) has no rate.
    """
    if to_age <= from_age:
        raise ValueError(
            f"to_age must exceed from_age, got [{from_age}, {to_age})"
        )
    survival = 1.0
    cursor = float(from_age)
    for (lo, hi), rate in zip(schedule.bins, schedule.rates):
        if hi <= cursor or lo >= to_age:
            continue
        if lo > cursor:
            raise ScheduleError(
                f"no death rate covering ages [{cursor}, {lo})"
            )
        width = min(hi, to_age) - cursor
        survival *= 1.0 - rate_to_probability(rate, width)
        cursor += width
        if cursor >= to_age:
            break
    if cursor < to_age:
        raise ScheduleError(
            f"no death rate covering ages [{cursor}, {to_age})"
        )
    return 1.0 - survival
