"""Age-sex cells and the scheme that defines them.

Estimation groups are half-open age bins crossed with sex. A cell is
written ``F[15,25)`` or ``M[55,65)`` in output files; the same label
round-trips through :func:`parse_group_label`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

FEMALE = "female"
MALE = "male"

_SEX_PREFIX = {FEMALE: "F", MALE: "M"}
_PREFIX_SEX = {v: k for k, v in _SEX_PREFIX.items()}


@dataclass(frozen=True, order=True)
class GroupId:
    """One estimation cell: a sex and a half-open age interval."""

    sex: str
    age_lo: int
    age_hi: int

    @property
    def label(self) -> str:
        return f"{_SEX_PREFIX[self.sex]}[{self.age_lo},{self.age_hi})"

    def contains(self, age: float, sex: str) -> bool:
        return sex == self.sex and self.age_lo <= age < self.age_hi

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.label


def parse_group_label(label: str) -> GroupId:
    """Invert :attr:`GroupId.label`, e.g. ``"F[15,25)"``."""
    try:
        sex = _PREFIX_SEX[label[0]]
        if label[1] != "[" or label[-1] != ")":
            raise ValueError
        lo, hi = label[2:-1].split(",")
        group = GroupId(sex, int(lo), int(hi))
    except (KeyError, ValueError, IndexError):
        raise ConfigError(f"malformed group label: {label!r}") from None
    if group.age_lo >= group.age_hi:
        raise ConfigError(f"empty age interval in label: {label!r}")
    return group


@dataclass(frozen=True)
class GroupScheme:
    """Defines the estimation cells and the survey frame's age span.

    Parameters
    ----------
    age_breaks : tuple of int
        Strictly increasing bin edges; ``(15, 25, 35)`` defines the
        bins [15,25) and [25,35).
    sexes : tuple of str
        Sexes crossed with the age bins, default female and male.
    frame_age_range : tuple of int, optional
        Half-open [min, max) age span of the survey frame. Defaults to
        the span of ``age_breaks``.
    """

    age_breaks: tuple[int, ...]
    sexes: tuple[str, ...] = (FEMALE, MALE)
    frame_age_range: tuple[int, int] | None = field(default=None)

    def __post_init__(self):
        breaks = tuple(self.age_breaks)
        object.__setattr__(self, "age_breaks", breaks)
        object.__setattr__(self, "sexes", tuple(self.sexes))
        if len(breaks) < 2:
            raise ConfigError("age_breaks needs at least two edges")
        if any(b >= a for b, a in zip(breaks, breaks[1:])):
            raise ConfigError(f"age_breaks must be strictly increasing: {breaks}")
        for sex in self.sexes:
            if sex not in _SEX_PREFIX:
                raise ConfigError(f"unknown sex code: {sex!r}")
        if self.frame_age_range is None:
            object.__setattr__(self, "frame_age_range", (breaks[0], breaks[-1]))
        else:
            lo, hi = self.frame_age_range
            if lo >= hi:
                raise ConfigError(f"empty frame age range: {self.frame_age_range}")
            object.__setattr__(self, "frame_age_range", (int(lo), int(hi)))

    @property
    def groups(self) -> list[GroupId]:
        """All cells, sexes in declared order, ages ascending."""
        return [
            GroupId(sex, lo, hi)
            for sex in self.sexes
            for lo, hi in zip(self.age_breaks, self.age_breaks[1:])
        ]

    def in_frame(self, age: float) -> bool:
        lo, hi = self.frame_age_range
        return lo <= age < hi


def assign_group(age: float, sex: str, scheme: GroupScheme) -> GroupId | None:
    """Map an age and sex to its cell, or None when out of range.

    The bins are half-open, so age 25 with breaks (15, 25, 35) lands
    in [25,35).
    """
    if sex not in scheme.sexes:
        return None
    breaks = scheme.age_breaks
    if not breaks[0] <= age < breaks[-1]:
        return None
    for lo, hi in zip(breaks, breaks[1:]):
        if lo <= age < hi:
            return GroupId(sex, lo, hi)
    return None  # pragma: no cover - unreachable given the range check
