"""Interview yield, hold-out size recovery, leave-one-out degrees."""

import numpy as np
import pytest

from netsurvival.diagnostics import (
    deaths_per_interview,
    internal_consistency_holdout,
    loo_degree,
)
from netsurvival.errors import DegenerateVisibilityError, EmptyCellError
from netsurvival.groups import FEMALE, GroupId, GroupScheme
from netsurvival.surveydata import KnownPopulationTable

from conftest import make_record

KP = KnownPopulationTable({"teachers": 10.0, "nurses": 5.0, "bakers": 20.0})
SCHEME = GroupScheme(age_breaks=(15, 25))
CELL = GroupId(FEMALE, 15, 25)


def test_deaths_per_interview_counts_everything():
    records = [
        make_record("a", deaths=[(20, FEMALE), (None, None)]),
        make_record("b"),
        make_record("c", deaths=[(30, FEMALE)]),
    ]
    y = deaths_per_interview(records)
    assert y.death_reports == 3  # the incomplete report counts too
    assert y.interviews == 3
    assert y.per_interview == 1.0
    with pytest.raises(EmptyCellError):
        deaths_per_interview([])


def test_holdout_exact_under_proportional_reporting():
    """Reports proportional to size (1 per 5 people here) predict
    every held-out size exactly: ratio 1 for all three populations."""
    records = [
        make_record("a", weight=2.0, kp={"teachers": 2, "nurses": 1, "bakers": 4}),
        make_record("b", weight=1.0, kp={"teachers": 4, "nurses": 2, "bakers": 8}),
    ]
    checks = internal_consistency_holdout(records, KP)
    assert [c.name for c in checks] == ["teachers", "nurses", "bakers"]
    for check in checks:
        assert check.predicted_size == pytest.approx(check.known_size, rel=1e-12)
        assert check.ratio == pytest.approx(1.0, rel=1e-12)


def test_holdout_flags_overreported_population():
    """Doubling reports to one population doubles its prediction and
    deflates the others."""
    records = [
        make_record("a", weight=1.0, kp={"teachers": 4, "nurses": 1, "bakers": 4}),
    ]
    checks = {c.name: c for c in internal_consistency_holdout(records, KP)}
    assert checks["teachers"].ratio > 1.5
    assert checks["nurses"].ratio < 1.0


def test_holdout_frame_size_cancels():
    records = [
        make_record("a", weight=2.0, kp={"teachers": 3, "nurses": 2, "bakers": 5}),
        make_record("b", weight=3.0, kp={"teachers": 1, "nurses": 1, "bakers": 9}),
    ]
    a = internal_consistency_holdout(records, KP)
    b = internal_consistency_holdout(records, KP, frame_size=99999.0)
    for x, y in zip(a, b):
        assert x.predicted_size == pytest.approx(y.predicted_size, rel=1e-12)


def test_holdout_degenerate_when_only_one_population_reported():
    records = [make_record("a", kp={"teachers": 3})]
    with pytest.raises(DegenerateVisibilityError, match="teachers"):
        internal_consistency_holdout(records, KP)


def test_loo_degree_zero_report_population_scales_by_size_ratio():
    """Nobody knows any bakers, so dropping bakers multiplies the
    degree by total size over remaining size: 35/15."""
    records = [
        make_record("a", weight=1.0, kp={"teachers": 3, "nurses": 1, "bakers": 0}),
        make_record("b", weight=1.0, kp={"teachers": 1, "nurses": 2, "bakers": 0}),
    ]
    result = loo_degree(records, KP, SCHEME)
    base = result.baseline[CELL]
    assert result.dropped["bakers"][CELL] == pytest.approx(
        base * 35.0 / 15.0, rel=1e-12
    )
    # dropping a population with in-line reports moves the estimate less
    assert abs(result.dropped["nurses"][CELL] / base - 1) < abs(
        result.dropped["bakers"][CELL] / base - 1
    )


def test_loo_degree_baseline_matches_hand_value():
    """One cell, weights 1 and 1: degree = (7/35) * (2/2) = 0.2 with
    the frame defaulting to the weight sum."""
    records = [
        make_record("a", weight=1.0, kp={"teachers": 3, "nurses": 1}),
        make_record("b", weight=1.0, kp={"teachers": 1, "nurses": 2}),
    ]
    result = loo_degree(records, KP, SCHEME)
    assert result.baseline[CELL] == pytest.approx(0.2, rel=1e-12)
    frame = result.to_frame()
    assert list(frame.columns) == [
        "group", "all_populations",
        "without_teachers", "without_nurses", "without_bakers",
    ]
    assert frame.loc[0, "group"] == "F[15,25)"


def test_loo_degree_skips_empty_cells():
    records = [make_record("a", age=20, kp={"teachers": 1, "nurses": 1})]
    result = loo_degree(records, KP, SCHEME)
    male_cell = GroupId("male", 15, 25)
    assert male_cell not in result.baseline
    frame = result.to_frame().set_index("group")
    assert list(frame.index) == ["F[15,25)"]
    assert np.isfinite(frame.loc["F[15,25)", "without_bakers"])
