"""Sibling-history expansion and rates.

Month arithmetic oracle used below: interviews at month 1200 with a
12-month window cover months [1188, 1200). A sibling born at month
948 is exactly 20 years old when the window opens.
"""

import textwrap

import pytest

from netsurvival.errors import SchemaError, ValidationError
from netsurvival.groups import FEMALE, MALE, GroupId, GroupScheme
from netsurvival.sibling import (
    SiblingRateEstimator,
    SiblingRecord,
    expand_sibling_histories,
    load_siblings,
    sibling_survival_rate,
)

import properties

SCHEME = GroupScheme(age_breaks=(15, 25, 35))
F_YOUNG = GroupId(FEMALE, 15, 25)
F_OLD = GroupId(FEMALE, 25, 35)


def sib(
    rid="a", weight=1.0, sex=FEMALE, birth=948, alive=True, death=None,
    interview=1200, index=0,
):
    return SiblingRecord(
        respondent_id=rid,
        respondent_weight=weight,
        stratum_id="s0",
        psu_id="s0u0",
        sibling_index=index,
        sex=sex,
        birth_cmc=birth,
        alive=alive,
        death_cmc=death,
        interview_cmc=interview,
    )


def expand_one(record, window=12):
    (contrib,) = expand_sibling_histories([record], SCHEME, window)
    return contrib


def test_death_six_months_in_gives_half_year():
    """Died at month 1194, six months into [1188, 1200): exposure runs
    birth-to-death-month, 6 months = 0.5 person-years, plus one death
    at mid-month age (1194.5 - 948)/12 = 20.54."""
    contrib = expand_one(sib(alive=False, death=1194))
    assert contrib.exposure == {F_YOUNG: pytest.approx(0.5)}
    assert contrib.deaths == {F_YOUNG: 1.0}


def test_alive_all_window_gives_full_year():
    contrib = expand_one(sib(alive=True))
    assert contrib.exposure == {F_YOUNG: pytest.approx(1.0)}
    assert contrib.deaths == {}


def test_birthday_splits_exposure_between_cells():
    """Born at month 894, the 25th birthday lands at month 1194, the
    middle of the window: half a year on each side of the cut."""
    contrib = expand_one(sib(birth=894))
    assert contrib.exposure[F_YOUNG] == pytest.approx(0.5)
    assert contrib.exposure[F_OLD] == pytest.approx(0.5)


def test_death_in_first_window_month_counts_without_exposure():
    contrib = expand_one(sib(alive=False, death=1188))
    assert contrib.exposure == {}
    assert contrib.deaths == {F_YOUNG: 1.0}


def test_death_before_window_is_invisible():
    contrib = expand_one(sib(alive=False, death=1187))
    assert contrib.exposure == {} and contrib.deaths == {}


def test_death_at_interview_month_not_counted():
    """The window is half-open at the interview: a death in the
    interview month itself falls outside it."""
    contrib = expand_one(sib(alive=False, death=1200))
    assert contrib.deaths == {}
    assert contrib.exposure == {F_YOUNG: pytest.approx(1.0)}


def test_ages_outside_scheme_earn_nothing():
    child = sib(birth=1100)  # age 7 at the window, far below 15
    contrib = expand_one(child)
    assert contrib.exposure == {} and contrib.deaths == {}


def test_aging_into_the_scheme_mid_window():
    """Born month 1014: turns 15 at month 1194, so only the last six
    window months count, in the youngest cell."""
    contrib = expand_one(sib(birth=1014))
    assert contrib.exposure == {F_YOUNG: pytest.approx(0.5)}


def test_siblings_of_one_respondent_merge():
    rows = [
        sib(index=0, alive=False, death=1194),
        sib(index=1, sex=MALE),
    ]
    (contrib,) = expand_sibling_histories(rows, SCHEME, 12)
    assert contrib.exposure[F_YOUNG] == pytest.approx(0.5)
    assert contrib.exposure[GroupId(MALE, 15, 25)] == pytest.approx(1.0)
    assert contrib.total_exposure() == pytest.approx(1.5)


def test_rate_oracle():
    """deaths = 2*1; exposure = 2*0.5 + 3*1.0 = 4; rate = 0.5."""
    rows = [
        sib(rid="a", weight=2.0, alive=False, death=1194),
        sib(rid="b", weight=3.0),
    ]
    table = sibling_survival_rate(rows, SCHEME, 12)
    est = table.estimates[F_YOUNG]
    assert est.deaths == 2.0
    assert est.exposure == pytest.approx(4.0)
    assert est.rate == pytest.approx(0.5)
    # cells nobody passed through are failures, not zeros
    assert F_OLD in table.failures


def test_estimator_accepts_replacement_weights():
    rows = [
        sib(rid="a", weight=2.0, alive=False, death=1194),
        sib(rid="b", weight=3.0),
    ]
    contributions = expand_sibling_histories(rows, SCHEME, 12)
    estimator = SiblingRateEstimator(SCHEME)
    assert estimator(contributions)[F_YOUNG] == pytest.approx(0.5)
    reweighted = estimator(contributions, weights=[4.0, 3.0])
    assert reweighted[F_YOUNG] == pytest.approx(4.0 / 5.0)
    with pytest.raises(ValueError):
        estimator(contributions, weights=[1.0])


def test_window_must_be_positive():
    with pytest.raises(ValueError):
        expand_sibling_histories([sib()], SCHEME, 0)


SIBLING_CSV = textwrap.dedent(
    """\
    respondent_id,respondent_weight,stratum_id,psu_id,sibling_index,sex,birth_cmc,alive_flag,death_cmc,interview_cmc
    a,2.0,s0,s0u0,0,f,948,0,1194,1200
    a,2.0,s0,s0u0,1,m,948,1,,1200
    b,3.0,s0,s0u1,0,F,894,1,,1200
    """
)


def test_load_siblings(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text(SIBLING_CSV)
    rows = load_siblings(path)
    assert len(rows) == 3
    assert rows[0].alive is False and rows[0].death_cmc == 1194
    assert rows[1].alive is True and rows[1].death_cmc is None
    assert rows[2].sex == FEMALE


def test_load_siblings_validation(tmp_path):
    alive_with_death = SIBLING_CSV.replace("948,1,,1200", "948,1,1190,1200")
    path = tmp_path / "bad.csv"
    path.write_text(alive_with_death)
    with pytest.raises(ValidationError, match="alive"):
        load_siblings(path)

    dead_without_death = SIBLING_CSV.replace("948,0,1194,", "948,0,,")
    path.write_text(dead_without_death)
    with pytest.raises(ValidationError, match="no death month"):
        load_siblings(path)

    path.write_text(SIBLING_CSV.replace("a,2.0", "a,0.0"))
    with pytest.raises(ValidationError, match="weight"):
        load_siblings(path)

    path.write_text(SIBLING_CSV.replace("interview_cmc", "when"))
    with pytest.raises(SchemaError, match="interview_cmc"):
        load_siblings(path)


def test_exposure_conservation_sweep():
    properties.sibling_exposure_conservation(n_cases=60)
