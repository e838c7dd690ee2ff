"""Shared builders for the test suite.

Most fixtures here are tiny hand-sized surveys whose estimates can be
worked out on paper; the docstrings in the tests carry the arithmetic.
"""

from __future__ import annotations

import pytest

from netsurvival.groups import FEMALE, MALE, GroupScheme
from netsurvival.surveydata import (
    DeathReport,
    KnownPopulationTable,
    RespondentRecord,
)


def make_record(
    rid,
    weight=1.0,
    age=20,
    sex=FEMALE,
    kp=None,
    deaths=(),
    stratum="s0",
    psu="s0u0",
    tie="meal",
):
    """One respondent with defaults small tests rarely care about.

    ``deaths`` is a sequence of (age, sex) pairs; None in either slot
    makes the report incomplete.
    """
    return RespondentRecord(
        respondent_id=str(rid),
        stratum_id=stratum,
        psu_id=psu,
        weight=weight,
        age=age,
        sex=sex,
        tie_definition=tie,
        kp_connections=dict(kp or {}),
        death_reports=tuple(DeathReport(a, s, tie) for a, s in deaths),
    )


@pytest.fixture
def two_bin_scheme():
    return GroupScheme(age_breaks=(15, 25, 35))


@pytest.fixture
def kp_two_pops():
    """Probe populations of 10 and 5 people, 15 total."""
    return KnownPopulationTable({"teachers": 10.0, "nurses": 5.0})


@pytest.fixture
def oracle_cell_records():
    """Four women in [15,25) whose estimate is hand-computable.

    weights 2,1,3,2; probe connections 3,1,2,0; death reports into the
    same cell 1,0,2,1. See test_estimators for the arithmetic.
    """
    return [
        make_record("r1", weight=2.0, age=20, kp={"teachers": 2, "nurses": 1},
                    deaths=[(20, FEMALE)]),
        make_record("r2", weight=1.0, age=17, kp={"teachers": 1}),
        make_record("r3", weight=3.0, age=24, kp={"nurses": 2},
                    deaths=[(18, FEMALE), (22, FEMALE)]),
        make_record("r4", weight=2.0, age=15, kp={},
                    deaths=[(24, FEMALE)]),
    ]


@pytest.fixture
def small_exact_world():
    """A 160-person world meeting every exactness condition."""
    from netsurvival.simulate import SimConfig, generate_world

    scheme = GroupScheme(age_breaks=(15, 35, 55))
    config = SimConfig(
        scheme=scheme,
        group_sizes=40,
        death_rates={
            "F[15,35)": 0.05,
            "F[35,55)": 0.10,
            "M[15,35)": 0.05,
            "M[35,55)": 0.15,
        },
        mean_degree=8.0,
        kp_sizes={"teachers": 8, "nurses": 4},
        seed=7,
    )
    return generate_world(config)
