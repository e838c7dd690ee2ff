"""Ingestion and cleaning."""

import textwrap

import pytest

from netsurvival.errors import SchemaError, ValidationError
from netsurvival.groups import FEMALE, MALE
from netsurvival.surveydata import (
    FrameTotals,
    KnownPopulationTable,
    denormalize_weights,
    filter_tie_definition,
    frame_totals_from_weights,
    load_known_populations,
    load_respondents,
    normalize_sex,
    topcode_kp_reports,
    truncate_frame,
)

from conftest import make_record


RESPONDENTS_CSV = textwrap.dedent(
    """\
    respondent_id,stratum_id,psu_id,weight,age,sex,tie_definition,kp_teachers,kp_nurses
    a,s1,s1u1,2.0,20,F,meal,3,1
    b,s1,s1u2,1.5,30,female,meal,0,0
    c,s2,s2u1,1.0,40,M,acquaintance,2,
    """
)

DEATHS_CSV = textwrap.dedent(
    """\
    respondent_id,death_age,death_sex
    a,25,f
    a,,m
    c,33,F
    """
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_happy_path(tmp_path):
    result = load_respondents(
        write(tmp_path, "r.csv", RESPONDENTS_CSV),
        write(tmp_path, "d.csv", DEATHS_CSV),
    )
    assert result.rows_read == 3
    assert result.death_reports == 3
    assert result.incomplete_death_reports == 1

    a, b, c = result.records
    assert a.sex == FEMALE and c.sex == MALE
    assert a.kp_connections == {"teachers": 3, "nurses": 1}
    assert c.kp_connections == {"teachers": 2}  # blank cell dropped
    assert len(a.death_reports) == 2
    assert a.death_reports[0].death_sex == FEMALE
    assert a.death_reports[1].incomplete
    assert b.death_reports == ()
    assert c.death_reports[0].death_age == 33


def test_missing_column_names_the_column(tmp_path):
    broken = RESPONDENTS_CSV.replace("weight,", "wgt,")
    with pytest.raises(SchemaError, match="weight"):
        load_respondents(write(tmp_path, "r.csv", broken))


def test_non_positive_weight_lists_ids(tmp_path):
    bad = RESPONDENTS_CSV.replace("2.0,20", "0.0,20")
    with pytest.raises(ValidationError, match="a"):
        load_respondents(write(tmp_path, "r.csv", bad))


def test_duplicate_respondent_rejected(tmp_path):
    dupe = RESPONDENTS_CSV + "a,s1,s1u1,1.0,22,F,meal,0,0\n"
    with pytest.raises(ValidationError, match="duplicate"):
        load_respondents(write(tmp_path, "r.csv", dupe))


def test_death_for_unknown_respondent_rejected(tmp_path):
    with pytest.raises(ValidationError, match="zzz"):
        load_respondents(
            write(tmp_path, "r.csv", RESPONDENTS_CSV),
            write(tmp_path, "d.csv", "respondent_id,death_age,death_sex\nzzz,20,f\n"),
        )


def test_negative_kp_count_rejected(tmp_path):
    bad = RESPONDENTS_CSV.replace("meal,3,1", "meal,-3,1")
    with pytest.raises(ValidationError, match="negative"):
        load_respondents(write(tmp_path, "r.csv", bad))


def test_load_known_populations(tmp_path):
    table = load_known_populations(
        write(tmp_path, "kp.csv", "name,size\nteachers,10\nnurses,5\n")
    )
    assert table.names == ["teachers", "nurses"]
    assert table.total == 15.0
    with pytest.raises(ValidationError):
        load_known_populations(
            write(tmp_path, "kp2.csv", "name,size\nteachers,10\nteachers,5\n")
        )
    with pytest.raises(ValidationError):
        load_known_populations(write(tmp_path, "kp3.csv", "name,size\nx,0\n"))


@pytest.mark.parametrize(
    "raw,expected",
    [("f", FEMALE), ("F", FEMALE), ("Female", FEMALE), ("m", MALE), (" male ", MALE)],
)
def test_sex_aliases(raw, expected):
    assert normalize_sex(raw) == expected


def test_unknown_sex_rejected():
    with pytest.raises(ValidationError):
        normalize_sex("unknown")


def test_topcode_caps_and_counts():
    records = [
        make_record("a", kp={"teachers": 45, "nurses": 30}),
        make_record("b", kp={"teachers": 31}),
        make_record("c", kp={"teachers": 2}),
    ]
    result = topcode_kp_reports(records, cap=30)
    assert result.affected_entries == 2
    assert result.records[0].kp_connections == {"teachers": 30, "nurses": 30}
    assert result.records[1].kp_connections == {"teachers": 30}
    # inputs untouched
    assert records[0].kp_connections["teachers"] == 45
    with pytest.raises(ValueError):
        topcode_kp_reports(records, cap=0)


def test_denormalize_weights_hits_target():
    records = [make_record("a", weight=1.0), make_record("b", weight=3.0)]
    scaled = denormalize_weights(records, 100.0)
    assert sum(r.weight for r in scaled) == pytest.approx(100.0)
    assert scaled[1].weight / scaled[0].weight == pytest.approx(3.0)
    # already on target: unchanged
    same = denormalize_weights(records, 4.0)
    assert [r.weight for r in same] == [1.0, 3.0]


def test_truncate_frame_is_per_sex():
    records = [
        make_record("a", age=20, sex=FEMALE),
        make_record("b", age=55, sex=FEMALE),   # out for women
        make_record("c", age=55, sex=MALE),     # still in for men
        make_record("d", age=60, sex=MALE),     # boundary: out
    ]
    result = truncate_frame(records, {FEMALE: (15, 50), MALE: (15, 60)})
    assert [r.respondent_id for r in result.records] == ["a", "c"]
    assert result.excluded == 2
    # rule covering all ages changes nothing
    noop = truncate_frame(records, {FEMALE: (0, 200), MALE: (0, 200)})
    assert len(noop.records) == 4 and noop.excluded == 0


def test_filter_tie_definition():
    records = [make_record("a", tie="meal"), make_record("b", tie="acquaintance")]
    assert [r.respondent_id for r in filter_tie_definition(records, "meal")] == ["a"]


def test_frame_totals():
    records = [make_record("a", weight=2.5), make_record("b", weight=1.5)]
    totals = frame_totals_from_weights(records)
    assert totals.frame_size == 4.0
    assert totals.source == "estimated_from_weights"
    with pytest.raises(ValidationError):
        FrameTotals(0.0, "config")


def test_kp_table_without():
    table = KnownPopulationTable({"teachers": 10.0, "nurses": 5.0})
    rest = table.without("teachers")
    assert rest.names == ["nurses"] and rest.total == 5.0
    assert table.total == 15.0  # original untouched
    with pytest.raises(KeyError):
        table.without("plumbers")
