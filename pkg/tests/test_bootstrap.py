"""Replicate weights and percentile intervals.

Quantile oracle used below: for replicate values 1..100 at level 0.95
the linear-interpolation percentile endpoints are 3.475 and 97.525
(the 2.5th percentile sits 0.475 of the way from the 3rd to the 4th
order statistic, and symmetrically at the top).
"""

import os

import numpy as np
import pytest

from netsurvival.bootstrap import (
    EstimateWithCI,
    ReplicateWeights,
    SurveyDesign,
    bootstrap_estimate,
    make_replicates,
)
from netsurvival.errors import DesignError, EmptyCellError
from netsurvival.groups import FEMALE, GroupId

from conftest import make_record
import properties

CELL = GroupId(FEMALE, 15, 25)


def design_records(psus_per_stratum=(3, 4), per_psu=2):
    records = []
    i = 0
    for s, n_psus in enumerate(psus_per_stratum):
        for u in range(n_psus):
            for _ in range(per_psu):
                records.append(
                    make_record(
                        f"r{i}", weight=1.0 + (i % 3),
                        stratum=f"s{s}", psu=f"s{s}u{u}",
                    )
                )
                i += 1
    return records


def test_design_extracted_from_records():
    design = SurveyDesign.from_records(design_records())
    assert design.strata == (
        ("s0", ("s0u0", "s0u1", "s0u2")),
        ("s1", ("s1u0", "s1u1", "s1u2", "s1u3")),
    )


def test_single_psu_stratum_rejected_by_name():
    records = design_records() + [make_record("x", stratum="s9", psu="s9u0")]
    with pytest.raises(DesignError, match="s9"):
        make_replicates(records, 10, seed=1)


def test_record_outside_design_rejected():
    design = SurveyDesign.from_records(design_records())
    alien = design_records() + [make_record("x", stratum="s0", psu="s0u99")]
    with pytest.raises(DesignError, match="s0u99"):
        make_replicates(alien, 5, seed=1, design=design)


def test_seed_is_mandatory():
    with pytest.raises(ValueError):
        make_replicates(design_records(), 10, seed=None)
    with pytest.raises(ValueError):
        make_replicates(design_records(), 0, seed=1)


def test_replicate_weights_shape_and_values():
    records = design_records()
    rep = make_replicates(records, 40, seed=5)
    assert rep.matrix.shape == (40, len(records))
    base = np.array([r.weight for r in records])
    ratios = rep.matrix / base
    # s0 has 3 PSUs: allowed factors are k * 3/2 for k = 0,1,2
    s0 = ratios[:, :6]
    assert set(np.round(np.unique(s0), 6)) <= {0.0, 1.5, 3.0}
    # s1 has 4 PSUs: factors k * 4/3, draws of 3
    s1 = ratios[:, 6:]
    assert set(np.round(np.unique(s1), 6)) <= {
        0.0, round(4 / 3, 6), round(8 / 3, 6), 4.0,
    }


def test_replicates_are_a_prefix_stable_stream():
    """Asking for more replicates extends the sequence without
    changing the ones already drawn."""
    records = design_records()
    first = make_replicates(records, 8, seed=42).matrix
    more = make_replicates(records, 20, seed=42).matrix
    np.testing.assert_array_equal(more[:8], first)


def test_percentile_interval_oracle():
    """Feed a fake estimator whose replicate values are exactly
    1..100; the 95% interval must be [3.475, 97.525]."""
    records = design_records(psus_per_stratum=(101,), per_psu=1)
    counter = iter(range(101))

    def fake(recs, weights):
        k = next(counter)
        if k == 0:  # the point-estimate call
            return {CELL: 50.0}
        return {CELL: float(k)}

    rep = ReplicateWeights(
        design=SurveyDesign.from_records(records),
        seed=0,
        matrix=np.ones((100, len(records))),
    )
    result = bootstrap_estimate(fake, records, rep, level=0.95)
    est = result[CELL]
    assert est.estimate == 50.0
    assert est.lower == pytest.approx(3.475)
    assert est.upper == pytest.approx(97.525)
    assert est.n_failed == 0 and not est.degenerate


def test_failed_replicates_marked_degenerate():
    """11 failures out of 100 crosses the 10% line; 9 does not."""
    records = design_records(psus_per_stratum=(101,), per_psu=1)
    rep = ReplicateWeights(
        design=SurveyDesign.from_records(records),
        seed=0,
        matrix=np.ones((100, len(records))),
    )

    def flaky(n_bad):
        calls = iter(range(101))

        def estimator(recs, weights):
            k = next(calls)
            if k == 0:
                return {CELL: 1.0}
            if k <= n_bad:
                raise EmptyCellError(CELL)
            return {CELL: float(k)}

        return estimator

    assert bootstrap_estimate(flaky(11), records, rep)[CELL].degenerate
    result = bootstrap_estimate(flaky(9), records, rep)[CELL]
    assert not result.degenerate and result.n_failed == 9


def test_all_replicates_failing_yields_nan_interval():
    records = design_records(psus_per_stratum=(2,), per_psu=1)
    rep = make_replicates(records, 10, seed=3)
    calls = iter(range(11))

    def estimator(recs, weights):
        if next(calls) == 0:
            return {CELL: 2.0}
        raise EmptyCellError(CELL)

    est = bootstrap_estimate(estimator, records, rep)[CELL]
    assert est.degenerate and est.n_failed == 10
    assert np.isnan(est.lower) and np.isnan(est.upper)


def test_level_validated():
    records = design_records(psus_per_stratum=(2,), per_psu=1)
    rep = make_replicates(records, 4, seed=3)
    with pytest.raises(ValueError):
        bootstrap_estimate(lambda r, w: {CELL: 1.0}, records, rep, level=1.5)


def test_thread_count_does_not_change_results(monkeypatch):
    """The replicate matrix is fixed up front, so worker threads only
    split the loop; estimates must not depend on the split."""
    records = design_records()
    rep = make_replicates(records, 30, seed=9)

    def estimator(recs, weights):
        w = np.asarray(
            [r.weight for r in recs] if weights is None else weights
        )
        return {CELL: float(w.sum())}

    monkeypatch.delenv("NETSURV_THREADS", raising=False)
    serial = bootstrap_estimate(estimator, records, rep)
    monkeypatch.setenv("NETSURV_THREADS", "4")
    threaded = bootstrap_estimate(estimator, records, rep)
    np.testing.assert_array_equal(
        serial[CELL].replicate_values, threaded[CELL].replicate_values
    )
    assert serial[CELL].lower == threaded[CELL].lower


def test_replicate_weight_sweep():
    properties.replicate_weight_mean_recovery(n_cases=80)
