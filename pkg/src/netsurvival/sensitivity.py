"""Bias decomposition and what-if adjustment of estimated rates.

The estimator is exact under a set of reporting and design
conditions; when they fail, the error is a product of interpretable
factors. This module applies user-supplied (or simulator-derived)
factor values to an estimated rate to recover what the rate would be
if the conditions held, and maps grids of assumed factor values for
robustness displays.

Factor conventions, each equal to 1 (or 0 for the weight indices)
when its condition holds:

* ``degree_ratio`` - decedents' average frame connections over their
  living cell peers' average (below 1 when the dead were less
  connected).
* ``true_positive_rate`` - share of decedents' connections that
  actually produced a death report.
* ``precision`` - share of death reports that refer to real deaths.
* ``kp_size_factor`` - assumed combined probe size over the truth.
* ``probe_mixing_factor`` - probe members' average connections into
  the cell over the frame's average.
* ``kp_reporting_factor`` - reported over true probe connections.
* ``frame_coverage_factor`` - cell frame members over cell population.
* ``weight_index_deaths`` / ``weight_index_kp`` - imperfect-weight
  indices for the two report totals (0 for perfect weights).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .groups import GroupId

DEFAULT_GRID = (0.5, 1.0, 1.5)


@dataclass(frozen=True)
class AdjustmentFactors:
    degree_ratio: float = 1.0
    true_positive_rate: float = 1.0
    precision: float = 1.0
    kp_size_factor: float = 1.0
    probe_mixing_factor: float = 1.0
    kp_reporting_factor: float = 1.0
    frame_coverage_factor: float = 1.0
    weight_index_deaths: float = 0.0
    weight_index_kp: float = 0.0

    def complete(self) -> bool:
        """False when any factor is missing (NaN), e.g. derived from a
        world with no deaths in the cell."""
        return all(
            not math.isnan(v)
            for v in (
                self.degree_ratio, self.true_positive_rate, self.precision,
                self.kp_size_factor, self.probe_mixing_factor,
                self.kp_reporting_factor, self.frame_coverage_factor,
                self.weight_index_deaths, self.weight_index_kp,
            )
        )


def apply_sensitivity(rate: float, factors: AdjustmentFactors) -> float:
    """Correct an estimated rate under assumed factor values.

    Reporting errors scale the estimate by (true_positive_rate x
    degree_ratio) / precision, the probe-side factors by
    kp_size_factor / (probe_mixing x kp_reporting), frame coverage by
    frame_coverage_factor, and imperfect weights by (1 + K_deaths) /
    (1 + K_kp); this inverts all of them at once. With every factor
    at its perfect value the rate comes back unchanged.
    """
    f = factors
    if f.degree_ratio <= 0 or f.true_positive_rate <= 0:
        raise ValueError("degree_ratio and true_positive_rate must be positive")
    if f.kp_size_factor <= 0 or f.frame_coverage_factor <= 0:
        raise ValueError("kp_size_factor and frame_coverage_factor must be positive")
    if (1.0 + f.weight_index_deaths) <= 0:
        raise ValueError("weight_index_deaths must exceed -1")
    return (
        rate
        * (f.probe_mixing_factor * f.kp_reporting_factor / f.kp_size_factor)
        * (1.0 / f.frame_coverage_factor)
        * (f.precision / (f.true_positive_rate * f.degree_ratio))
        * ((1.0 + f.weight_index_kp) / (1.0 + f.weight_index_deaths))
    )


def adjustment_from_truth(world, group: GroupId) -> AdjustmentFactors:
    """Enumerate the true factor values for one cell of a synthetic world.

    A cell with no deaths has undefined degree_ratio and
    true_positive_rate; those come back NaN and
    :meth:`AdjustmentFactors.complete` is False. The weight indices
    are sampling properties, not world properties, so they are 0 here.
    """
    t = world.true_quantities(group)
    if t.deaths > 0:
        degree_ratio = t.avg_degree_deaths / t.avg_degree_frame
        tpr = (
            t.visible_ties / t.decedent_frame_ties
            if t.decedent_frame_ties > 0
            else float("nan")
        )
    else:
        degree_ratio = float("nan")
        tpr = float("nan")
    precision = (
        t.true_report_total / t.report_total
        if t.report_total > 0
        else float("nan")
    )
    probe_mixing = (
        (t.probe_ties_into_cell / world.kp_total)
        / (t.frame_ties / world.frame_size)
    )
    kp_reporting = (
        t.reported_kp_total / t.kp_connection_total
        if t.kp_connection_total > 0
        else float("nan")
    )
    return AdjustmentFactors(
        degree_ratio=degree_ratio,
        true_positive_rate=tpr,
        precision=precision,
        kp_size_factor=1.0,
        probe_mixing_factor=probe_mixing,
        kp_reporting_factor=kp_reporting,
        frame_coverage_factor=1.0,
    )


def imperfect_sampling_index(errors, values) -> float:
    """Index of how much weight error distorts a weighted total.

    ``errors`` holds each respondent's true-to-used inclusion
    probability ratio, ``values`` the quantity being totalled. The
    index is cv(errors) x cv(values) x cor(errors, values) with
    population (not sample) standard deviations; if either input is
    constant the index is 0 by convention. A total computed with the
    wrong weights is the correct total times (1 + index).
    """
    e = np.asarray(errors, dtype=float)
    v = np.asarray(values, dtype=float)
    if e.shape != v.shape or e.ndim != 1:
        raise ValueError("errors and values must be 1-d and the same length")
    if e.size == 0:
        raise ValueError("need at least one observation")
    mean_e = e.mean()
    mean_v = v.mean()
    sd_e = e.std()
    sd_v = v.std()
    if sd_e == 0.0 or sd_v == 0.0:
        return 0.0
    if mean_e == 0.0 or mean_v == 0.0:
        raise ValueError("means must be nonzero to form coefficients of variation")
    cov = float(np.mean((e - mean_e) * (v - mean_v)))
    return cov / (mean_e * mean_v)


@dataclass(frozen=True)
class GridCell:
    """Adjusted rates under one assumed (degree_ratio, precision over
    true_positive_rate) combination."""

    degree_ratio: float
    reporting_ratio: float
    rates: Mapping[GroupId, float]


def sensitivity_grid(
    rates: Mapping[GroupId, float],
    degree_ratio_grid: Sequence[float] = DEFAULT_GRID,
    reporting_ratio_grid: Sequence[float] = DEFAULT_GRID,
) -> list[GridCell]:
    """Adjusted rate schedules over a grid of assumed factor values.

    ``reporting_ratio`` is precision / true_positive_rate, the two
    reporting-error factors that enter only through their ratio. All
    other factors stay at their perfect values.
    """
    cells = []
    for dr in degree_ratio_grid:
        for rr in reporting_ratio_grid:
            if dr <= 0 or rr <= 0:
                raise ValueError("grid values must be positive")
            factors = AdjustmentFactors(degree_ratio=dr, precision=rr)
            cells.append(
                GridCell(
                    degree_ratio=dr,
                    reporting_ratio=rr,
                    rates={
                        g: apply_sensitivity(m, factors)
                        for g, m in rates.items()
                    },
                )
            )
    return cells
