"""Rescaled survey bootstrap for stratified cluster samples.

Replicate r draws, independently within every stratum, n_h - 1 of the
stratum's n_h PSUs with replacement; a record's replicate weight is
its base weight times n_h / (n_h - 1) times the number of times its
PSU was drawn. Averaged over replicates the weights recover the
original ones, and strata resample independently.

Replicate r's draws come from a dedicated RNG stream derived from
(master seed, r), so a replicate's weights do not depend on how many
replicates were requested or on evaluation order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DesignError, NetworkSurvivalError
from .groups import GroupId

THREADS_ENV_VAR = "NETSURV_THREADS"

# share of replicates allowed to fail for a cell before its interval
# is flagged unusable
MAX_FAILURE_SHARE = 0.10


@dataclass(frozen=True)
class SurveyDesign:
    """Stratum and PSU structure extracted from the records."""

    # stratum id -> ordered tuple of its PSU ids
    strata: tuple[tuple[str, tuple[str, ...]], ...]

    @classmethod
    def from_records(cls, records) -> "SurveyDesign":
        psus: dict[str, set[str]] = {}
        for rec in records:
            psus.setdefault(rec.stratum_id, set()).add(rec.psu_id)
        return cls(
            tuple(
                (stratum, tuple(sorted(ids)))
                for stratum, ids in sorted(psus.items())
            )
        )

    def validate_for_resampling(self):
        for stratum, psu_ids in self.strata:
            if len(psu_ids) < 2:
                raise DesignError(
                    f"stratum {stratum!r} has a single PSU and cannot "
                    "be resampled; collapse strata explicitly first"
                )


@dataclass
class ReplicateWeights:
    """Matrix of replicate weights, one row per replicate."""

    design: SurveyDesign
    seed: int
    matrix: np.ndarray  # shape (n_replicates, n_records)

    @property
    def n_replicates(self) -> int:
        return self.matrix.shape[0]


def make_replicates(
    records, n_replicates: int, seed: int, design: SurveyDesign | None = None
) -> ReplicateWeights:
    """Build rescaled-bootstrap replicate weights for the records.

    Raises
    ------
    DesignError
        when any stratum has fewer than two PSUs.
    """
    if n_replicates <= 0:
        raise ValueError(f"need at least one replicate, got {n_replicates}")
    if seed is None:
        raise ValueError("a seed is required; replicate draws must be reproducible")
    if design is None:
        design = SurveyDesign.from_records(records)
    design.validate_for_resampling()

    base_w = np.array([r.weight for r in records], dtype=float)
    n = len(records)
    # record -> (stratum slot, psu slot within stratum)
    psu_slot = np.empty(n, dtype=np.intp)
    stratum_slot = np.empty(n, dtype=np.intp)
    lookup = {
        (stratum, psu): (si, pi)
        for si, (stratum, psu_ids) in enumerate(design.strata)
        for pi, psu in enumerate(psu_ids)
    }
    for i, rec in enumerate(records):
        try:
            stratum_slot[i], psu_slot[i] = lookup[(rec.stratum_id, rec.psu_id)]
        except KeyError:
            raise DesignError(
                f"record {rec.respondent_id} has PSU {rec.psu_id!r} "
                f"not present in the supplied design"
            ) from None

    stratum_sizes = [len(psu_ids) for _, psu_ids in design.strata]
    offsets = np.concatenate([[0], np.cumsum(stratum_sizes)])
    flat_psu = offsets[stratum_slot] + psu_slot  # global psu index per record

    matrix = np.empty((n_replicates, n), dtype=float)
    total_psus = int(offsets[-1])
    for r in range(n_replicates):
        rng = np.random.default_rng(np.random.SeedSequence((seed, r)))
        factors = np.empty(total_psus, dtype=float)
        for si, n_h in enumerate(stratum_sizes):
            draws = rng.integers(0, n_h, size=n_h - 1)
            counts = np.bincount(draws, minlength=n_h)
            factors[offsets[si]:offsets[si] + n_h] = counts * (n_h / (n_h - 1))
        matrix[r] = base_w * factors[flat_psu]
    return ReplicateWeights(design=design, seed=seed, matrix=matrix)


@dataclass
class EstimateWithCI:
    """Point estimate with a percentile bootstrap interval.

    ``degenerate`` is set when more than 10% of replicates failed to
    produce a value for the cell, in which case the interval should
    not be trusted (it is still computed from the replicates that
    did succeed, when any did).
    """

    group: GroupId
    estimate: float
    lower: float
    upper: float
    level: float
    n_replicates: int
    n_failed: int
    replicate_values: np.ndarray
    degenerate: bool


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def bootstrap_estimate(
    estimator: Callable[..., Mapping[GroupId, float]],
    records,
    replicates: ReplicateWeights,
    level: float = 0.95,
) -> dict[GroupId, EstimateWithCI]:
    """Point estimates with percentile confidence intervals.

    ``estimator(records, weights)`` must return ``{cell: value}``;
    cells it cannot estimate under some replicate weighting are simply
    absent from that replicate's mapping. The interval endpoints are
    empirical quantiles of the replicate values, interpolating
    linearly between order statistics. Replicate values are retained
    on the result for plotting.
    """
    if not 0 < level < 1:
        raise ValueError(f"confidence level must be in (0, 1), got {level}")
    point = estimator(records, None)
    groups = list(point)
    slot = {g: k for k, g in enumerate(groups)}
    n_rep = replicates.n_replicates
    values = np.full((n_rep, len(groups)), np.nan)

    def run_chunk(span):
        for r in span:
            try:
                result = estimator(records, replicates.matrix[r])
            except NetworkSurvivalError:
                continue
            for g, v in result.items():
                k = slot.get(g)
                if k is not None:
                    values[r, k] = v

    threads = _thread_count()
    if threads > 1 and n_rep > 1:
        spans = np.array_split(np.arange(n_rep), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, spans))
    else:
        run_chunk(range(n_rep))

    alpha = (1.0 - level) / 2.0
    out: dict[GroupId, EstimateWithCI] = {}
    for g in groups:
        col = values[:, slot[g]]
        ok = col[~np.isnan(col)]
        failed = n_rep - ok.size
        degenerate = failed > MAX_FAILURE_SHARE * n_rep
        if ok.size:
            lower, upper = np.quantile(ok, [alpha, 1.0 - alpha])
        else:
            lower = upper = float("nan")
        out[g] = EstimateWithCI(
            group=g,
            estimate=float(point[g]),
            lower=float(lower),
            upper=float(upper),
            level=level,
            n_replicates=n_rep,
            n_failed=failed,
            replicate_values=ok,
            degenerate=degenerate,
        )
    return out
