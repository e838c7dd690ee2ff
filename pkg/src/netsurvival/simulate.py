"""Synthetic worlds with known truth for validating the estimators.

A world is a living frame population partitioned into age-sex cells,
an undirected multigraph of ties among them, a set of recent deaths
wired to living frame members, probe-population memberships, and the
death reports the living would give if interviewed. Every estimand is
enumerable from these tables, so estimator output can be compared to
exact truth.

Two construction modes:

* ``exact_conditions=True`` builds a block-regular graph (every
  member of cell g has exactly C[g, h] ties into cell h), gives every
  decedent exactly their cell's average degree, and spreads probe
  memberships across cells proportionally to size. The estimator's
  identifying conditions then hold to machine precision, so a census
  must reproduce the true rates exactly. This mode needs equal,
  even cell sizes and probe sizes divisible by the cell count.
* ``exact_conditions=False`` draws Poisson degrees with uniform
  random mixing and random probe membership; conditions hold only on
  average. Use it with the reporting knobs for bias experiments.

Reporting knobs: ``omission_probability`` drops each decedent tie's
report independently (lowers the true-positive rate),
``false_positive_rate`` adds spurious reports aimed at living people
(lowers precision), ``decedent_degree_multiplier`` scales decedents'
connectivity (moves the degree ratio), and ``kp_degree_correlation``
biases probe membership toward high-degree people (moves the probe
mixing factor). Ties to people outside the frame are not modelled;
no estimated quantity involves them. Networks are static snapshots.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .groups import FEMALE, MALE, GroupId, GroupScheme
from .surveydata import DeathReport, KnownPopulationTable, RespondentRecord

_SEX_CODES = (FEMALE, MALE)


def _per_group(value, groups: Sequence[GroupId], what: str) -> dict[GroupId, float]:
    """Broadcast a scalar or resolve a {label: value} mapping."""
    if isinstance(value, Mapping):
        by_label = {g.label: g for g in groups}
        out = {}
        for key, v in value.items():
            label = key.label if isinstance(key, GroupId) else str(key)
            if label not in by_label:
                raise ConfigError(f"{what}: unknown cell {label!r}")
            out[by_label[label]] = float(v)
        missing = [g.label for g in groups if g not in out]
        if missing:
            raise ConfigError(f"{what}: no value for cells {missing}")
        return out
    return {g: float(value) for g in groups}


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to build a world, including the RNG seed."""

    scheme: GroupScheme
    group_sizes: Mapping[GroupId, int] | int
    death_rates: Mapping[GroupId, float] | float
    mean_degree: Mapping[GroupId, float] | float
    kp_sizes: Mapping[str, int]
    seed: int
    exact_conditions: bool = True
    omission_probability: float = 0.0
    false_positive_rate: float = 0.0
    decedent_degree_multiplier: float = 1.0
    kp_degree_correlation: float = 0.0
    n_strata: int = 4
    psus_per_stratum: int = 6
    tie_definition: str = "simulated"

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SimConfig":
        raw = dict(raw)
        try:
            scheme = GroupScheme(
                tuple(raw.pop("age_breaks")),
                tuple(raw.pop("sexes", (FEMALE, MALE))),
            )
            return cls(
                scheme=scheme,
                group_sizes=raw.pop("group_size"),
                death_rates=raw.pop("death_rates"),
                mean_degree=raw.pop("mean_degree"),
                kp_sizes=dict(raw.pop("known_populations")),
                seed=int(raw.pop("seed")),
                **raw,
            )
        except KeyError as missing:
            raise ConfigError(f"simulation config missing {missing}") from None
        except TypeError as err:
            raise ConfigError(f"bad simulation config: {err}") from None

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        with open(path) as handle:
            raw = json.load(handle)
        raw.pop("sample_design", None)  # consumed by the CLI, not the world
        return cls.from_dict(raw)


@dataclass(frozen=True)
class TruthRecord:
    """Exact per-cell quantities enumerated from the world tables."""

    group: GroupId
    deaths: int
    exposure: int               # living frame members in the cell
    death_rate: float           # deaths / exposure
    report_total: int           # death reports claiming this cell, incl. spurious
    true_report_total: int      # reports pointing at real decedents
    visible_ties: int           # decedent ties that produced a report
    decedent_frame_ties: int    # all decedent ties into the living frame
    avg_degree_deaths: float
    frame_ties: int             # cell members' ties within the living frame
    avg_degree_frame: float
    kp_connection_total: int    # cell members' ties to probe memberships
    probe_ties_into_cell: int   # probe members' ties into the cell (same edges)
    reported_kp_total: int      # what interviews would report (no probe noise)


@dataclass
class SyntheticWorld:
    """Generated population, ties, deaths, memberships, and reports."""

    config: SimConfig
    groups: list[GroupId]
    group_index: np.ndarray     # (n_living,) cell slot per living person
    age: np.ndarray
    sex_code: np.ndarray        # 0 female, 1 male
    stratum_of: np.ndarray
    psu_of: np.ndarray
    tie_u: np.ndarray           # living-living multigraph edges
    tie_v: np.ndarray
    death_group: np.ndarray     # (n_deaths,)
    death_age: np.ndarray
    death_sex_code: np.ndarray
    death_edge_death: np.ndarray    # decedent-living ties
    death_edge_person: np.ndarray
    death_edge_reported: np.ndarray  # bool: survived omission
    kp_members: dict[str, np.ndarray]
    kp_counts: np.ndarray       # (n_living, n_pops) true connection counts
    report_reporter: np.ndarray
    report_target_group: np.ndarray
    report_target_age: np.ndarray
    report_target_sex_code: np.ndarray
    report_is_true: np.ndarray
    truth: dict[GroupId, TruthRecord] = field(default_factory=dict)
    _report_order: np.ndarray | None = None
    _report_starts: np.ndarray | None = None
    _psu_lists: list | None = None

    @property
    def frame_size(self) -> int:
        return self.group_index.size

    @property
    def kp_names(self) -> list[str]:
        return list(self.kp_members)

    @property
    def kp_total(self) -> float:
        return float(sum(self.config.kp_sizes.values()))

    def kp_table(self) -> KnownPopulationTable:
        return KnownPopulationTable(dict(self.config.kp_sizes))

    def true_quantities(self, group: GroupId) -> TruthRecord:
        return self.truth[group]


def _resolved_sizes(config: SimConfig) -> dict[GroupId, int]:
    sizes = _per_group(config.group_sizes, config.scheme.groups, "group_size")
    out = {}
    for g, v in sizes.items():
        n = int(round(v))
        if n <= 0:
            raise ConfigError(f"group_size for {g.label} must be positive")
        out[g] = n
    return out


def _validate_exact(config: SimConfig, sizes: dict[GroupId, int]):
    counts = set(sizes.values())
    if len(counts) != 1:
        raise ConfigError(
            "exact_conditions requires equal cell sizes, got "
            f"{sorted(counts)}"
        )
    m = counts.pop()
    if m % 2:
        raise ConfigError(f"exact_conditions requires an even cell size, got {m}")
    n_groups = len(sizes)
    for name, size in config.kp_sizes.items():
        if size % n_groups:
            raise ConfigError(
                f"exact_conditions requires probe sizes divisible by the "
                f"{n_groups} cells; {name!r} has size {size}"
            )
        if size // n_groups > m:
            raise ConfigError(
                f"probe {name!r} needs {size // n_groups} members per cell "
                f"but cells hold {m}"
            )


def _block_degree_matrix(degrees: Sequence[float]) -> np.ndarray:
    """Symmetric integer per-capita tie counts with proportional mixing."""
    k = np.asarray(degrees, dtype=float)
    total = k.sum()
    if total <= 0:
        raise ConfigError("mean degrees must be positive")
    blocks = np.rint(np.outer(k, k) / total).astype(np.int64)
    if (blocks.sum(axis=1) <= 0).any():
        raise ConfigError(
            "degree targets too small: a cell would have no ties at all"
        )
    return blocks


def _exact_ties(rng, sizes: list[int], blocks: np.ndarray):
    """Block-regular multigraph: member of cell g has blocks[g, h] ties
    into cell h, exactly."""
    n_groups = len(sizes)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    chunks_u, chunks_v = [], []
    for g in range(n_groups):
        members_g = np.arange(offsets[g], offsets[g + 1])
        if blocks[g, g] > 0:
            stubs = np.repeat(members_g, blocks[g, g])
            rng.shuffle(stubs)
            chunks_u.append(stubs[0::2])
            chunks_v.append(stubs[1::2])
        for h in range(g + 1, n_groups):
            if blocks[g, h] <= 0:
                continue
            left = np.repeat(members_g, blocks[g, h])
            right = np.repeat(
                np.arange(offsets[h], offsets[h + 1]), blocks[h, g]
            )
            rng.shuffle(right)
            chunks_u.append(left)
            chunks_v.append(right)
    return np.concatenate(chunks_u), np.concatenate(chunks_v)


def _random_ties(rng, group_index: np.ndarray, mean_by_person: np.ndarray):
    """Configuration-model multigraph with uniform mixing."""
    stubs = rng.poisson(mean_by_person)
    if stubs.sum() % 2:
        stubs[int(rng.integers(stubs.size))] += 1
    stub_list = np.repeat(np.arange(group_index.size), stubs)
    rng.shuffle(stub_list)
    half = stub_list.size // 2
    return stub_list[:half], stub_list[half:]


def generate_world(config: SimConfig) -> SyntheticWorld:
    """Build a world; all randomness comes from ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    scheme = config.scheme
    groups = scheme.groups
    n_groups = len(groups)
    sizes = _resolved_sizes(config)
    size_list = [sizes[g] for g in groups]
    rates = _per_group(config.death_rates, groups, "death_rates")
    degrees = _per_group(config.mean_degree, groups, "mean_degree")
    for g, rate in rates.items():
        if rate < 0:
            raise ConfigError(f"negative death rate for {g.label}")
    if not 0 <= config.omission_probability < 1:
        raise ConfigError("omission_probability must be in [0, 1)")
    if config.false_positive_rate < 0:
        raise ConfigError("false_positive_rate cannot be negative")
    if config.decedent_degree_multiplier <= 0:
        raise ConfigError("decedent_degree_multiplier must be positive")

    n_living = sum(size_list)
    group_index = np.repeat(np.arange(n_groups), size_list)
    sex_code = np.array(
        [_SEX_CODES.index(g.sex) for g in groups], dtype=np.int8
    )[group_index]
    age = np.concatenate(
        [
            rng.integers(g.age_lo, g.age_hi, size=sizes[g])
            for g in groups
        ]
    )

    if config.exact_conditions:
        _validate_exact(config, sizes)
        blocks = _block_degree_matrix([degrees[g] for g in groups])
        tie_u, tie_v = _exact_ties(rng, size_list, blocks)
        realized_degree = blocks.sum(axis=1)  # per cell, every member alike
    else:
        mean_by_person = np.array([degrees[g] for g in groups])[group_index]
        tie_u, tie_v = _random_ties(rng, group_index, mean_by_person)
        realized_degree = None

    # deaths: separate nodes wired into the living frame
    death_counts = [int(round(rates[g] * sizes[g])) for g in groups]
    death_group = np.repeat(np.arange(n_groups), death_counts)
    n_deaths = death_group.size
    death_age = (
        np.concatenate(
            [
                rng.integers(g.age_lo, g.age_hi, size=c)
                for g, c in zip(groups, death_counts)
            ]
        )
        if n_deaths
        else np.empty(0, dtype=np.int64)
    )
    death_sex_code = np.array(
        [_SEX_CODES.index(g.sex) for g in groups], dtype=np.int8
    )[death_group]

    if config.exact_conditions:
        per_death_degree = (
            np.rint(
                config.decedent_degree_multiplier * realized_degree
            ).astype(np.int64)[death_group]
            if n_deaths
            else np.empty(0, dtype=np.int64)
        )
    else:
        cell_mean = np.array([degrees[g] for g in groups])
        per_death_degree = rng.poisson(
            config.decedent_degree_multiplier * cell_mean[death_group]
        ) if n_deaths else np.empty(0, dtype=np.int64)
    death_edge_death = np.repeat(np.arange(n_deaths), per_death_degree)
    death_edge_person = rng.integers(
        0, n_living, size=death_edge_death.size
    )
    death_edge_reported = (
        rng.random(death_edge_death.size) >= config.omission_probability
    )

    # probe-population memberships
    kp_members: dict[str, np.ndarray] = {}
    if config.exact_conditions:
        offsets = np.concatenate([[0], np.cumsum(size_list)])
        m = size_list[0]
        for name, size in config.kp_sizes.items():
            per_cell = size // n_groups
            kp_members[name] = np.concatenate(
                [
                    offsets[g] + rng.choice(m, per_cell, replace=False)
                    for g in range(n_groups)
                ]
            )
    else:
        degree_of = np.bincount(tie_u, minlength=n_living) + np.bincount(
            tie_v, minlength=n_living
        )
        gamma = config.kp_degree_correlation
        prob = (degree_of + 1.0) ** gamma
        prob = prob / prob.sum()
        for name, size in config.kp_sizes.items():
            if size > n_living:
                raise ConfigError(
                    f"probe {name!r} larger than the frame ({size} > {n_living})"
                )
            kp_members[name] = rng.choice(
                n_living, size=size, replace=False, p=prob
            )

    # true connection counts to each probe population
    kp_counts = np.zeros((n_living, len(kp_members)))
    for j, members in enumerate(kp_members.values()):
        is_member = np.zeros(n_living)
        is_member[members] = 1.0
        kp_counts[:, j] = np.bincount(
            tie_u, weights=is_member[tie_v], minlength=n_living
        ) + np.bincount(tie_v, weights=is_member[tie_u], minlength=n_living)

    # reports: surviving decedent ties, then spurious ones
    fp_counts = (
        rng.poisson(config.false_positive_rate, size=n_living)
        if config.false_positive_rate > 0
        else np.zeros(n_living, dtype=np.int64)
    )
    fp_reporter = np.repeat(np.arange(n_living), fp_counts)
    fp_target = rng.integers(0, n_living, size=fp_reporter.size)
    kept = death_edge_reported
    report_reporter = np.concatenate(
        [death_edge_person[kept], fp_reporter]
    ).astype(np.int64)
    report_target_group = np.concatenate(
        [death_group[death_edge_death[kept]], group_index[fp_target]]
    ).astype(np.int64)
    report_target_age = np.concatenate(
        [death_age[death_edge_death[kept]], age[fp_target]]
    ).astype(np.int64)
    report_target_sex_code = np.concatenate(
        [death_sex_code[death_edge_death[kept]], sex_code[fp_target]]
    ).astype(np.int8)
    report_is_true = np.concatenate(
        [np.ones(int(kept.sum()), dtype=bool), np.zeros(fp_reporter.size, dtype=bool)]
    )

    # survey design structure
    strata_psus = config.n_strata * config.psus_per_stratum
    shuffled = rng.permutation(n_living)
    psu_assign = np.empty(n_living, dtype=np.int64)
    for slot, chunk in enumerate(np.array_split(shuffled, strata_psus)):
        psu_assign[chunk] = slot
    stratum_of = psu_assign // config.psus_per_stratum
    psu_of = psu_assign % config.psus_per_stratum

    world = SyntheticWorld(
        config=config,
        groups=groups,
        group_index=group_index,
        age=age,
        sex_code=sex_code,
        stratum_of=stratum_of,
        psu_of=psu_of,
        tie_u=tie_u,
        tie_v=tie_v,
        death_group=death_group,
        death_age=death_age,
        death_sex_code=death_sex_code,
        death_edge_death=death_edge_death,
        death_edge_person=death_edge_person,
        death_edge_reported=death_edge_reported,
        kp_members=kp_members,
        kp_counts=kp_counts,
        report_reporter=report_reporter,
        report_target_group=report_target_group,
        report_target_age=report_target_age,
        report_target_sex_code=report_target_sex_code,
        report_is_true=report_is_true,
    )
    world.truth = _enumerate_truth(world)
    return world


def _enumerate_truth(world: SyntheticWorld) -> dict[GroupId, TruthRecord]:
    n_groups = len(world.groups)
    living = np.bincount(world.group_index, minlength=n_groups)
    deaths = np.bincount(world.death_group, minlength=n_groups)
    decedent_ties = np.bincount(
        world.death_group[world.death_edge_death], minlength=n_groups
    )
    visible = np.bincount(
        world.death_group[world.death_edge_death[world.death_edge_reported]],
        minlength=n_groups,
    )
    frame_ties = np.bincount(
        world.group_index[world.tie_u], minlength=n_groups
    ) + np.bincount(world.group_index[world.tie_v], minlength=n_groups)
    report_total = np.bincount(world.report_target_group, minlength=n_groups)
    true_reports = np.bincount(
        world.report_target_group[world.report_is_true], minlength=n_groups
    )
    kp_ties = np.bincount(
        world.group_index,
        weights=world.kp_counts.sum(axis=1),
        minlength=n_groups,
    ).astype(np.int64)

    out = {}
    for k, g in enumerate(world.groups):
        d, n = int(deaths[k]), int(living[k])
        out[g] = TruthRecord(
            group=g,
            deaths=d,
            exposure=n,
            death_rate=d / n,
            report_total=int(report_total[k]),
            true_report_total=int(true_reports[k]),
            visible_ties=int(visible[k]),
            decedent_frame_ties=int(decedent_ties[k]),
            avg_degree_deaths=decedent_ties[k] / d if d else float("nan"),
            frame_ties=int(frame_ties[k]),
            avg_degree_frame=frame_ties[k] / n,
            kp_connection_total=int(kp_ties[k]),
            probe_ties_into_cell=int(kp_ties[k]),
            reported_kp_total=int(kp_ties[k]),
        )
    return out


def true_quantities(world: SyntheticWorld, group: GroupId) -> TruthRecord:
    """Exact estimands for one cell."""
    return world.true_quantities(group)


@dataclass
class ReportingIdentityCheck:
    """Outgoing true reports must equal reports received by decedents."""

    ok: bool
    mismatches: dict[GroupId, tuple[int, int]]

    def __bool__(self) -> bool:
        return self.ok


def verify_reporting_identity(world: SyntheticWorld) -> ReportingIdentityCheck:
    """Recount both sides of the reporting ledger per cell.

    Outgoing side: true reports by claimed cell, from the report
    table. Incoming side: surviving decedent ties by the decedent's
    cell, from the tie table. Any mismatch means the world's report
    and tie tables disagree.
    """
    n_groups = len(world.groups)
    outgoing = np.bincount(
        world.report_target_group[world.report_is_true], minlength=n_groups
    )
    incoming = np.bincount(
        world.death_group[world.death_edge_death[world.death_edge_reported]],
        minlength=n_groups,
    )
    mismatches = {
        g: (int(outgoing[k]), int(incoming[k]))
        for k, g in enumerate(world.groups)
        if outgoing[k] != incoming[k]
    }
    return ReportingIdentityCheck(ok=not mismatches, mismatches=mismatches)


@dataclass(frozen=True)
class CensusDesign:
    """Interview every living frame member with weight 1."""


@dataclass(frozen=True)
class SRSDesign:
    """Simple random sample without replacement."""

    n: int


@dataclass(frozen=True)
class ClusterDesign:
    """Two-stage design: PSUs within strata, then people within PSUs."""

    psus_per_stratum: int
    respondents_per_psu: int


def design_from_dict(raw: Mapping):
    kind = raw.get("type")
    if kind == "census":
        return CensusDesign()
    if kind == "srs":
        return SRSDesign(n=int(raw["n"]))
    if kind == "cluster":
        return ClusterDesign(
            psus_per_stratum=int(raw["psus_per_stratum"]),
            respondents_per_psu=int(raw["respondents_per_psu"]),
        )
    raise ConfigError(f"unknown sample design: {raw!r}")


def _report_slices(world: SyntheticWorld):
    if world._report_order is None:
        order = np.argsort(world.report_reporter, kind="stable")
        starts = np.searchsorted(
            world.report_reporter[order], np.arange(world.frame_size + 1)
        )
        world._report_order = order
        world._report_starts = starts
    return world._report_order, world._report_starts


def _psu_lists(world: SyntheticWorld):
    if world._psu_lists is None:
        cfg = world.config
        lists = []
        flat = world.stratum_of * cfg.psus_per_stratum + world.psu_of
        order = np.argsort(flat, kind="stable")
        bounds = np.searchsorted(
            flat[order], np.arange(cfg.n_strata * cfg.psus_per_stratum + 1)
        )
        for slot in range(cfg.n_strata * cfg.psus_per_stratum):
            lists.append(order[bounds[slot]:bounds[slot + 1]])
        world._psu_lists = lists
    return world._psu_lists


def draw_sample(
    world: SyntheticWorld,
    design,
    seed: int,
    weight_errors=None,
) -> list[RespondentRecord]:
    """Interview a sample of the living frame.

    ``weight_errors``, when given, is an array over the whole frame of
    each person's true-to-used inclusion probability ratio; sampled
    records then carry the wrong weight (base weight times the error),
    which is how imperfect survey weights are studied. Respondent ids
    are ``p<person index>`` so callers can align records back to the
    frame. Probe connection reports are exact; death reports are the
    world's report table restricted to the sampled respondents.
    """
    rng = np.random.default_rng(seed)
    cfg = world.config
    n = world.frame_size
    if isinstance(design, CensusDesign):
        idx = np.arange(n)
        weights = np.ones(n)
    elif isinstance(design, SRSDesign):
        if not 0 < design.n <= n:
            raise ConfigError(f"srs size {design.n} outside 1..{n}")
        idx = np.sort(rng.choice(n, size=design.n, replace=False))
        weights = np.full(design.n, n / design.n)
    elif isinstance(design, ClusterDesign):
        lists = _psu_lists(world)
        take_psus = design.psus_per_stratum
        take_people = design.respondents_per_psu
        if take_psus > cfg.psus_per_stratum:
            raise ConfigError(
                f"cannot sample {take_psus} PSUs from "
                f"{cfg.psus_per_stratum} per stratum"
            )
        picked, w_parts = [], []
        for stratum in range(cfg.n_strata):
            chosen = rng.choice(cfg.psus_per_stratum, take_psus, replace=False)
            for psu in sorted(chosen):
                members = lists[stratum * cfg.psus_per_stratum + psu]
                if take_people > members.size:
                    raise ConfigError(
                        f"PSU s{stratum}u{psu} holds {members.size} people, "
                        f"cannot sample {take_people}"
                    )
                sampled = members[
                    rng.choice(members.size, take_people, replace=False)
                ]
                picked.append(np.sort(sampled))
                w_parts.append(
                    np.full(
                        take_people,
                        (cfg.psus_per_stratum / take_psus)
                        * (members.size / take_people),
                    )
                )
        idx = np.concatenate(picked)
        weights = np.concatenate(w_parts)
    else:
        raise ConfigError(f"unknown design object: {design!r}")

    if weight_errors is not None:
        eps = np.asarray(weight_errors, dtype=float)
        if eps.shape != (n,):
            raise ValueError(
                f"weight_errors must cover the whole frame ({n} people)"
            )
        weights = weights * eps[idx]

    order, starts = _report_slices(world)
    kp_names = world.kp_names
    kp_ints = world.kp_counts.astype(np.int64)
    records = []
    for pos, person in enumerate(idx):
        lo, hi = starts[person], starts[person + 1]
        reports = tuple(
            DeathReport(
                death_age=int(world.report_target_age[r]),
                death_sex=_SEX_CODES[world.report_target_sex_code[r]],
                tie_definition=cfg.tie_definition,
            )
            for r in order[lo:hi]
        )
        records.append(
            RespondentRecord(
                respondent_id=f"p{person}",
                stratum_id=f"s{world.stratum_of[person]}",
                psu_id=f"s{world.stratum_of[person]}u{world.psu_of[person]}",
                weight=float(weights[pos]),
                age=int(world.age[person]),
                sex=_SEX_CODES[world.sex_code[person]],
                tie_definition=cfg.tie_definition,
                kp_connections=dict(
                    zip(kp_names, (int(c) for c in kp_ints[person]))
                ),
                death_reports=reports,
            )
        )
    return records
