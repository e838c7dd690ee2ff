"""Command-line interface.

Each subcommand reads CSV/JSON inputs, writes tidy CSV outputs plus a
manifest into ``--out-dir``, and exits nonzero with a one-line message
on bad input. Seeds are mandatory wherever randomness is involved so
reruns reproduce byte-identical outputs. ``NETSURV_THREADS`` caps the
bootstrap's worker threads without changing results.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import __version__, io
from .bootstrap import bootstrap_estimate, make_replicates
from .config import AnalysisConfig, prepare_survey
from .diagnostics import (
    deaths_per_interview,
    internal_consistency_holdout,
    loo_degree,
)
from .errors import NetworkSurvivalError
from .estimators import RateEstimator, network_survival_rate
from .groups import parse_group_label
from .lifetable import death_probability, schedule_for_sex
from .sensitivity import DEFAULT_GRID, sensitivity_grid
from .sibling import (
    DEFAULT_WINDOW_MONTHS,
    SiblingRateEstimator,
    expand_sibling_histories,
    load_siblings,
)
from .simulate import SimConfig, design_from_dict, draw_sample, generate_world
from .surveydata import load_known_populations, load_respondents


def _fail(err: Exception) -> "NoReturn":  # noqa: F821
    click.echo(f"error: {err}", err=True)
    sys.exit(1)


def _load_prepared(config_path, respondents, deaths, known_pops, tie_definition):
    config = AnalysisConfig.from_json(config_path)
    loaded = load_respondents(respondents, deaths)
    kp_table = load_known_populations(known_pops)
    prepared = prepare_survey(
        loaded.records, kp_table, config, tie_definition=tie_definition
    )
    return config, loaded, prepared


def _tie_label(prepared) -> str:
    if prepared.tie_definition is not None:
        return prepared.tie_definition
    seen = {r.tie_definition for r in prepared.records}
    return seen.pop() if len(seen) == 1 else ""


def _parse_grid(raw: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"not a comma-separated float list: {raw!r}")
    if not values:
        raise click.BadParameter("empty grid")
    return values


@click.group()
@click.version_option(version=__version__, prog_name="netsurvival")
def main():
    """Estimate adult death rates from network reports in surveys."""


resp_opt = click.option(
    "--respondents", required=True, type=click.Path(exists=True, dir_okay=False)
)
deaths_opt = click.option(
    "--deaths", required=True, type=click.Path(exists=True, dir_okay=False)
)
kp_opt = click.option(
    "--known-pops", required=True, type=click.Path(exists=True, dir_okay=False)
)
config_opt = click.option(
    "--config", required=True, type=click.Path(exists=True, dir_okay=False)
)
out_dir_opt = click.option(
    "--out-dir", required=True, type=click.Path(file_okay=False)
)
tie_opt = click.option(
    "--tie-definition", default=None, help="Override the config's tie filter."
)


@main.command()
@config_opt
@resp_opt
@deaths_opt
@kp_opt
@tie_opt
@out_dir_opt
def estimate(config, respondents, deaths, known_pops, tie_definition, out_dir):
    """Estimate death rates by age-sex cell; writes estimates.csv."""
    try:
        cfg, loaded, prepared = _load_prepared(
            config, respondents, deaths, known_pops, tie_definition
        )
        table = network_survival_rate(
            prepared.records,
            prepared.kp_table,
            prepared.scheme,
            prepared.frame_totals,
        )
    except (NetworkSurvivalError, OSError) as err:
        _fail(err)
    frame = io.rate_table_frame(table, _tie_label(prepared))
    out = Path(out_dir)
    io.atomic_write_csv(frame, out / "estimates.csv")
    io.write_manifest(
        out,
        command="estimate",
        inputs={
            "config": config,
            "respondents": respondents,
            "deaths": deaths,
            "known_pops": known_pops,
        },
        outputs=["estimates.csv"],
        config_echo={
            "tie_definition": prepared.tie_definition,
            "frame_size": prepared.frame_totals.frame_size,
            "frame_size_source": prepared.frame_totals.source,
            "excluded_by_age": prepared.excluded_by_age,
            "topcoded_entries": prepared.topcoded_entries,
            "incomplete_death_reports": loaded.incomplete_death_reports,
        },
    )
    click.echo(f"wrote {out / 'estimates.csv'}")


@main.command()
@click.option(
    "--siblings", "siblings_path", required=True,
    type=click.Path(exists=True, dir_okay=False),
)
@config_opt
@click.option("--window-months", default=DEFAULT_WINDOW_MONTHS, show_default=True)
@out_dir_opt
def sibling(siblings_path, config, window_months, out_dir):
    """Death rates from sibling histories; writes sibling_rates.csv."""
    try:
        cfg = AnalysisConfig.from_json(config)
        rows = load_siblings(siblings_path)
        contributions = expand_sibling_histories(
            rows, cfg.scheme, window_months
        )
        table = SiblingRateEstimator(cfg.scheme).table(contributions)
    except (NetworkSurvivalError, OSError) as err:
        _fail(err)
    out = Path(out_dir)
    io.atomic_write_csv(
        io.sibling_table_frame(table), out / "sibling_rates.csv"
    )
    io.write_manifest(
        out,
        command="sibling",
        inputs={"config": config, "siblings": siblings_path},
        outputs=["sibling_rates.csv"],
        config_echo={"window_months": window_months},
    )
    click.echo(f"wrote {out / 'sibling_rates.csv'}")


@main.command()
@config_opt
@resp_opt
@deaths_opt
@kp_opt
@tie_opt
@click.option(
    "--estimator", "which", type=click.Choice(["rates", "sibling"]),
    default="rates", show_default=True,
)
@click.option(
    "--siblings", "siblings_path", default=None,
    type=click.Path(exists=True, dir_okay=False),
    help="Required with --estimator sibling.",
)
@click.option("--window-months", default=DEFAULT_WINDOW_MONTHS, show_default=True)
@click.option("--replicates", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--level", default=0.95, show_default=True)
@out_dir_opt
def bootstrap(
    config, respondents, deaths, known_pops, tie_definition, which,
    siblings_path, window_months, replicates, seed, level, out_dir,
):
    """Percentile bootstrap intervals; writes estimates_ci.csv and
    replicates.csv."""
    try:
        if which == "sibling":
            if siblings_path is None:
                raise click.UsageError("--estimator sibling needs --siblings")
            cfg = AnalysisConfig.from_json(config)
            rows = load_siblings(siblings_path)
            units = expand_sibling_histories(rows, cfg.scheme, window_months)
            estimator = SiblingRateEstimator(cfg.scheme)
            tie = "sibling"
            inputs = {"config": config, "siblings": siblings_path}
        else:
            cfg, loaded, prepared = _load_prepared(
                config, respondents, deaths, known_pops, tie_definition
            )
            units = prepared.records
            estimator = RateEstimator(
                prepared.kp_table, prepared.scheme, prepared.frame_totals
            )
            tie = _tie_label(prepared)
            inputs = {
                "config": config,
                "respondents": respondents,
                "deaths": deaths,
                "known_pops": known_pops,
            }
        weights = make_replicates(units, replicates, seed)
        results = bootstrap_estimate(estimator, units, weights, level=level)
    except (NetworkSurvivalError, OSError) as err:
        _fail(err)
    out = Path(out_dir)
    io.atomic_write_csv(io.ci_summary_frame(results, tie), out / "estimates_ci.csv")
    io.atomic_write_csv(io.replicate_values_frame(results), out / "replicates.csv")
    io.write_manifest(
        out,
        command="bootstrap",
        inputs=inputs,
        outputs=["estimates_ci.csv", "replicates.csv"],
        seed=seed,
        config_echo={
            "estimator": which,
            "replicates": replicates,
            "level": level,
        },
    )
    click.echo(f"wrote {out / 'estimates_ci.csv'}")


@main.command()
@click.option(
    "--estimates", "estimates_path", required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="CSV with group and rate columns (estimate output works).",
)
@click.option("--from-age", default=15, show_default=True)
@click.option("--to-age", default=60, show_default=True)
@out_dir_opt
def lifetable(estimates_path, from_age, to_age, out_dir):
    """Probability of dying between two ages; writes lifetable.csv."""
    try:
        table = pd.read_csv(estimates_path)
        rate_column = "rate" if "rate" in table.columns else "estimate"
        if "group" not in table.columns or rate_column not in table.columns:
            raise NetworkSurvivalError(
                f"{estimates_path}: need 'group' and 'rate' (or 'estimate') columns"
            )
        rows = []
        ties = (
            sorted(table["tie_definition"].astype(str).unique())
            if "tie_definition" in table.columns
            else [""]
        )
        for tie in ties:
            chunk = (
                table[table["tie_definition"].astype(str) == tie]
                if tie != "" or "tie_definition" in table.columns
                else table
            )
            chunk = chunk.dropna(subset=[rate_column])
            rates = {
                parse_group_label(g): float(r)
                for g, r in zip(chunk["group"], chunk[rate_column])
            }
            for sex in sorted({g.sex for g in rates}):
                schedule = schedule_for_sex(rates, sex)
                rows.append(
                    {
                        "tie_definition": tie,
                        "sex": sex,
                        "from_age": from_age,
                        "to_age": to_age,
                        "death_probability": death_probability(
                            schedule, from_age, to_age
                        ),
                    }
                )
    except (NetworkSurvivalError, OSError) as err:
        _fail(err)
    out = Path(out_dir)
    io.atomic_write_csv(pd.DataFrame(rows), out / "lifetable.csv")
    io.write_manifest(
        out,
        command="lifetable",
        inputs={"estimates": estimates_path},
        outputs=["lifetable.csv"],
        config_echo={"from_age": from_age, "to_age": to_age},
    )
    click.echo(f"wrote {out / 'lifetable.csv'}")


@main.command()
@click.option(
    "--estimates", "estimates_path", required=True,
    type=click.Path(exists=True, dir_okay=False),
)
@click.option(
    "--grid", default=",".join(str(v) for v in DEFAULT_GRID),
    show_default=True,
    help="Comma-separated factor values, used for both grid axes.",
)
@out_dir_opt
def sensitivity(estimates_path, grid, out_dir):
    """What-if adjusted rates over a factor grid; writes sensitivity.csv."""
    try:
        table = pd.read_csv(estimates_path)
        rate_column = "rate" if "rate" in table.columns else "estimate"
        if "group" not in table.columns or rate_column not in table.columns:
            raise NetworkSurvivalError(
                f"{estimates_path}: need 'group' and 'rate' (or 'estimate') columns"
            )
        table = table.dropna(subset=[rate_column])
        rates = {
            parse_group_label(g): float(r)
            for g, r in zip(table["group"], table[rate_column])
        }
        values = _parse_grid(grid)
        cells = sensitivity_grid(rates, values, values)
    except (NetworkSurvivalError, OSError) as err:
        _fail(err)
    out = Path(out_dir)
    io.atomic_write_csv(io.sensitivity_grid_frame(cells), out / "sensitivity.csv")
    io.write_manifest(
        out,
        command="sensitivity",
        inputs={"estimates": estimates_path},
        outputs=["sensitivity.csv"],
        config_echo={"grid": list(values)},
    )
    click.echo(f"wrote {out / 'sensitivity.csv'}")


@main.command()
@click.option(
    "--config", "sim_config_path", required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Simulation config JSON.",
)
@click.option("--seed", default=None, type=int, help="Override the config seed.")
@out_dir_opt
def simulate(sim_config_path, seed, out_dir):
    """Generate a synthetic world and a survey extract from it.

    Writes world_truth.json plus respondents.csv, deaths.csv and
    known_populations.csv in the ingestion schema; the extract follows
    the config's sample_design (default census)."""
    try:
        with open(sim_config_path) as handle:
            raw = json.load(handle)
        design = design_from_dict(raw.pop("sample_design", {"type": "census"}))
        if seed is not None:
            raw["seed"] = seed
        if "seed" not in raw:
            raise NetworkSurvivalError(
                "simulation needs a seed (config key or --seed)"
            )
        sim_config = SimConfig.from_dict(raw)
        world = generate_world(sim_config)
        records = draw_sample(world, design, seed=sim_config.seed + 1)
    except (NetworkSurvivalError, OSError, json.JSONDecodeError) as err:
        _fail(err)
    out = Path(out_dir)
    respondents, deaths = io.records_frames(records)
    io.atomic_write_csv(respondents, out / "respondents.csv")
    io.atomic_write_csv(deaths, out / "deaths.csv")
    io.atomic_write_csv(
        pd.DataFrame(
            [{"name": k, "size": v} for k, v in sim_config.kp_sizes.items()]
        ),
        out / "known_populations.csv",
    )
    io.atomic_write_text(
        out / "world_truth.json",
        json.dumps(io.world_truth_dict(world), indent=2) + "\n",
    )
    io.write_manifest(
        out,
        command="simulate",
        inputs={"config": sim_config_path},
        outputs=[
            "world_truth.json", "respondents.csv",
            "deaths.csv", "known_populations.csv",
        ],
        seed=sim_config.seed,
        config_echo={"sample_design": type(design).__name__},
    )
    click.echo(f"wrote world and extract under {out}")


@main.command()
@config_opt
@resp_opt
@deaths_opt
@kp_opt
@tie_opt
@out_dir_opt
def diagnose(config, respondents, deaths, known_pops, tie_definition, out_dir):
    """Data-quality tables: report volume, hold-out sizes, leave-one-out
    degrees."""
    try:
        cfg, loaded, prepared = _load_prepared(
            config, respondents, deaths, known_pops, tie_definition
        )
        per_tie = {}
        ties = sorted({r.tie_definition for r in loaded.records})
        for tie in ties:
            subset = [r for r in loaded.records if r.tie_definition == tie]
            per_tie[tie] = deaths_per_interview(subset)
        holdout = internal_consistency_holdout(
            prepared.records, prepared.kp_table
        )
        loo = loo_degree(prepared.records, prepared.kp_table, prepared.scheme)
    except (NetworkSurvivalError, OSError) as err:
        _fail(err)
    out = Path(out_dir)
    io.atomic_write_csv(
        pd.DataFrame(
            [
                {
                    "tie_definition": tie,
                    "death_reports": y.death_reports,
                    "interviews": y.interviews,
                    "per_interview": y.per_interview,
                }
                for tie, y in per_tie.items()
            ]
        ),
        out / "deaths_per_interview.csv",
    )
    io.atomic_write_csv(
        pd.DataFrame(
            [
                {
                    "population": h.name,
                    "predicted_size": h.predicted_size,
                    "known_size": h.known_size,
                    "ratio": h.ratio,
                }
                for h in holdout
            ]
        ),
        out / "internal_consistency.csv",
    )
    io.atomic_write_csv(loo.to_frame(), out / "loo_degree.csv")
    io.write_manifest(
        out,
        command="diagnose",
        inputs={
            "config": config,
            "respondents": respondents,
            "deaths": deaths,
            "known_pops": known_pops,
        },
        outputs=[
            "deaths_per_interview.csv",
            "internal_consistency.csv",
            "loo_degree.csv",
        ],
        config_echo={"tie_definition": prepared.tie_definition},
    )
    click.echo(f"wrote diagnostics under {out}")


if __name__ == "__main__":
    main()
