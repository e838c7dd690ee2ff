"""Output serialization: tidy tables, manifests, atomic writes.

Every CLI run writes its tables plus a ``manifest.json`` recording
input content hashes, the echoed configuration, any seeds, and the
package version, so a result directory is self-describing. Writes go
through a temp file in the destination directory followed by an
atomic rename; readers never see a half-written file.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping

import pandas as pd

from . import __version__
from .bootstrap import EstimateWithCI
from .estimators import RateTable
from .groups import GroupId
from .sensitivity import GridCell
from .sibling import SiblingRateTable
from .simulate import SyntheticWorld
from .surveydata import RespondentRecord


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_csv(frame: pd.DataFrame, path):
    atomic_write_text(path, frame.to_csv(index=False))


def write_manifest(
    out_dir,
    command: str,
    inputs: Mapping[str, str | Path],
    outputs: Iterable[str],
    config_echo: Mapping | None = None,
    seed: int | None = None,
):
    manifest = {
        "package": "netsurvival",
        "version": __version__,
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "inputs": {
            name: {"path": str(path), "sha256": file_sha256(path)}
            for name, path in inputs.items()
        },
        "outputs": sorted(outputs),
        "seed": seed,
        "config": config_echo or {},
    }
    atomic_write_text(
        Path(out_dir) / "manifest.json", json.dumps(manifest, indent=2) + "\n"
    )


def _group_columns(group: GroupId) -> dict:
    return {
        "group": group.label,
        "sex": group.sex,
        "age_lo": group.age_lo,
        "age_hi": group.age_hi,
    }


def rate_table_frame(table: RateTable, tie_definition: str = "") -> pd.DataFrame:
    rows = []
    for est in table:
        rows.append(
            {
                "tie_definition": tie_definition,
                **_group_columns(est.group),
                "report_total": est.report_total,
                "avg_degree": est.degree.avg_degree,
                "deaths": est.deaths,
                "exposure": est.exposure,
                "rate": est.rate,
            }
        )
    for group, error in table.failures.items():
        rows.append(
            {
                "tie_definition": tie_definition,
                **_group_columns(group),
                "error": type(error).__name__,
            }
        )
    return pd.DataFrame(rows)


def sibling_table_frame(
    table: SiblingRateTable, tie_definition: str = "sibling"
) -> pd.DataFrame:
    rows = []
    for est in table:
        rows.append(
            {
                "tie_definition": tie_definition,
                **_group_columns(est.group),
                "deaths": est.deaths,
                "exposure": est.exposure,
                "rate": est.rate,
            }
        )
    for group, error in table.failures.items():
        rows.append(
            {
                "tie_definition": tie_definition,
                **_group_columns(group),
                "error": type(error).__name__,
            }
        )
    return pd.DataFrame(rows)


def ci_summary_frame(
    results: Mapping[GroupId, EstimateWithCI], tie_definition: str = ""
) -> pd.DataFrame:
    rows = [
        {
            "tie_definition": tie_definition,
            **_group_columns(g),
            "estimate": r.estimate,
            "lower": r.lower,
            "upper": r.upper,
            "level": r.level,
            "n_replicates": r.n_replicates,
            "n_failed": r.n_failed,
            "degenerate": r.degenerate,
        }
        for g, r in results.items()
    ]
    return pd.DataFrame(rows)


def replicate_values_frame(
    results: Mapping[GroupId, EstimateWithCI]
) -> pd.DataFrame:
    """Long table of retained replicate values, for external plotting."""
    rows = []
    for g, r in results.items():
        for k, value in enumerate(r.replicate_values):
            rows.append({"group": g.label, "replicate": k, "value": value})
    return pd.DataFrame(rows, columns=["group", "replicate", "value"])


def sensitivity_grid_frame(cells: Iterable[GridCell]) -> pd.DataFrame:
    rows = []
    for cell in cells:
        for group, rate in cell.rates.items():
            rows.append(
                {
                    "degree_ratio": cell.degree_ratio,
                    "reporting_ratio": cell.reporting_ratio,
                    "group": group.label,
                    "adjusted_rate": rate,
                }
            )
    return pd.DataFrame(
        rows, columns=["degree_ratio", "reporting_ratio", "group", "adjusted_rate"]
    )


def records_frames(
    records: Iterable[RespondentRecord],
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Respondent and death-report tables in the ingestion schema."""
    resp_rows, death_rows = [], []
    kp_names: list[str] = []
    for rec in records:
        for name in rec.kp_connections:
            if name not in kp_names:
                kp_names.append(name)
    for rec in records:
        row = {
            "respondent_id": rec.respondent_id,
            "stratum_id": rec.stratum_id,
            "psu_id": rec.psu_id,
            "weight": rec.weight,
            "age": rec.age,
            "sex": rec.sex,
            "tie_definition": rec.tie_definition,
        }
        for name in kp_names:
            row[f"kp_{name}"] = rec.kp_connections.get(name, 0)
        resp_rows.append(row)
        for rep in rec.death_reports:
            death_rows.append(
                {
                    "respondent_id": rec.respondent_id,
                    "death_age": rep.death_age,
                    "death_sex": rep.death_sex,
                }
            )
    return (
        pd.DataFrame(resp_rows),
        pd.DataFrame(
            death_rows, columns=["respondent_id", "death_age", "death_sex"]
        ),
    )


def world_truth_dict(world: SyntheticWorld) -> dict:
    """JSON-ready per-cell truth for a synthetic world."""
    cells = {}
    for group, t in world.truth.items():
        cells[group.label] = {
            "deaths": t.deaths,
            "exposure": t.exposure,
            "death_rate": t.death_rate,
            "report_total": t.report_total,
            "true_report_total": t.true_report_total,
            "visible_ties": t.visible_ties,
            "decedent_frame_ties": t.decedent_frame_ties,
            "avg_degree_deaths": t.avg_degree_deaths,
            "frame_ties": t.frame_ties,
            "avg_degree_frame": t.avg_degree_frame,
            "kp_connection_total": t.kp_connection_total,
        }
    return {
        "frame_size": world.frame_size,
        "kp_sizes": dict(world.config.kp_sizes),
        "seed": world.config.seed,
        "exact_conditions": world.config.exact_conditions,
        "cells": cells,
    }
