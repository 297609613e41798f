"""JSON/CSV views of POVMs, records, and trial statistics.

JSON is the canonical machine format; floats are emitted with full
round-trip precision and keys are sorted, so identical inputs always
produce byte-identical files.  The CSV column order is frozen and
documented in the README.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .analysis import ProtocolRow, TrialStats
from .povm import DiscretePovm, WeightedProjectorElement
from .sampling import MeasurementRecord, ProtocolTag

TABLE_COLUMNS = [
    "protocol",
    "shots",
    "trials",
    "analytic_mean_x",
    "analytic_mean_y",
    "analytic_mean_z",
    "analytic_variance",
    "mean_x",
    "mean_y",
    "mean_z",
    "se_mean_x",
    "se_mean_y",
    "se_mean_z",
    "hs_variance",
    "se_hs_variance",
    "second_moment",
    "se_second_moment",
    "ml_converged_fraction",
    "mean_within_4se",
    "variance_within_4se",
]

RUN_COLUMNS = TABLE_COLUMNS[:3] + TABLE_COLUMNS[7:18]


def dumps(payload) -> str:
    """Deterministic JSON text (sorted keys, trailing newline)."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def povm_to_dict(povm: DiscretePovm) -> dict:
    return {
        "label": povm.label,
        "elements": [
            {"weight": float(e.weight), "direction": [float(v) for v in e.direction]}
            for e in povm.elements
        ],
    }


def povm_from_dict(payload: dict) -> DiscretePovm:
    elements = tuple(
        WeightedProjectorElement(item["weight"], np.array(item["direction"]))
        for item in payload["elements"]
    )
    return DiscretePovm(payload["label"], elements)


def record_to_dict(record: MeasurementRecord) -> dict:
    payload: dict = {"protocol": record.protocol.value, "shots": record.n_shots}
    if record.counts is not None:
        payload["counts"] = [int(c) for c in record.counts]
    else:
        payload["outcomes"] = [[float(v) for v in row] for row in record.outcomes]
    return payload


def record_from_dict(payload: dict) -> MeasurementRecord:
    tag = ProtocolTag(payload["protocol"])
    if "counts" in payload:
        return MeasurementRecord(tag, counts=np.array(payload["counts"], dtype=np.int64))
    return MeasurementRecord(tag, outcomes=np.array(payload["outcomes"], dtype=float))


def stats_to_dict(stats: TrialStats) -> dict:
    payload = {
        "trials": stats.trials,
        "mean": [float(v) for v in stats.mean],
        "bias": [float(v) for v in stats.bias],
        "hs_variance": stats.hs_variance,
        "second_moment": stats.second_moment,
        "se_mean": [float(v) for v in stats.se_mean],
        "se_hs_variance": stats.se_hs_variance,
        "se_second_moment": stats.se_second_moment,
    }
    if stats.ml_converged_fraction is not None:
        payload["ml_converged_fraction"] = stats.ml_converged_fraction
    return payload


def _stats_cells(protocol: str, shots: int, stats: TrialStats) -> dict:
    return {
        "protocol": protocol,
        "shots": shots,
        "trials": stats.trials,
        "mean_x": repr(float(stats.mean[0])),
        "mean_y": repr(float(stats.mean[1])),
        "mean_z": repr(float(stats.mean[2])),
        "se_mean_x": repr(float(stats.se_mean[0])),
        "se_mean_y": repr(float(stats.se_mean[1])),
        "se_mean_z": repr(float(stats.se_mean[2])),
        "hs_variance": repr(stats.hs_variance),
        "se_hs_variance": repr(stats.se_hs_variance),
        "second_moment": repr(stats.second_moment),
        "se_second_moment": repr(stats.se_second_moment),
        "ml_converged_fraction": (
            "" if stats.ml_converged_fraction is None
            else repr(stats.ml_converged_fraction)
        ),
    }


def run_csv(protocol: str, shots: int, stats: TrialStats) -> str:
    """Single-row CSV for one trial ensemble."""
    cells = _stats_cells(protocol, shots, stats)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=RUN_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerow({k: cells[k] for k in RUN_COLUMNS})
    return buffer.getvalue()


def table_row_to_dict(row: ProtocolRow, shots: int) -> dict:
    payload = {
        "protocol": row.tag.value,
        "shots": shots,
        "analytic_mean": (
            None if row.analytic_mean is None
            else [float(v) for v in row.analytic_mean]
        ),
        "analytic_variance": row.analytic_variance,
        "stats": stats_to_dict(row.stats),
        "mean_within_4se": row.mean_within_4se,
        "variance_within_4se": row.variance_within_4se,
    }
    return payload


def table_csv(rows: list[ProtocolRow], shots: int) -> str:
    """Frozen-column comparison table; analytic cells blank for ML."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        cells = _stats_cells(row.tag.value, shots, row.stats)
        if row.analytic_mean is not None:
            cells["analytic_mean_x"] = repr(float(row.analytic_mean[0]))
            cells["analytic_mean_y"] = repr(float(row.analytic_mean[1]))
            cells["analytic_mean_z"] = repr(float(row.analytic_mean[2]))
            cells["analytic_variance"] = repr(float(row.analytic_variance))
            cells["mean_within_4se"] = "pass" if row.mean_within_4se else "fail"
            cells["variance_within_4se"] = (
                "pass" if row.variance_within_4se else "fail"
            )
        else:
            cells["analytic_mean_x"] = ""
            cells["analytic_mean_y"] = ""
            cells["analytic_mean_z"] = ""
            cells["analytic_variance"] = ""
            cells["mean_within_4se"] = ""
            cells["variance_within_4se"] = ""
        writer.writerow(cells)
    return buffer.getvalue()
