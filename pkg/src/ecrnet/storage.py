"""On-disk formats for datasets, fitted models and result tables.

Dataset directory::

    series.csv      header x0,...,x{d-1}; one row per time step
    truth_<k>.csv   one truth matrix per regime (k from 0), no header
    meta.json       segmentation, seeds, generator config, rescale log

Model directory::

    graph_<k>.csv   fitted regime graphs (a static fit writes graph_0.csv only)
    model.json      method, shapes, hyperparameters and the fit report

Numbers are written with 17 significant digits so files round-trip exactly
and re-runs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .model import GraphSequence, HyperParams, Segmentation, TimeSeries
from .simgen import GenConfig, GroundTruth, RescaleEvent

FMT = "%.17g"

RESULT_FIELDS = [
    "cell_id",
    "d",
    "K",
    "samples_per_regime",
    "replicate",
    "seed",
    "method",
    "total_shd",
    "per_regime_shd",
    "final_loss",
    "iterations",
    "stop_reason",
    "error",
]
TIMING_FIELDS = ["cell_id", "replicate", "method", "wall_ms"]
SUMMARY_FIELDS = ["cell_id", "d", "K", "samples_per_regime", "method", "mean_total_shd", "std_total_shd", "replicates"]


def write_matrix(path, w):
    np.savetxt(path, np.atleast_2d(w), delimiter=",", fmt=FMT)


def read_matrix(path):
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))


def _dump_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_dataset(directory, gt, ts, extra=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    header = ",".join(f"x{j}" for j in range(ts.d))
    np.savetxt(directory / "series.csv", ts.data, delimiter=",", fmt=FMT, header=header, comments="")
    for k, w in enumerate(gt.graphs):
        write_matrix(directory / f"truth_{k}.csv", w)
    meta = {
        "d": ts.d,
        "K": ts.K,
        "T": ts.T,
        "boundaries": list(ts.segmentation.boundaries),
        "seed": gt.seed,
        "gen_config": gt.gen_config.to_dict(),
        "rescale_events": [asdict(e) for e in gt.rescale_events],
    }
    meta.update(extra or {})
    _dump_json(directory / "meta.json", meta)


def read_dataset(directory):
    """Load ``(GroundTruth, TimeSeries, meta)`` from a dataset directory."""
    directory = Path(directory)
    if not (directory / "meta.json").is_file():
        raise FileNotFoundError(f"no dataset at {directory} (missing meta.json)")
    with open(directory / "meta.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    data = np.loadtxt(directory / "series.csv", delimiter=",", skiprows=1, ndmin=2)
    seg = Segmentation(tuple(meta["boundaries"]))
    ts = TimeSeries(data, seg)
    graphs = np.stack([read_matrix(directory / f"truth_{k}.csv") for k in range(meta["K"])])
    gt = GroundTruth(
        graphs=GraphSequence(graphs),
        segmentation=seg,
        seed=meta.get("seed"),
        gen_config=GenConfig(**meta["gen_config"]),
        rescale_events=[RescaleEvent(**e) for e in meta.get("rescale_events", [])],
    )
    return gt, ts, meta


def write_model(directory, method, graphs, report, hp, extra=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    graphs = np.asarray(graphs.graphs if isinstance(graphs, GraphSequence) else graphs, dtype=float)
    if graphs.ndim == 2:
        graphs = graphs[None]
    for old in directory.glob("graph_*.csv"):
        old.unlink()
    for k, w in enumerate(graphs):
        write_matrix(directory / f"graph_{k}.csv", w)
    info = {
        "method": method,
        "n_graphs": int(graphs.shape[0]),
        "d": int(graphs.shape[1]),
        "hyperparams": asdict(hp) if isinstance(hp, HyperParams) else hp,
        "report": report.to_dict() if hasattr(report, "to_dict") else report,
    }
    info.update(extra or {})
    _dump_json(directory / "model.json", info)


def read_model(directory):
    """Load ``(method, graphs[(n, d, d)], info)`` from a model directory."""
    directory = Path(directory)
    if not (directory / "model.json").is_file():
        raise FileNotFoundError(f"no model at {directory} (missing model.json)")
    with open(directory / "model.json", encoding="utf-8") as fh:
        info = json.load(fh)
    graphs = np.stack([read_matrix(directory / f"graph_{k}.csv") for k in range(info["n_graphs"])])
    return info["method"], graphs, info


def write_rows(path, rows, fieldnames):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fieldnames})


def append_row(path, row, fieldnames):
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        if new:
            writer.writeheader()
        writer.writerow({k: row.get(k, "") for k in fieldnames})


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
