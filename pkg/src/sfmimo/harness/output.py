"""Run artifacts.

``manifest.cfg``
    The full config (loadable with :func:`sfmimo.harness.config.load`) plus
    ``[run]``, ``[policy]``, ``[summary]`` and ``[truth]`` sections.
``heatmap.csv``
    One row per grid cell: ``angle_deg,velocity_mps,range_m,count,truth``.
``trials.jsonl``
    One JSON object per trial: index, status, error, detected cells (as
    grid coordinates), carrier steps and stage diagnostics.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import config as config_io
from .experiment import ExperimentResult

MANIFEST = "manifest.cfg"
HEATMAP = "heatmap.csv"
TRIALS = "trials.jsonl"
HEATMAP_COLUMNS = ("angle_deg", "velocity_mps", "range_m", "count", "truth")

POLICY = {
    "lambda_rule": "kappa * sigma_c * sqrt(2 ln N); sigma_c = max per-column std of Theta^H n",
    "noise_model_for_lambda": "white fast-time thermal + jammer power; floor 1e-6 * max|Theta^H r|",
    "detector": "cells with |s| >= threshold * max|s| in the final stage",
    "occurrence_map": "a cell counts once per trial in which it is detected",
    "trial_seed": "numpy SeedSequence([master_seed, trial]), spawned into draw and noise streams",
}


def _num(x: float) -> str:
    return f"{x:.12g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_manifest(result: ExperimentResult, path: Path) -> None:
    parser = config_io.to_parser(result.config)
    cfg = result.config
    parser["run"] = {"master_seed": str(cfg.experiment.master_seed), "trials": str(cfg.experiment.trials),
                     "grid_size": str(result.occurrence.grid.size)}
    parser["policy"] = dict(POLICY)
    parser["summary"] = {k: str(v) for k, v in result.summary().items()}
    truth = {}
    for snap, cell in zip(result.snaps, result.occurrence.truth):
        a, b, c = result.occurrence.grid.point(cell)
        truth[f"target{snap['target']}_cell"] = f"{_num(math.degrees(a))}, {_num(b)}, {_num(c)}"
    for snap in result.snaps:
        k = snap["target"]
        truth[f"target{k}_snap"] = (f"{_num(math.degrees(snap['angle_rad']))} deg, {_num(snap['velocity_mps'])} m/s, "
                                    f"{_num(snap['range_m'])} m")
    parser["truth"] = truth
    with path.open("w", encoding="utf-8") as fh:
        parser.write(fh)


def write_heatmap(result: ExperimentResult, path: Path) -> None:
    occ = result.occurrence
    truth = set(occ.truth)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEATMAP_COLUMNS)
        for n, (a, b, c) in enumerate(occ.grid.points):
            w.writerow([_num(math.degrees(a)), _num(b), _num(c), int(occ.counts[n]), int(n in truth)])


def write_trials(result: ExperimentResult, path: Path) -> None:
    grid = result.occurrence.grid
    with path.open("w", encoding="utf-8") as fh:
        for r in result.records:
            cells = [[math.degrees(grid.point(n)[0]), grid.point(n)[1], grid.point(n)[2]] for n in r.detections]
            rec = {"trial": r.trial, "status": r.status, "error": r.error, "detections": cells,
                   "steps": r.steps, "stages": r.stages}
            fh.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")


def emit_results(result: ExperimentResult, out_dir, *, plots: bool = True) -> list[Path]:
    """Write the artifacts into ``out_dir`` (created if needed); returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = [out / MANIFEST, out / HEATMAP, out / TRIALS]
    write_manifest(result, paths[0])
    write_heatmap(result, paths[1])
    write_trials(result, paths[2])
    if plots:
        from .plotting import render_heatmaps
        paths += render_heatmaps(result.occurrence, out)
    return paths


def read_heatmap(path) -> list[dict]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{"angle_deg": float(r["angle_deg"]), "velocity_mps": float(r["velocity_mps"]),
             "range_m": float(r["range_m"]), "count": int(r["count"]), "truth": r["truth"] == "1"} for r in rows]


def read_trials(path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
