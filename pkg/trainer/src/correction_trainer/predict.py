"""Prediction: run the per-level models over a split and write the
arrays in the dataset layout, plus the weighted-sum assembled solution."""

import json
from pathlib import Path

import numpy as np
import torch

from .data import DatasetDir
from .forms import assemble_solution
from .model import MultilevelModel


class PredictError(RuntimeError):
    pass


def predict_arrays(model: MultilevelModel, data: DatasetDir, split: str):
    """Per-level normalized-correction predictions, list of (count, n, n)."""
    if model.spec.levels != data.levels:
        raise PredictError(f"checkpoint has {model.spec.levels} levels, "
                           f"dataset has {data.levels}")
    out = []
    model.eval()
    with torch.no_grad():
        for lvl in range(1, data.levels + 1):
            x = torch.from_numpy(data.inputs(lvl, split)).to(torch.float64)
            out.append(model.level(lvl)(x).numpy().astype(np.float64))
    return out


def write_predictions(per_level: list, normalization: np.ndarray,
                      split: str, out_dir) -> Path:
    """Write prediction_L{l}_{split}.f64 per level, the assembled
    prediction_solution_L{L}_{split}.f64, and predictions.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    levels = len(per_level)
    files = []
    for lvl, arr in enumerate(per_level, start=1):
        name = f"prediction_L{lvl}_{split}.f64"
        np.asarray(arr, dtype="<f8").tofile(out_dir / name)
        files.append({"file": name, "role": "prediction", "level": lvl,
                      "split": split, "shape": list(np.shape(arr)),
                      "dtype": "float64"})
    combined = assemble_solution(per_level, normalization)
    name = f"prediction_solution_L{levels}_{split}.f64"
    combined.astype("<f8").tofile(out_dir / name)
    files.append({"file": name, "role": "prediction_solution",
                  "level": levels, "split": split,
                  "shape": list(combined.shape), "dtype": "float64"})
    with open(out_dir / "predictions.json", "w") as fh:
        json.dump({"levels": levels, "split": split,
                   "normalization": [float(b) for b in normalization],
                   "arrays": files}, fh, indent=2, sort_keys=True)
    return out_dir


def predict(model: MultilevelModel, dataset_dir, split: str, out_dir) -> Path:
    data = DatasetDir(dataset_dir)
    per_level = predict_arrays(model, data, split)
    return write_predictions(per_level, data.normalization, split, out_dir)
