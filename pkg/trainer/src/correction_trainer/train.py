"""Training loop: per-level models fitted to normalized corrections with
a relative H1 loss, deterministic for a fixed seed."""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .data import DatasetDir
from .forms import relative_h1_error
from .model import ModelSpec, MultilevelModel


class TrainError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 3e-3
    lr_decay: float = 0.5          # multiplicative step decay
    lr_step_epochs: int = 60       # epochs between decays
    lumped_mass: bool = False
    seed: int = 0

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_json(cls, d: dict) -> "TrainConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def _spacings(grid_sizes):
    return [1.0 / (n - 1) for n in grid_sizes]


def _seed_everything(seed: int):
    torch.manual_seed(seed)
    np.random.seed(seed % 2 ** 32)
    torch.use_deterministic_algorithms(True)


def train(dataset_dir, spec: ModelSpec, cfg: TrainConfig, out_dir,
          log_every: int = 10):
    """Fit one model per level; returns (model, history) and writes the
    checkpoint plus per-level loss curves under out_dir."""
    data = DatasetDir(dataset_dir)
    if spec.levels != data.levels:
        raise TrainError(f"model has {spec.levels} levels, "
                         f"dataset has {data.levels}")
    _seed_everything(cfg.seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = MultilevelModel(spec)
    spacings = _spacings(data.grid_sizes)
    history = []

    for lvl in range(1, data.levels + 1):
        x = torch.from_numpy(data.inputs(lvl, "train")).to(torch.float64)
        t = torch.from_numpy(data.targets(lvl, "train")).to(torch.float64)
        has_val = data.count("validation") > 0
        if has_val:
            xv = torch.from_numpy(data.inputs(lvl, "validation")).to(torch.float64)
            tv = torch.from_numpy(data.targets(lvl, "validation")).to(torch.float64)
        net = model.level(lvl).to(torch.float64)
        opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
        sched = torch.optim.lr_scheduler.StepLR(
            opt, step_size=cfg.lr_step_epochs, gamma=cfg.lr_decay)
        n = x.shape[0]
        order = torch.arange(n)
        gen = torch.Generator().manual_seed(cfg.seed + lvl)
        for epoch in range(1, cfg.epochs + 1):
            order = torch.randperm(n, generator=gen)
            net.train()
            for lo in range(0, n, cfg.batch_size):
                idx = order[lo:lo + cfg.batch_size]
                opt.zero_grad()
                loss = relative_h1_error(net(x[idx]), t[idx],
                                         spacings[lvl - 1], cfg.lumped_mass)
                if not torch.isfinite(loss):
                    raise TrainError(
                        f"loss diverged at level {lvl}, epoch {epoch}")
                loss.backward()
                opt.step()
            sched.step()
            if epoch % log_every == 0 or epoch == cfg.epochs:
                net.eval()
                with torch.no_grad():
                    tr = float(relative_h1_error(net(x), t,
                                                 spacings[lvl - 1]))
                    va = float(relative_h1_error(net(xv), tv,
                                                 spacings[lvl - 1])) \
                        if has_val else float("nan")
                history.append({"level": lvl, "epoch": epoch,
                                "train_h1": tr, "validation_h1": va})

    _write_history(history, out_dir / "loss_curves.csv")
    save_checkpoint(model, spec, cfg, data, out_dir / "checkpoint.pt")
    return model, history


def _write_history(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "epoch", "train_h1", "validation_h1"])
        for row in history:
            w.writerow([row["level"], row["epoch"],
                        row["train_h1"], row["validation_h1"]])


def save_checkpoint(model: MultilevelModel, spec: ModelSpec,
                    cfg: TrainConfig, data: DatasetDir, path):
    torch.save({
        "model_spec": spec.to_json(),
        "train_config": cfg.to_json(),
        "state_dict": model.state_dict(),
        "grid_sizes": data.grid_sizes,
        "normalization": data.normalization.tolist(),
        "case": data.manifest["case"],
    }, path)


def load_checkpoint(path):
    blob = torch.load(path, map_location="cpu", weights_only=False)
    spec = ModelSpec.from_json(blob["model_spec"])
    model = MultilevelModel(spec).to(torch.float64)
    model.load_state_dict(blob["state_dict"])
    model.eval()
    return model, blob


def final_train_errors(history) -> dict:
    """Last logged training error per level."""
    out = {}
    for row in history:
        out[row["level"]] = row["train_h1"]
    return out
