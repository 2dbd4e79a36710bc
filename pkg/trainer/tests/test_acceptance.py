"""End-to-end acceptance runs for the correction trainer.

Each test prints a single machine-readable verdict line:
    ACCEPTANCE <name>: PASS|FAIL (<details>)
"""

import json
import time

import numpy as np

from conftest import generate_dataset, run_metrics
from correction_trainer.cli import main
from correction_trainer.model import ModelSpec
from correction_trainer.train import TrainConfig, final_train_errors, train


def verdict(name: str, ok: bool, detail: str):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def test_overfit_capacity(tmp_path):
    """Four training samples driven to per-level relative H1 error
    <= 1e-2 within the epoch budget."""
    t0 = time.time()
    data = generate_dataset(tmp_path / "data", levels=3, p=5, seed=77,
                            train=4, validation=0, test=2)
    spec = ModelSpec(levels=3, unets_per_level=(4, 2, 1), width=16)
    cfg = TrainConfig(epochs=2000, batch_size=4, learning_rate=3e-3,
                      lr_decay=0.5, lr_step_epochs=500, seed=0)
    _, hist = train(data, spec, cfg, tmp_path / "run", log_every=500)
    finals = final_train_errors(hist)
    worst = max(finals.values())
    ok = worst <= 1e-2
    verdict("overfit_capacity", ok,
            f"per-level H1 {sorted(finals.values())}, worst {worst:.3e}, "
            f"{time.time() - t0:.0f}s")


def test_end_to_end_pipeline(tmp_path):
    """Train at L=3 on 500 case-1 samples (p=5), predict the test split,
    and confirm the metrics report: E_MR_H1 <= 0.1, finite per-level
    errors at every level, per-level CSV table emitted, within one hour."""
    t0 = time.time()
    data = generate_dataset(tmp_path / "data", levels=3, p=5, seed=202,
                            train=500, validation=50, test=50, threads=8)
    run = tmp_path / "run"
    rc = main(["train", str(data), "--out", str(run),
               "--epochs", "200", "--batch-size", "32", "--lr", "3e-3",
               "--lr-decay", "0.5", "--lr-step-epochs", "60",
               "--width", "16", "--unets", "4,2,1", "--seed", "0"])
    assert rc == 0
    pred = tmp_path / "pred"
    rc = main(["predict", str(run / "checkpoint.pt"), str(data),
               "--split", "test", "--out", str(pred)])
    assert rc == 0
    met = tmp_path / "met"
    rc, log = run_metrics(pred, data, met, split="test",
                          skip_reference=False)
    assert rc == 0, log
    with open(met / "report.json") as fh:
        report = json.load(fh)
    elapsed = time.time() - t0
    per_level = report["per_level_h1"]
    ok = (report["e_mr_h1"] <= 0.1
          and len(per_level) == 3
          and all(np.isfinite(per_level))
          and (met / "per_level_errors.csv").exists()
          and elapsed <= 3600.0)
    verdict("end_to_end_pipeline", ok,
            f"E_MR_H1 {report['e_mr_h1']:.3e}, per-level "
            f"{[f'{e:.3e}' for e in per_level]}, {elapsed:.0f}s")
