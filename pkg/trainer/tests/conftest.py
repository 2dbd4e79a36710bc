"""Shared fixtures: small datasets generated through the dataset CLI of
the multigrid package, exercising the trainer strictly through the
exported directory format."""

import subprocess
import sys

import pytest

from correction_trainer.data import DatasetDir


def generate_dataset(out_dir, *, case=1, levels=2, p=3, seed=9,
                     train=4, validation=2, test=2, threads=None):
    """Invoke the dataset generator CLI in a subprocess."""
    argv = ["dataset", "--case", str(case), "--levels", str(levels),
            "--p", str(p), "--seed", str(seed), "--train", str(train),
            "--validation", str(validation), "--test", str(test),
            "--tol", "1e-10", "--cycles", "2000", "--out", str(out_dir)]
    if threads is not None:
        argv += ["--threads", str(threads)]
    code = (
        "import sys\n"
        "from obstacle_mg.cli import main\n"
        "sys.exit(main(sys.argv[1:]))\n"
    )
    proc = subprocess.run([sys.executable, "-c", code, *argv],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"dataset generation failed (rc {proc.returncode}):"
                           f"\n{proc.stdout}\n{proc.stderr}")
    return out_dir


def run_metrics(predictions_dir, dataset_dir, out_dir, split="test",
                skip_reference=True):
    """Invoke the metrics CLI in a subprocess; returns (rc, stdout+stderr)."""
    argv = ["metrics", str(predictions_dir), str(dataset_dir),
            "--split", split, "--out", str(out_dir), "--tol", "1e-10"]
    if skip_reference:
        argv.append("--skip-reference")
    code = (
        "import sys\n"
        "from obstacle_mg.cli import main\n"
        "sys.exit(main(sys.argv[1:]))\n"
    )
    proc = subprocess.run([sys.executable, "-c", code, *argv],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout + proc.stderr


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Two-level case-1 dataset: 4 train / 2 validation / 2 test samples."""
    out = tmp_path_factory.mktemp("data") / "small"
    return generate_dataset(out)


@pytest.fixture(scope="session")
def small_data(small_dataset):
    return DatasetDir(small_dataset)
