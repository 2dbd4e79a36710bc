"""Read-only access to an exported multilevel dataset directory:
manifest.json plus raw little-endian float64 arrays, one file per
(role, level, split), each of shape (count, n, n) in row-major layout."""

import json
from pathlib import Path

import numpy as np

SPLITS = ("train", "validation", "test")
INPUT_ROLES = ("kappa", "forcing", "obstacle")


class DataError(RuntimeError):
    pass


def array_filename(role: str, level: int, split: str) -> str:
    return f"{role}_L{level}_{split}.f64"


class DatasetDir:
    """Lazy view over the dataset directory format."""

    def __init__(self, directory):
        self.directory = Path(directory)
        manifest_path = self.directory / "manifest.json"
        if not manifest_path.exists():
            raise DataError(f"no manifest.json in {directory}")
        with open(manifest_path) as fh:
            self.manifest = json.load(fh)
        self._index = {(r["role"], r["level"], r["split"]): r
                       for r in self.manifest["arrays"]}

    @property
    def levels(self) -> int:
        return int(self.manifest["levels"])

    @property
    def grid_sizes(self) -> list:
        return [int(n) for n in self.manifest["grid_sizes"]]

    @property
    def normalization(self) -> np.ndarray:
        return np.asarray(self.manifest["normalization"], dtype=np.float64)

    def count(self, split: str) -> int:
        return int(self.manifest["counts"][split])

    def array(self, role: str, level: int, split: str) -> np.ndarray:
        rec = self._index.get((role, level, split))
        if rec is None:
            raise DataError(f"no array for ({role}, L{level}, {split})")
        path = self.directory / rec["file"]
        data = np.fromfile(path, dtype="<f8")
        expected = int(np.prod(rec["shape"]))
        if data.size != expected:
            raise DataError(f"{rec['file']}: {data.size} values, "
                            f"expected {expected}")
        return data.reshape(rec["shape"])

    def inputs(self, level: int, split: str) -> np.ndarray:
        """Stacked (count, 3, n, n) model inputs: kappa, forcing, obstacle."""
        chans = [self.array(role, level, split) for role in INPUT_ROLES]
        return np.stack(chans, axis=1)

    def targets(self, level: int, split: str) -> np.ndarray:
        """Normalized corrections, shape (count, n, n)."""
        return self.array("correction", level, split)
