"""On-disk dataset: manifest.json plus raw little-endian float64 arrays,
one file per (role, level, split), full-grid row-major layout with zeros
on the boundary for dof-type roles."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridHierarchy, GridLevel, interior_mask
from .multilevel import MultilevelSample

SCHEMA_VERSION = 1
SPLITS = ("train", "validation", "test")
INPUT_ROLES = ("kappa", "forcing", "obstacle")
DOF_ROLES = ("solution", "correction")
ROLES = INPUT_ROLES + DOF_ROLES


class DatasetError(RuntimeError):
    pass


def array_filename(role: str, level: int, split: str) -> str:
    return f"{role}_L{level}_{split}.f64"


def embed_full(v: np.ndarray, level: GridLevel) -> np.ndarray:
    """Interior dof vector -> full-grid vector with zero boundary."""
    full = np.zeros(level.node_count)
    full[interior_mask(level)] = v
    return full


def extract_interior(full: np.ndarray, level: GridLevel) -> np.ndarray:
    return full[interior_mask(level)]


@dataclass(frozen=True)
class DatasetManifest:
    schema_version: int
    case: dict
    levels: int
    grid_sizes: list
    counts: dict
    normalization: list
    master_seed: int
    split_seed_offsets: dict
    sample_indices: dict
    arrays: list

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "case": self.case,
            "levels": self.levels,
            "grid_sizes": self.grid_sizes,
            "counts": self.counts,
            "normalization": self.normalization,
            "master_seed": self.master_seed,
            "split_seed_offsets": self.split_seed_offsets,
            "sample_indices": self.sample_indices,
            "arrays": self.arrays,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DatasetManifest":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise DatasetError(f"unsupported schema version {d.get('schema_version')}")
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def split_index_ranges(counts: dict) -> dict:
    """Disjoint ranges of sample indices: train first, then validation, test."""
    start = 0
    out = {}
    for split in SPLITS:
        n = int(counts[split])
        out[split] = (start, start + n)
        start += n
    return out


def export_dataset(samples_by_split: dict, normalization: np.ndarray,
                   hierarchy: GridHierarchy, case_json: dict, counts: dict,
                   directory) -> DatasetManifest:
    """Write one binary per (role, level, split).  Corrections are stored
    pre-normalized by b_l; solutions stay raw."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    num_levels = len(hierarchy)
    catalog = []
    offsets = {s: r[0] for s, r in split_index_ranges(counts).items()}
    for split in SPLITS:
        samples: list[MultilevelSample] = samples_by_split.get(split, [])
        for k in range(num_levels):
            level = hierarchy[k]
            n = level.nodes_per_side
            for role in ROLES:
                rows = []
                for s in samples:
                    if role == "kappa":
                        rows.append(s.problems[k].kappa)
                    elif role == "forcing":
                        rows.append(s.problems[k].forcing)
                    elif role == "obstacle":
                        rows.append(s.problems[k].obstacle)
                    elif role == "solution":
                        rows.append(embed_full(s.solutions[k], level))
                    else:
                        rows.append(embed_full(s.corrections[k] / normalization[k], level))
                arr = np.asarray(rows, dtype="<f8").reshape(len(samples), n, n)
                fname = array_filename(role, k + 1, split)
                arr.tofile(directory / fname)
                catalog.append({"file": fname, "role": role, "level": k + 1,
                                "split": split, "shape": [len(samples), n, n],
                                "dtype": "float64"})
    manifest = DatasetManifest(
        schema_version=SCHEMA_VERSION,
        case=case_json,
        levels=num_levels,
        grid_sizes=[lv.nodes_per_side for lv in hierarchy.levels],
        counts={s: int(counts[s]) for s in SPLITS},
        normalization=[float(b) for b in normalization],
        master_seed=int(case_json.get("master_seed", 0)),
        split_seed_offsets=offsets,
        sample_indices={s: [int(smp.sample_index) for smp in samples_by_split.get(s, [])]
                        for s in SPLITS},
        arrays=catalog,
    )
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest.to_json(), fh, indent=2, sort_keys=True)
    verify_catalog(directory, manifest)
    return manifest


def verify_catalog(directory, manifest: DatasetManifest):
    directory = Path(directory)
    for rec in manifest.arrays:
        path = directory / rec["file"]
        if not path.exists():
            raise DatasetError(f"missing array file {rec['file']}")
        expected = int(np.prod(rec["shape"])) * 8
        actual = path.stat().st_size
        if actual != expected:
            raise DatasetError(
                f"{rec['file']}: byte length {actual} does not match shape "
                f"{rec['shape']} (expected {expected})")


class Dataset:
    """Read-only view over an exported directory; arrays load lazily."""

    def __init__(self, directory):
        self.directory = Path(directory)
        manifest_path = self.directory / "manifest.json"
        if not manifest_path.exists():
            raise DatasetError(f"no manifest.json in {directory}")
        with open(manifest_path) as fh:
            self.manifest = DatasetManifest.from_json(json.load(fh))
        verify_catalog(self.directory, self.manifest)
        self._index = {(r["role"], r["level"], r["split"]): r
                       for r in self.manifest.arrays}

    def array(self, role: str, level: int, split: str) -> np.ndarray:
        rec = self._index.get((role, level, split))
        if rec is None:
            raise DatasetError(f"no array for ({role}, L{level}, {split})")
        data = np.fromfile(self.directory / rec["file"], dtype="<f8")
        return data.reshape(rec["shape"])

    @property
    def normalization(self) -> np.ndarray:
        return np.asarray(self.manifest.normalization)


def import_dataset(directory) -> Dataset:
    return Dataset(directory)
