"""Toy multilevel CNN surrogate for normalized grid corrections."""

from .data import DatasetDir
from .model import ModelSpec, MultilevelModel
from .train import TrainConfig, load_checkpoint, train

__all__ = ["DatasetDir", "ModelSpec", "MultilevelModel", "TrainConfig",
           "load_checkpoint", "train"]
__version__ = "0.1.0"
