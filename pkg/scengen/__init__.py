"""
Scengen - Load Scenario Generation
Joint cooling/heating/power daily scenarios from a moment-matching generator
trained in the latent space of an auto-encoder.
"""

__version__ = "1.0.0"

from .archive import ModelArchive
from .autoencoder import AutoEncoder, train_autoencoder
from .config import RunConfig, load_run_config
from .dataset import LoadClass, LoadSample, Normalizer
from .errors import ConfigError, DataError, ScengenError, TrainingDivergence
from .evaluation import MetricReport, evaluate
from .generator import ARCHITECTURES, ScenarioGenerator, mmd2, train_generator
from .optim import Optimizer, UpdateRule
from .pipeline import cmd_evaluate, cmd_generate, cmd_sweep, cmd_train
from .synthetic import make_synthetic_dataset

__all__ = [
    "ARCHITECTURES",
    "AutoEncoder",
    "ConfigError",
    "DataError",
    "LoadClass",
    "LoadSample",
    "MetricReport",
    "ModelArchive",
    "Normalizer",
    "Optimizer",
    "RunConfig",
    "ScenarioGenerator",
    "ScengenError",
    "TrainingDivergence",
    "UpdateRule",
    "cmd_evaluate",
    "cmd_generate",
    "cmd_sweep",
    "cmd_train",
    "evaluate",
    "load_run_config",
    "make_synthetic_dataset",
    "mmd2",
    "train_autoencoder",
    "train_generator",
]
