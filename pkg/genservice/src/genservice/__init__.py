"""Slot-filling generation service for counterfactual templates.

Consumes the upstream toolkit's artifacts (training masks, orientation sets,
snapshots) strictly through its CLI and file formats, trains a small oriented
encoder-decoder, and serves fills over HTTP.
"""

from .checkpoint import Bundle, load_checkpoint, save_checkpoint
from .data import OrientationTable, TrainingExample, encode_example, read_training_rows
from .errors import ConfigError, FormatError, GenServiceError, SubprocessError
from .model import ModelSpec, OrientedT5, build_model
from .service import create_app, app_from_checkpoint
from .training import (
    DomainAccuracyEvaluator,
    TrainConfig,
    TrainResult,
    train_model,
    train_steps,
)
from .vocab import WordVocab, sentinel, stem_word

__version__ = "0.1.0"

__all__ = [
    "Bundle",
    "ConfigError",
    "DomainAccuracyEvaluator",
    "FormatError",
    "GenServiceError",
    "ModelSpec",
    "OrientationTable",
    "OrientedT5",
    "SubprocessError",
    "TrainConfig",
    "TrainResult",
    "TrainingExample",
    "WordVocab",
    "app_from_checkpoint",
    "build_model",
    "create_app",
    "encode_example",
    "load_checkpoint",
    "read_training_rows",
    "save_checkpoint",
    "sentinel",
    "stem_word",
    "train_model",
    "train_steps",
    "__version__",
]
