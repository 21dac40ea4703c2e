"""Desk-scale trainer for the four Karel induction regimes."""

from .data import GridWorld, Task, delta_tokens, encode_features, read_dataset
from .models import MetaInductionModel, PlainInductionModel
from .regimes import RegimeConfig, run_regime
from .training import TrainSettings, TrainingDiverged, adapt, train_meta, train_plain
from .vocab import VOCAB, VOCAB_SIZE

__version__ = "0.1.0"
