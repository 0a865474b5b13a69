"""From-scratch neural engine: dual-head CNN/DNN with analytic gradients."""

from .features import (FeatureScaler, SENTINEL_DB, destandardize, featurize,
                       featurize_batch, gains_to_db_plane, training_arrays)
from .layers import Conv2D, Dense, Flatten, ReLU, UpperClamp, softmax
from .losses import dual_head_loss, loss_gradients
from .network import (Network, NetworkSpec, TrainedModel, load_model,
                      save_model)
from .tensor import Tensor
from .training import Adam, EpochStats, TrainingConfig, train, write_trace_csv

__all__ = [
    "Adam", "Conv2D", "Dense", "EpochStats", "FeatureScaler", "Flatten",
    "Network", "NetworkSpec", "ReLU", "SENTINEL_DB", "Tensor", "TrainedModel",
    "TrainingConfig", "UpperClamp", "destandardize", "dual_head_loss",
    "featurize", "featurize_batch", "gains_to_db_plane", "load_model",
    "loss_gradients", "save_model", "softmax", "train", "training_arrays",
]
