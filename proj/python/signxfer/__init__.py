"""Cross-domain sign recognition: pipeline stages, models, and metrics."""

from signxfer._core import (
    Classifier,
    ConfigError,
    DataError,
    FullModel,
    NumericalError,
    ShapeError,
    bce_loss,
    default_config,
    map_at_tiou,
    matmul,
    row_softmax,
    run,
    temporal_augment,
    temporal_maxpool,
    tiou,
    topk_accuracy,
)

__all__ = [
    "Classifier",
    "ConfigError",
    "DataError",
    "FullModel",
    "NumericalError",
    "ShapeError",
    "bce_loss",
    "default_config",
    "map_at_tiou",
    "matmul",
    "row_softmax",
    "run",
    "temporal_augment",
    "temporal_maxpool",
    "tiou",
    "topk_accuracy",
]
