from .encoders import (
    MeanEmbeddingEncoder,
    MissingRepresentationError,
    PrecomputedEncoder,
    ProjectionEncoder,
)
from .model import (
    CHECKPOINT_FORMAT_VERSION,
    Head,
    MtModel,
    flat_loss,
    head_predict,
    hier_forward,
    load_checkpoint,
    mse_loss,
    new_model,
    predict_all,
    save_checkpoint,
)
from .train import (
    HistoryRow,
    TrainConfig,
    TrainData,
    TrainingDivergedError,
    build_training_data,
    grad_check,
    stilt_transfer,
    train,
    write_history_csv,
)

__all__ = [
    "CHECKPOINT_FORMAT_VERSION",
    "Head",
    "HistoryRow",
    "MeanEmbeddingEncoder",
    "MissingRepresentationError",
    "MtModel",
    "PrecomputedEncoder",
    "ProjectionEncoder",
    "TrainConfig",
    "TrainData",
    "TrainingDivergedError",
    "build_training_data",
    "flat_loss",
    "grad_check",
    "head_predict",
    "hier_forward",
    "load_checkpoint",
    "mse_loss",
    "new_model",
    "predict_all",
    "save_checkpoint",
    "stilt_transfer",
    "train",
    "write_history_csv",
]
