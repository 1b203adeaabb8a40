from .layers import FixedChannelLayer, IrsLayer, irs_backward, irs_forward
from .model import (
    EndToEndCache,
    EndToEndModel,
    export_phases,
    load_model,
    phases_sidecar,
    predict_doa,
    predict_doas,
    read_phases,
    received_to_input,
    save_model,
    write_phases,
)
from .trainer import (
    EpochRecord,
    TrainingConfig,
    TrainingError,
    TrainingResult,
    channel_noise,
    train_end_to_end,
    validation_loss,
    write_learning_curve,
)

__all__ = [
    "EndToEndCache",
    "EndToEndModel",
    "EpochRecord",
    "FixedChannelLayer",
    "IrsLayer",
    "TrainingConfig",
    "TrainingError",
    "TrainingResult",
    "channel_noise",
    "export_phases",
    "irs_backward",
    "irs_forward",
    "load_model",
    "phases_sidecar",
    "predict_doa",
    "predict_doas",
    "read_phases",
    "received_to_input",
    "save_model",
    "train_end_to_end",
    "validation_loss",
    "write_learning_curve",
    "write_phases",
]
