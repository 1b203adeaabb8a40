from .artifact import FORMAT_VERSION, load_parameters, save_parameters
from .layers import (
    DenseLayer,
    DropoutSpec,
    ForwardCache,
    NetworkError,
    StaleCacheError,
    activate,
    activation_grad,
)
from .losses import mse_grad, mse_loss
from .model import FC_HIDDEN, Gradients, MlpRegressor, fc_regressor, parameter_count
from .optim import AdamState, ReduceLROnPlateau, adam_step

__all__ = [
    "FC_HIDDEN",
    "FORMAT_VERSION",
    "AdamState",
    "DenseLayer",
    "DropoutSpec",
    "ForwardCache",
    "Gradients",
    "MlpRegressor",
    "NetworkError",
    "ReduceLROnPlateau",
    "StaleCacheError",
    "activate",
    "activation_grad",
    "adam_step",
    "fc_regressor",
    "load_parameters",
    "mse_grad",
    "mse_loss",
    "parameter_count",
    "save_parameters",
]
