from .core import ACTIVATIONS, ForwardRequired, Module, Param, get_activation, relu, sigmoid, softmax
from .gradcheck import GradCheckReport, check_gradients, check_layer, grad_check
from .io import FormatError, load_tensors, save_tensors
from .layers import (
    GRU,
    MLP,
    RNN,
    TCN,
    Dense,
    DilatedCausalConv,
    ResidualBlock,
    ResidualLayer,
    residual_block_forward,
)
from .models import GruOnly, MlpRegressor, Regressor, RnnOnly, TcnGru

__all__ = [
    "ACTIVATIONS",
    "Dense",
    "DilatedCausalConv",
    "FormatError",
    "ForwardRequired",
    "GRU",
    "GradCheckReport",
    "GruOnly",
    "MLP",
    "MlpRegressor",
    "Module",
    "Param",
    "RNN",
    "Regressor",
    "ResidualBlock",
    "ResidualLayer",
    "RnnOnly",
    "TCN",
    "TcnGru",
    "check_gradients",
    "check_layer",
    "get_activation",
    "grad_check",
    "load_tensors",
    "relu",
    "residual_block_forward",
    "save_tensors",
    "sigmoid",
    "softmax",
]
