from .tensor import (
    NonFiniteError,
    ShapeError,
    Tensor,
    concat,
    default_dtype,
    forward_backward,
    gather_last,
    log_softmax,
    maximum,
    minimum,
    no_grad,
    set_default_dtype,
    softmax,
    stack,
)
from .layers import ACTIVATIONS, MLP, Embedding, LayerNorm, LayerSpec, Linear, Sequential, build_layer
from .optim import FrozenParams, ParamStore, adamw_step, global_grad_norm
from .sampling import sample_categorical, sample_categorical_grid
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "ACTIVATIONS", "CheckpointError", "Embedding", "FrozenParams", "LayerNorm",
    "LayerSpec", "Linear", "MLP", "NonFiniteError", "ParamStore", "Sequential",
    "ShapeError", "Tensor", "adamw_step", "build_layer", "concat", "default_dtype",
    "forward_backward", "gather_last", "global_grad_norm", "load_checkpoint",
    "log_softmax", "maximum", "minimum", "no_grad", "sample_categorical",
    "sample_categorical_grid", "save_checkpoint", "set_default_dtype", "softmax",
    "stack",
]
