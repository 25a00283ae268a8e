from .checkpoint import load_checkpoint, save_checkpoint
from .critics import MlpCritic, TransformerCritic
from .encoding import attention, encoding_matrix, positional_encoding, softmax
from .mlp import MlpArch, init_mlp_params, mlp_backward, mlp_forward
from .optim import AdamState, adam_update, polyak_update
from .transformer import (
    TransformerArch,
    init_transformer_params,
    transformer_backward,
    transformer_forward,
)

__all__ = [
    "AdamState",
    "MlpArch",
    "MlpCritic",
    "TransformerArch",
    "TransformerCritic",
    "adam_update",
    "attention",
    "encoding_matrix",
    "init_mlp_params",
    "init_transformer_params",
    "load_checkpoint",
    "mlp_backward",
    "mlp_forward",
    "polyak_update",
    "positional_encoding",
    "save_checkpoint",
    "softmax",
    "transformer_backward",
    "transformer_forward",
]
