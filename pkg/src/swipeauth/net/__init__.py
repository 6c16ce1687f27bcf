"""Recurrent embedding network: parameters, forward/backward, training."""

from .params import (
    BatchNormParams,
    LstmLayerParams,
    ModelParams,
    init_model,
    load_checkpoint,
    save_checkpoint,
)
from .model import contrastive_loss, embed, embed_batch, recurrent_step
from .optimizer import AdamState, adam_step
from .train import TrainConfig, TrainResult, train
from .gradcheck import gradient_check

__all__ = [
    "AdamState",
    "BatchNormParams",
    "LstmLayerParams",
    "ModelParams",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "contrastive_loss",
    "embed",
    "embed_batch",
    "gradient_check",
    "init_model",
    "load_checkpoint",
    "recurrent_step",
    "save_checkpoint",
    "train",
]
