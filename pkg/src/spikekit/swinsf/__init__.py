"""Windowed-attention reconstruction network with cross-frame attention."""

from .attention import sw_msa, tsa
from .checkpoint import Checkpoint, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint
from .config import ModelConfig
from .network import (
    extract_spike_features,
    model_forward,
    model_loss,
    reconstruct,
    rssb_forward,
    sab_forward,
)
from .params import init_parameters, parameter_count, relative_position_index
from .windows import WindowBatch, attention_mask, window_partition, window_reverse

__all__ = [
    "ModelConfig",
    "WindowBatch",
    "window_partition",
    "window_reverse",
    "attention_mask",
    "sw_msa",
    "tsa",
    "sab_forward",
    "rssb_forward",
    "extract_spike_features",
    "model_forward",
    "model_loss",
    "reconstruct",
    "init_parameters",
    "parameter_count",
    "relative_position_index",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "read_checkpoint",
    "write_checkpoint",
]
