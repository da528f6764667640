from .checkpoint import checkpoint_id, load_checkpoint, save_checkpoint
from .config import ModelConfig
from .generate import Hypothesis, beam, greedy, sample
from .network import (
    PARTITIONS,
    BernoulliVector,
    DecoderState,
    EncodedSource,
    Model,
    bernoulli_entropy,
    bernoulli_kl,
    best_select,
    mask_log_prob,
    partition_of,
    sample_mask,
)

__all__ = [
    "PARTITIONS",
    "BernoulliVector",
    "DecoderState",
    "EncodedSource",
    "Hypothesis",
    "Model",
    "ModelConfig",
    "beam",
    "bernoulli_entropy",
    "bernoulli_kl",
    "best_select",
    "checkpoint_id",
    "greedy",
    "load_checkpoint",
    "mask_log_prob",
    "partition_of",
    "sample",
    "sample_mask",
    "save_checkpoint",
]
