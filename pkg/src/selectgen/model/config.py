"""Model hyperparameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from ..errors import ConfigError


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    embed_dim: int = 32
    hidden: int = 64
    selector_hidden: int = 64
    target_embed_dim: int = 32
    target_hidden: int = 32
    dropout: float = 0.3
    logit_clamp: float = 16.0
    # structural slots (the appended end-of-source position) keep this
    # selection probability as a constant, outside the learned selector
    structural_pin: float = 1.0 - 1e-7
    # mean-pool the masked encoder states by sequence length; switching this
    # on divides by the selected mass instead
    pool_by_selected: bool = False
    max_source_len: int = 64
    max_target_len: int = 32

    def __post_init__(self):
        if self.vocab_size < 5:
            raise ConfigError("vocab_size must cover the reserved symbols")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if not 0.0 < self.structural_pin < 1.0:
            raise ConfigError("structural_pin must be in (0, 1)")
        if self.logit_clamp <= 0.0:
            raise ConfigError("logit_clamp must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown model config keys: {sorted(extra)}")
        return cls(**d)
