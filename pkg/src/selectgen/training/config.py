"""Run and strategy configuration.

The on-disk config is a single JSON document with sections `strategy`,
`model`, `data`, `run`, and `eval`.  Parsing is strict: unknown keys raise
ConfigError so typos never silently fall back to defaults.  The schema is
documented in the README.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError

STRATEGIES = ("bottom_up", "soft_select", "reinforce_select", "vrs")
HEURISTICS = ("overlap", "embedding")

_KIND_ALIASES = {
    "bottomup": "bottom_up",
    "bottom_up": "bottom_up",
    "softselect": "soft_select",
    "soft_select": "soft_select",
    "reinforceselect": "reinforce_select",
    "reinforce_select": "reinforce_select",
    "vrs": "vrs",
}


def _strict(cls, d: dict, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
    known = {f.name for f in fields(cls)}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    return d


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1.2e-6
    grad_clip: float = 5.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("optimizer.lr must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("optimizer betas must be in [0, 1)")
        if self.eps <= 0 or self.grad_clip <= 0:
            raise ConfigError("optimizer.eps and grad_clip must be positive")
        if self.weight_decay < 0:
            raise ConfigError("optimizer.weight_decay must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        return cls(**_strict(cls, d, "strategy.optimizer"))


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "vrs"
    target_ratio: float = 0.35  # the selecting-ratio target the penalty pulls toward
    penalty_weight: float = 1.0  # fixed lagrangian multiplier on penalty terms
    kl_target_coeff: float = 0.15  # KL target in nats per visible source token
    kl_target_abs: float | None = None  # absolute override for the KL target
    pretrain_patience: int = 10  # consecutive stalled evaluations before the joint phase starts
    pretrain_fraction: float = 0.8  # cap on the supervised warm-up, as a share of total steps
    supervise_prior_in_pretrain: bool = False
    heuristic: str = "overlap"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        kind = _KIND_ALIASES.get(str(self.kind).lower().replace("-", "_"))
        if kind is None:
            raise ConfigError(f"unknown strategy kind {self.kind!r}; "
                              f"expected one of {STRATEGIES}")
        object.__setattr__(self, "kind", kind)
        if not 0.0 < self.target_ratio <= 1.0:
            raise ConfigError("target_ratio must be in (0, 1]")
        if self.penalty_weight < 0:
            raise ConfigError("penalty_weight must be >= 0")
        if self.kl_target_coeff < 0:
            raise ConfigError("kl_target_coeff must be >= 0")
        if self.kl_target_abs is not None and self.kl_target_abs < 0:
            raise ConfigError("kl_target_abs must be >= 0")
        if self.pretrain_patience < 1:
            raise ConfigError("pretrain_patience must be >= 1")
        if not 0.0 <= self.pretrain_fraction <= 1.0:
            raise ConfigError("pretrain_fraction must be in [0, 1]")
        if self.heuristic not in HEURISTICS:
            raise ConfigError(f"heuristic must be one of {HEURISTICS}")

    def kl_target(self, n_visible: int) -> float:
        """KL budget in nats; scales with source length unless overridden."""
        if self.kl_target_abs is not None:
            return self.kl_target_abs
        return self.kl_target_coeff * n_visible

    @property
    def has_pretrain_phase(self) -> bool:
        return self.kind in ("reinforce_select", "vrs")

    @classmethod
    def from_dict(cls, d: dict) -> "StrategyConfig":
        d = dict(_strict(cls, d, "strategy"))
        if "optimizer" in d:
            d["optimizer"] = OptimizerConfig.from_dict(d["optimizer"])
        return cls(**d)


@dataclass(frozen=True)
class DataConfig:
    train: str = ""
    valid: str | None = None
    test: str | None = None
    grammar: str = ""
    valid_fraction: float = 0.1  # used only when no valid path is given
    max_source_len: int = 64
    max_target_len: int = 32

    def __post_init__(self):
        if not self.train:
            raise ConfigError("data.train path is required")
        if not self.grammar:
            raise ConfigError("data.grammar path is required (supplies stopwords)")
        if not 0.0 < self.valid_fraction < 1.0:
            raise ConfigError("data.valid_fraction must be in (0, 1)")
        if self.max_source_len < 1 or self.max_target_len < 1:
            raise ConfigError("sequence length limits must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "DataConfig":
        return cls(**_strict(cls, d, "data"))


@dataclass(frozen=True)
class RunSection:
    steps: int = 600
    batch_size: int = 8
    eval_interval: int = 50
    eval_examples: int = 64
    seed: int = 0
    out_dir: str = "out"
    checkpoint_name: str = "checkpoint.json"
    metrics_name: str = "metrics.jsonl"

    def __post_init__(self):
        for key in ("steps", "batch_size", "eval_interval", "eval_examples"):
            if getattr(self, key) < 1:
                raise ConfigError(f"run.{key} must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "RunSection":
        return cls(**_strict(cls, d, "run"))


@dataclass(frozen=True)
class EvalConfig:
    mask_samples: int = 50
    per_mask_samples: int = 10
    beam_width: int = 5
    temperature: float = 1.0
    seed: int = 0
    max_examples: int | None = None
    report_name: str = "report.json"

    def __post_init__(self):
        if self.mask_samples < 1 or self.per_mask_samples < 1:
            raise ConfigError("eval sample counts must be >= 1")
        if self.beam_width < 1:
            raise ConfigError("eval.beam_width must be >= 1")
        if self.temperature <= 0:
            raise ConfigError("eval.temperature must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "EvalConfig":
        return cls(**_strict(cls, d, "eval"))


@dataclass(frozen=True)
class RunConfig:
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    model: dict = field(default_factory=dict)  # ModelConfig fields minus vocab_size
    data: DataConfig = field(default_factory=lambda: DataConfig(train="train.tsv", grammar="grammar.json"))
    run: RunSection = field(default_factory=RunSection)
    eval: EvalConfig = field(default_factory=EvalConfig)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(_strict(cls, d, "config"))
        out = {}
        if "strategy" in d:
            out["strategy"] = StrategyConfig.from_dict(d["strategy"])
        if "model" in d:
            if not isinstance(d["model"], dict):
                raise ConfigError("model: expected an object")
            if "vocab_size" in d["model"]:
                raise ConfigError("model.vocab_size is derived from the grammar")
            out["model"] = dict(d["model"])
        if "data" in d:
            out["data"] = DataConfig.from_dict(d["data"])
        if "run" in d:
            out["run"] = RunSection.from_dict(d["run"])
        if "eval" in d:
            out["eval"] = EvalConfig.from_dict(d["eval"])
        return cls(**out)

    def to_dict(self) -> dict:
        return asdict(self)


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return RunConfig.from_dict(doc)
