"""Run configuration: a strict JSON schema shared by every subcommand.

Unknown keys are rejected so typos fail loudly instead of silently using
defaults. Input paths are checked for existence before any work starts;
which paths are required depends on the subcommand.
"""

from __future__ import annotations

import json
import os

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError
from .model import DecodeConfig, ModelConfig
from .training import TrainConfig


class PathsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    stories: str | None = None
    embeddings: str | None = None
    checkpoint: str | None = None
    candidates: str | None = None
    report: str | None = None
    loss_log: str | None = None


class ModelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    image_dim: int = Field(ge=1)
    embed_dim: int = Field(ge=1)
    hidden_dim: int = Field(ge=1)
    tie_embeddings: bool = True
    carry_cell_state: bool = True
    freeze_embeddings: bool = False
    precision: str = Field(default="double", pattern="^(double|single)$")
    vocab_min_count: int = Field(default=1, ge=1)


class TrainSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    clip_norm: float = 5.0
    batch_size: int = Field(default=16, ge=1)
    epochs: int = Field(default=10, ge=0)
    # 0 disables the skip-gram embedding pretraining pass
    skipgram_epochs: int = Field(default=0, ge=0)
    skipgram_window: int = Field(default=5, ge=1)


class DecodeSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_len: int = Field(default=30, ge=0)
    beam_width: int = Field(default=1, ge=1)


class MetricsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # which scales the evaluate command prints
    scale: str = Field(default="both", pattern="^(percent|fraction|both)$")


class RatingsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    candidates: str | None = None
    humans: str | None = None
    log: str = "ratings.jsonl"
    host: str = "127.0.0.1"
    port: int = 8080
    raters_per_story: int = Field(default=3, ge=1)
    static_dir: str | None = None


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    paths: PathsSection = PathsSection()
    model: ModelSection | None = None
    train: TrainSection = TrainSection()
    decode: DecodeSection = DecodeSection()
    metrics: MetricsSection = MetricsSection()
    ratings: RatingsSection = RatingsSection()
    seed: int = 0

    def model_config_for(self, vocab_size: int) -> ModelConfig:
        if self.model is None:
            raise ConfigError("config has no model section")
        m = self.model
        return ModelConfig(
            image_dim=m.image_dim,
            embed_dim=m.embed_dim,
            hidden_dim=m.hidden_dim,
            vocab_size=vocab_size,
            tie_embeddings=m.tie_embeddings,
            carry_cell_state=m.carry_cell_state,
            freeze_embeddings=m.freeze_embeddings,
            precision=m.precision,
        )

    def train_config(self) -> TrainConfig:
        t = self.train
        return TrainConfig(
            lr=t.lr,
            beta1=t.beta1,
            beta2=t.beta2,
            eps=t.eps,
            clip_norm=t.clip_norm,
            batch_size=t.batch_size,
            epochs=t.epochs,
            seed=self.seed,
        )

    def decode_config(self) -> DecodeConfig:
        return DecodeConfig(max_len=self.decode.max_len, beam_width=self.decode.beam_width)


def load_run_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"config {path} is invalid:\n{exc}") from None


def require_input_path(label: str, value: str | None) -> str:
    """Existence check for a configured input path; both absence from the
    config and absence on disk are validation failures."""
    if not value:
        raise ConfigError(f"config is missing required path: {label}")
    if not os.path.exists(value):
        raise ConfigError(f"{label} path does not exist: {value}")
    return value
