"""
Centralized configuration for the vision-span laboratory.

Process settings come from the environment (``.env`` is loaded first);
run settings are a validated RunConfig merged from defaults, an optional
key=value file and command-line overrides.
"""
import math
import os
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from models import AttentionKind, ModelConfig, TaskKind, TaskSpec, TrainConfig
from tasks.vocab import FIRST_ID
from utils.errors import ConfigError

env_path = Path(__file__).parent / ".env"
load_dotenv(dotenv_path=env_path)


class Config:
    """Global process configuration."""

    # === Logging ===
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv("LOG_FORMAT", "json")  # json | console

    # === Numerics ===
    PRECISION: str = os.getenv("VISIONSPAN_PRECISION", "float64")
    WORKERS: int = int(os.getenv("VISIONSPAN_WORKERS", "1"))

    # === File Paths ===
    PROJECT_ROOT: Path = Path(__file__).parent
    RUNS_DIR: Path = Path(os.getenv("VISIONSPAN_RUNS_DIR", str(PROJECT_ROOT / "runs")))

    @classmethod
    def ensure_directories(cls):
        """Create necessary directories if they don't exist."""
        cls.RUNS_DIR.mkdir(parents=True, exist_ok=True)

    @classmethod
    def validate(cls) -> Tuple[bool, Optional[str]]:
        """
        Validate configuration.
        Returns: (is_valid, error_message)
        """
        if cls.PRECISION not in ("float64", "float32"):
            return False, f"Invalid VISIONSPAN_PRECISION: {cls.PRECISION}"
        if cls.LOG_FORMAT not in ("json", "console"):
            return False, f"Invalid LOG_FORMAT: {cls.LOG_FORMAT}"
        if cls.WORKERS < 1:
            return False, f"VISIONSPAN_WORKERS must be >= 1, got {cls.WORKERS}"
        return True, None


def _parse_float(value):
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "∞"):
        return math.inf
    return value


class RunConfig(BaseModel):
    """Every setting a command can read; unknown keys are rejected."""

    # task
    task: TaskKind = "block_swap"
    vocab_size: int = Field(default=200, gt=0)
    min_chunks: int = Field(default=3, gt=0)
    max_chunks: int = Field(default=6, gt=0)
    min_chunk_len: int = Field(default=2, gt=0)
    max_chunk_len: int = Field(default=4, gt=0)
    swap_prob: float = Field(default=0.3, ge=0.0, le=1.0)
    long_mode: bool = False
    size: int = Field(default=11000, gt=0)
    dev_size: int = Field(default=500, ge=0)
    test_size: int = Field(default=500, ge=0)

    # model
    attention: AttentionKind = "flexible"
    embed_dim: int = Field(default=32, gt=0)
    hidden_dim: int = Field(default=64, gt=0)
    preout_dim: int = Field(default=48, gt=0)
    sigma: float = Field(default=1.5, gt=0)
    local_half_window: int = Field(default=3, ge=1)
    max_len: int = Field(default=160, gt=0)

    # training
    batch_size: int = Field(default=16, gt=0)
    lr: float = Field(default=1e-4, gt=0)
    epochs: int = Field(default=30, gt=0)
    halve_from_epoch: int = Field(default=20, gt=0)
    clip_norm: float = Field(default=3.0, gt=0)
    beta: float = Field(default=0.1, ge=0)
    finetune_epochs: int = Field(default=1, gt=0)
    val_beam: int = Field(default=1, gt=0)

    # decoding / evaluation
    beam: int = Field(default=5, gt=0)
    tau: float = Field(default=math.inf, gt=0)
    taus: List[float] = Field(default_factory=lambda: [0.3, 0.5, 0.8, 1.0, 1.2, 1.4, 1.6, 5.0, 8.0, 999.0])
    sigmas: List[float] = Field(default_factory=lambda: [1.5, 5.0, 7.5, 10.0])
    max_bleu_loss: float = Field(default=0.005, ge=0)

    # run
    seed: int = Field(default=7, ge=0)
    workers: int = Field(default=Config.WORKERS, ge=1)
    precision: str = Config.PRECISION
    out: str = str(Config.RUNS_DIR)

    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")

    @field_validator("tau", mode="before")
    @classmethod
    def _tau_inf(cls, v):
        return _parse_float(v)

    @field_validator("taus", "sigmas", mode="before")
    @classmethod
    def _float_list(cls, v):
        if isinstance(v, str):
            v = [p for p in v.replace(",", " ").split() if p]
        return [_parse_float(x) for x in v]

    @field_validator("precision")
    @classmethod
    def _precision_known(cls, v: str) -> str:
        if v not in ("float64", "float32"):
            raise ValueError("precision must be float64 or float32")
        return v

    def model_settings(self, attention: Optional[str] = None) -> ModelConfig:
        return ModelConfig(
            src_vocab=self.vocab_size + FIRST_ID,
            tgt_vocab=self.vocab_size + FIRST_ID,
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
            preout_dim=self.preout_dim,
            attention_kind=attention or self.attention,
            penalty_sigma=self.sigma,
            local_half_window=self.local_half_window,
            max_len=self.max_len,
        )

    def train_settings(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            lr=self.lr,
            epochs=self.epochs,
            halve_from_epoch=min(self.halve_from_epoch, self.epochs),
            clip_norm=self.clip_norm,
            beta=self.beta,
            finetune_epochs=self.finetune_epochs,
            seed=self.seed,
            val_beam=self.val_beam,
        )

    def task_spec(self) -> TaskSpec:
        return TaskSpec(
            kind=self.task,
            vocab_size=self.vocab_size,
            min_chunks=self.min_chunks,
            max_chunks=self.max_chunks,
            min_chunk_len=self.min_chunk_len,
            max_chunk_len=self.max_chunk_len,
            swap_prob=self.swap_prob,
            long_mode=self.long_mode,
            seed=self.seed,
            size=self.size,
            max_len=self.max_len,
        )

    def split_ratios(self) -> Tuple[float, float, float]:
        dev, test = self.dev_size / self.size, self.test_size / self.size
        return 1.0 - dev - test, dev, test

    def resolved(self) -> Dict[str, object]:
        """Fully resolved settings, echoed into every artifact."""
        return self.model_dump(mode="json")


def parse_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """One key=value per line; '#' starts a comment."""
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, object]] = None) -> RunConfig:
    """Defaults < config file < overrides (``None`` overrides are ignored)."""
    merged: Dict[str, object] = {}
    if path is not None:
        merged.update(parse_config_file(path))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(merged) - set(RunConfig.model_fields))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    try:
        return RunConfig(**merged)
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(str(p) for p in err["loc"])
        raise ConfigError(f"invalid value for '{where}': {err['msg']}") from None
