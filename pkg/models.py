"""
Unified Data Models for the vision-span laboratory.
Configuration records, per-step attention records, decode traces and
evaluation reports shared by every package.
"""
import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

AttentionKind = Literal["global", "local", "flexible"]
TaskKind = Literal["copy", "reverse", "block_swap"]

# Reserved vocabulary ids
PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
RESERVED_TOKENS = ("<pad>", "<s>", "</s>", "<unk>")

# ==========================================
# CONFIGURATION MODELS
# ==========================================


class ModelConfig(BaseModel):
    """Encoder-decoder dimensions and attention settings."""
    src_vocab: int = Field(gt=0)
    tgt_vocab: int = Field(gt=0)
    embed_dim: int = Field(default=32, gt=0)
    hidden_dim: int = Field(default=64, gt=0)
    preout_dim: int = Field(default=48, gt=0)
    attention_kind: AttentionKind = "flexible"
    penalty_sigma: float = Field(default=1.5, gt=0)
    local_half_window: int = Field(default=3, ge=1)
    max_len: int = Field(default=160, gt=0)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @property
    def context_dim(self) -> int:
        return 2 * self.hidden_dim


class TrainConfig(BaseModel):
    """Optimisation settings."""
    batch_size: int = Field(default=16, gt=0)
    lr: float = Field(default=1e-4, gt=0)
    epochs: int = Field(default=30, gt=0)
    halve_from_epoch: int = Field(default=20, gt=0)
    clip_norm: float = Field(default=3.0, gt=0)
    beta: float = Field(default=0.1, ge=0)
    finetune_epochs: int = Field(default=1, gt=0)
    seed: int = Field(default=1234, ge=0)
    val_beam: int = Field(default=1, gt=0)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _halving_within_run(self) -> "TrainConfig":
        if self.halve_from_epoch > self.epochs:
            raise ValueError(f"halve_from_epoch ({self.halve_from_epoch}) exceeds epochs ({self.epochs})")
        return self


class TaskSpec(BaseModel):
    """Synthetic parallel-corpus generator settings."""
    kind: TaskKind = "block_swap"
    vocab_size: int = Field(default=200, gt=0)
    min_chunks: int = Field(default=3, gt=0)
    max_chunks: int = Field(default=6, gt=0)
    min_chunk_len: int = Field(default=2, gt=0)
    max_chunk_len: int = Field(default=4, gt=0)
    swap_prob: float = Field(default=0.3, ge=0.0, le=1.0)
    long_mode: bool = False
    seed: int = Field(default=7, ge=0)
    size: int = Field(default=11000, gt=0)
    max_len: int = Field(default=160, gt=0)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _ranges_ordered(self) -> "TaskSpec":
        if self.max_chunks < self.min_chunks:
            raise ValueError("max_chunks must be >= min_chunks")
        if self.max_chunk_len < self.min_chunk_len:
            raise ValueError("max_chunk_len must be >= min_chunk_len")
        return self

    @property
    def chunk_len_range(self) -> Tuple[int, int]:
        factor = 6 if self.long_mode else 1
        return self.min_chunk_len * factor, self.max_chunk_len * factor

    @property
    def max_source_len(self) -> int:
        return self.max_chunks * self.chunk_len_range[1]


class PenaltyConfig(BaseModel):
    """Penalty width and test-time threshold (inf disables skipping)."""
    sigma: float = Field(default=1.5, gt=0)
    tau: float = Field(default=math.inf, gt=0)

    model_config = ConfigDict(frozen=True)


# ==========================================
# DATA MODELS
# ==========================================


class CorpusPair(BaseModel):
    """Source ids and EOS-terminated target ids."""
    source: List[int]
    target: List[int]

    @field_validator("source")
    @classmethod
    def _source_nonempty(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("source must hold at least one token")
        return v

    @field_validator("target")
    @classmethod
    def _target_eos(cls, v: List[int]) -> List[int]:
        if len(v) < 2 or v[-1] != EOS_ID:
            raise ValueError("target must hold at least one token and end with EOS")
        return v


# ==========================================
# ATTENTION / DECODING RECORDS
# ==========================================


class AttentionStep(BaseModel):
    """One decoding step of one hypothesis."""
    step: int = Field(ge=1)
    p_prev: Optional[float] = None
    g: Optional[float] = None
    lo: int = Field(ge=0)
    hi: int = Field(ge=0)
    weights: List[float] = Field(default_factory=list)
    p: Optional[float] = None
    score_evals: int = Field(ge=0)

    @model_validator(mode="after")
    def _window_ordered(self) -> "AttentionStep":
        if self.lo > self.hi:
            raise ValueError(f"window lo={self.lo} exceeds hi={self.hi}")
        return self

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


class DecodeTrace(BaseModel):
    """Result of decoding one sentence, with vision-span metering."""
    tokens: List[int]
    log_prob: float
    source_length: int
    steps: List[AttentionStep] = Field(default_factory=list)
    hyp_widths: List[List[int]] = Field(default_factory=list)
    score_evals: int = 0
    duration_s: float = 0.0

    @computed_field
    @property
    def hyp_count(self) -> int:
        return sum(len(ws) for ws in self.hyp_widths)

    @computed_field
    @property
    def avg_window(self) -> float:
        n = self.hyp_count
        return sum(sum(ws) for ws in self.hyp_widths) / n if n else 0.0

    def export(self) -> dict:
        """One structured record per sentence."""
        return {
            "tokens": self.tokens,
            "avg_window": self.avg_window,
            "score_evals": self.score_evals,
            "duration_s": self.duration_s,
            "spans": [[s.lo, s.hi, s.g] for s in self.steps],
        }


# ==========================================
# TRAINING / EVALUATION RECORDS
# ==========================================


class EpochRecord(BaseModel):
    epoch: int
    lr: float
    train_loss: float
    dev_bleu: Optional[float] = None
    dev_accuracy: Optional[float] = None
    dev_mean_g: Optional[float] = None


class EvalReport(BaseModel):
    """Corpus-level metrics at one threshold."""
    bleu: float = Field(ge=0.0, le=1.0)
    seq_accuracy: float = Field(ge=0.0, le=1.0)
    avg_window: float = Field(ge=0.0)
    per_sentence_window: float = Field(default=0.0, ge=0.0)
    score_evals: int = Field(ge=0)
    mean_g: Optional[float] = None
    mean_source_length: float = Field(default=0.0, ge=0.0)
    baseline_window: float = Field(default=0.0, ge=0.0)
    duration_s: float = 0.0
    tau: float = math.inf

    model_config = ConfigDict(ser_json_inf_nan="constants")

    @model_validator(mode="after")
    def _window_within_baseline(self) -> "EvalReport":
        if self.baseline_window and self.avg_window > self.baseline_window + 1e-9:
            raise ValueError(f"avg_window {self.avg_window} exceeds the full-window width {self.baseline_window}")
        return self


class SweepRow(BaseModel):
    tau: float
    report: EvalReport

    model_config = ConfigDict(ser_json_inf_nan="constants")


class SweepResult(BaseModel):
    """Threshold sweep ordered by strictly increasing tau."""
    rows: List[SweepRow]

    model_config = ConfigDict(ser_json_inf_nan="constants")

    @field_validator("rows")
    @classmethod
    def _tau_increasing(cls, rows: List[SweepRow]) -> List[SweepRow]:
        for a, b in zip(rows, rows[1:]):
            if not b.tau > a.tau:
                raise ValueError("tau values must be strictly increasing")
        return rows

    def reference(self) -> Optional[SweepRow]:
        return next((r for r in self.rows if math.isinf(r.tau)), None)


class SigmaRow(BaseModel):
    """Outcome of the threshold search for one penalty width."""
    sigma: float
    tau: float
    avg_window: float
    bleu: float
    seq_accuracy: float

    model_config = ConfigDict(ser_json_inf_nan="constants")
