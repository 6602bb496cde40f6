"""
Training loop, validation-based model selection and strength fine-tuning.
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from autodiff.tensor import Tape
from decoding.beam import beam_search, greedy_batch
from evaluation.bleu import sequence_accuracy, smoothed_bleu, strip_eos
from models import CorpusPair, EpochRecord, ModelConfig, TrainConfig
from network.checkpoint import load_checkpoint, save_checkpoint
from network.params import ModelParams, init_params
from training.batching import Batch, make_batches
from training.losses import cross_entropy, finetune_loss, mean_strength
from training.optim import AdamState, adam_step, clip_gradients, learning_rate_for_epoch
from utils.errors import DivergenceError, NumericError, UnsupportedModeError
from utils.logging import get_logger, log_event

logger = get_logger(__name__)

LossFn = Callable[[Batch], "object"]
VALIDATION_BATCH = 64


@dataclass
class TrainResult:
    params: ModelParams
    history: List[EpochRecord]
    best_epoch: int
    final_lr: float
    adam: AdamState
    last_params: Optional[ModelParams] = None


@dataclass
class FinetuneResult:
    params: ModelParams
    mean_g_before: float
    mean_g_after: float
    history: List[EpochRecord] = field(default_factory=list)


def resume_path(path: Union[str, Path]) -> Path:
    """Companion checkpoint holding the latest (not the best) state and Adam moments."""
    path = Path(path)
    return path.with_name(path.name + ".last")


def validate(
    params: ModelParams,
    dev: Sequence[CorpusPair],
    config: ModelConfig,
    beam: int = 1,
) -> Tuple[float, float]:
    """Dev BLEU and sequence accuracy at the full window."""
    refs = [strip_eos(p.target) for p in dev]
    if beam == 1:
        ordered = sorted(range(len(dev)), key=lambda i: len(dev[i].source))
        decoded: Dict[int, List[int]] = {}
        for start in range(0, len(ordered), VALIDATION_BATCH):
            chunk = ordered[start:start + VALIDATION_BATCH]
            for i, out in zip(chunk, greedy_batch([dev[i].source for i in chunk], params, config)):
                decoded[i] = out
        hyps = [decoded[i] for i in range(len(dev))]
    else:
        hyps = [beam_search(p.source, params, config, beam=beam).tokens for p in dev]
    return smoothed_bleu(hyps, refs), sequence_accuracy(hyps, refs)


def run_epoch(
    batches: Sequence[Batch],
    params: ModelParams,
    adam: AdamState,
    lr: float,
    clip_norm: float,
    loss_fn: LossFn,
    epoch: int,
) -> float:
    """One pass of forward, backward, clip and Adam; returns the mean batch loss."""
    total = 0.0
    for index, batch in enumerate(batches):
        params.zero_grad()
        try:
            with Tape() as tape:
                loss = loss_fn(batch)
            tape.backward(loss)
        except NumericError as e:
            raise DivergenceError(f"epoch {epoch}, batch {index}: {e}") from e
        value = loss.item()
        if not math.isfinite(value):
            raise DivergenceError(f"epoch {epoch}, batch {index}: loss is {value}")
        grads, _ = clip_gradients(params.grads(), clip_norm)
        adam_step(params, grads, adam, lr)
        total += value
    params.zero_grad()
    return total / len(batches)


def _append_record(path: Optional[Path], record: EpochRecord) -> None:
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as f:
        f.write(record.model_dump_json() + "\n")


def _strength_or_none(dev_batches, params, config) -> Optional[float]:
    if config.attention_kind != "flexible" or not dev_batches:
        return None
    return mean_strength(dev_batches, params, config)


def train(
    corpus: Sequence[CorpusPair],
    model_config: ModelConfig,
    train_config: TrainConfig,
    dev: Optional[Sequence[CorpusPair]] = None,
    checkpoint_path: Optional[Union[str, Path]] = None,
    log_path: Optional[Union[str, Path]] = None,
    resume: bool = False,
    meta: Optional[Dict[str, object]] = None,
) -> TrainResult:
    """
    Trains from ``init_params(model_config, seed)`` and keeps the parameters
    with the best dev BLEU (sequence accuracy breaks ties). Without a dev set
    the last epoch wins.

    With ``checkpoint_path`` the best parameters are written there after every
    improvement and the latest state (with Adam moments) to ``<path>.last``;
    ``resume=True`` continues from that companion file.
    """
    log_path = Path(log_path) if log_path else None
    params = init_params(model_config, seed=train_config.seed)
    adam = AdamState.for_params(params)
    best_params = params.copy()
    best_key = (-1.0, -1.0)
    best_epoch = 0
    start_epoch = 1
    history: List[EpochRecord] = []

    if resume:
        if checkpoint_path is None:
            raise ValueError("resume needs a checkpoint path")
        last = load_checkpoint(resume_path(checkpoint_path))
        params = last.params
        adam = AdamState.from_extras(last.extras, step=int(last.meta["adam_step"]))
        start_epoch = int(last.meta["epoch"]) + 1
        best_epoch = int(last.meta.get("best_epoch", 0))
        best_key = (float(last.meta.get("best_bleu", -1.0)), float(last.meta.get("best_accuracy", -1.0)))
        best_params = load_checkpoint(checkpoint_path).params if best_epoch else params.copy()
        log_event(logger, "train_resumed", epoch=start_epoch, checkpoint=str(checkpoint_path))

    dev_batches = make_batches(dev, VALIDATION_BATCH, train_config.seed) if dev else []
    loss_fn = lambda batch: cross_entropy(batch, params, model_config)  # noqa: E731
    lr = learning_rate_for_epoch(train_config, start_epoch)

    for epoch in range(start_epoch, train_config.epochs + 1):
        lr = learning_rate_for_epoch(train_config, epoch)
        batches = make_batches(corpus, train_config.batch_size, train_config.seed + epoch)
        train_loss = run_epoch(batches, params, adam, lr, train_config.clip_norm, loss_fn, epoch)

        record = EpochRecord(epoch=epoch, lr=lr, train_loss=train_loss)
        if dev:
            bleu, accuracy = validate(params, dev, model_config, beam=train_config.val_beam)
            record.dev_bleu, record.dev_accuracy = bleu, accuracy
            record.dev_mean_g = _strength_or_none(dev_batches, params, model_config)
            key = (bleu, accuracy)
        else:
            key = (float(epoch), 0.0)
        improved = key > best_key
        if improved:
            best_key, best_epoch, best_params = key, epoch, params.copy()

        history.append(record)
        _append_record(log_path, record)
        log_event(logger, "epoch_end", **record.model_dump(), best_epoch=best_epoch)

        if checkpoint_path is not None:
            run_meta = dict(meta or {})
            if improved:
                save_checkpoint(best_params, checkpoint_path, model_config, meta={**run_meta, "epoch": epoch})
            save_checkpoint(
                params,
                resume_path(checkpoint_path),
                model_config,
                meta={
                    **run_meta,
                    "epoch": epoch,
                    "adam_step": adam.step,
                    "best_epoch": best_epoch,
                    "best_bleu": repr(best_key[0]),
                    "best_accuracy": repr(best_key[1]),
                },
                extras=adam.extras(),
            )

    return TrainResult(best_params, history, best_epoch, lr, adam, last_params=params)


def finetune(
    params: ModelParams,
    corpus: Sequence[CorpusPair],
    model_config: ModelConfig,
    train_config: TrainConfig,
    held_out: Optional[Sequence[CorpusPair]] = None,
    lr: Optional[float] = None,
    log_path: Optional[Union[str, Path]] = None,
) -> FinetuneResult:
    """
    Optimises CE − β·mean g(t) for ``train_config.finetune_epochs`` epochs,
    starting from a copy of ``params``. The learning rate defaults to the
    final rate of the main run; Adam starts from fresh moments.
    """
    if model_config.attention_kind != "flexible":
        raise UnsupportedModeError(f"fine-tuning needs a flexible model, got '{model_config.attention_kind}'")
    lr = lr if lr is not None else learning_rate_for_epoch(train_config, train_config.epochs)
    tuned = params.copy()
    adam = AdamState.for_params(tuned)
    strength_batches = make_batches(held_out or corpus, VALIDATION_BATCH, train_config.seed)
    before = mean_strength(strength_batches, tuned, model_config)

    beta = train_config.beta
    loss_fn = lambda batch: finetune_loss(batch, tuned, model_config, beta=beta)  # noqa: E731
    history: List[EpochRecord] = []
    for epoch in range(1, train_config.finetune_epochs + 1):
        batches = make_batches(corpus, train_config.batch_size, train_config.seed + 10_000 + epoch)
        loss = run_epoch(batches, tuned, adam, lr, train_config.clip_norm, loss_fn, epoch)
        record = EpochRecord(epoch=epoch, lr=lr, train_loss=loss, dev_mean_g=mean_strength(strength_batches, tuned, model_config))
        history.append(record)
        _append_record(Path(log_path) if log_path else None, record)

    after = history[-1].dev_mean_g if history else before
    log_event(logger, "finetune_end", beta=beta, lr=lr, mean_g_before=before, mean_g_after=after)
    return FinetuneResult(tuned, before, after, history)


def memorize(
    pair: CorpusPair,
    model_config: ModelConfig,
    steps: int = 200,
    lr: float = 1e-2,
    clip_norm: float = 3.0,
    seed: int = 0,
) -> Tuple[ModelParams, List[float]]:
    """Adam on a single pair; returns the parameters and the loss after every step."""
    params = init_params(model_config, seed=seed)
    adam = AdamState.for_params(params)
    batches = make_batches([pair], 1, seed)
    losses = []
    for step in range(steps):
        losses.append(run_epoch(batches, params, adam, lr, clip_norm, lambda b: cross_entropy(b, params, model_config), step))
    return params, losses

