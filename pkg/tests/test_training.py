import math
from collections import OrderedDict

import numpy as np
import pytest

from autodiff import Tensor
from autodiff import ops
from decoding import greedy
from models import EOS_ID, CorpusPair, TrainConfig
from network import init_params, load_checkpoint, zero_params
from network.params import ModelParams
from training import (
    AdamState,
    adam_step,
    clip_gradients,
    collate,
    cross_entropy,
    finetune,
    finetune_loss,
    learning_rate_for_epoch,
    make_batches,
    mean_strength,
    train,
)
from training.losses import finetune_objective
from training.trainer import memorize, resume_path, run_epoch
from utils.errors import DivergenceError, EmptyBatchError, UnsupportedModeError


def _pairs(lengths):
    return [CorpusPair(source=[4 + i % 8] * n, target=[4, EOS_ID]) for i, n in enumerate(lengths)]


class TestBatching:
    def test_length_sorted_groups(self):
        batches = make_batches(_pairs([5, 2, 9, 2]), 2, seed=0)
        groups = sorted(sorted(b.source_lengths.tolist()) for b in batches)
        assert groups == [[2, 2], [5, 9]]

    def test_one_batch_when_large_enough(self):
        (batch,) = make_batches(_pairs([5, 2, 9, 2]), 10, seed=0)
        assert batch.source_lengths.tolist() == [2, 2, 5, 9]

    def test_same_seed_same_order(self):
        corpus = _pairs(range(1, 21))
        a = [b.source_lengths.tolist() for b in make_batches(corpus, 3, seed=5)]
        b = [b.source_lengths.tolist() for b in make_batches(corpus, 3, seed=5)]
        assert a == b

    def test_collate_pads_and_masks(self, toy_pairs):
        batch = collate(toy_pairs)
        assert batch.source.shape == (3, 4)
        assert batch.source[1].tolist() == [7, 8, 0, 0]
        assert batch.loss_mask[1].tolist() == [True, True, True, False, False]

    def test_empty(self):
        with pytest.raises(EmptyBatchError):
            collate([])
        with pytest.raises(EmptyBatchError):
            make_batches([], 4, seed=0)


class TestLosses:
    def test_uniform_model_loss(self, make_config, toy_pairs):
        config = make_config("flexible")
        loss = cross_entropy(collate(toy_pairs), zero_params(config), config).item()
        mean_steps = sum(len(p.target) for p in toy_pairs) / len(toy_pairs)
        assert loss == pytest.approx(mean_steps * math.log(config.tgt_vocab), abs=1e-9)

    @pytest.mark.parametrize("kind", ["global", "local", "flexible"])
    def test_extra_padding_leaves_the_loss_unchanged(self, make_model, toy_pairs, kind):
        config, params = make_model(kind, seed=4)
        tight = cross_entropy(collate(toy_pairs), params, config).item()
        padded = collate(toy_pairs, source_width=7, target_width=9)
        assert padded.source.shape == (3, 7)
        assert padded.target.shape == (3, 9)
        assert cross_entropy(padded, params, config).item() == pytest.approx(tight, abs=1e-9)

    def test_finetune_objective_hand_value(self):
        nll = Tensor([2.0])
        mean_g = Tensor([0.5])
        assert finetune_objective(nll, mean_g, 0.1).item() == pytest.approx(1.95, abs=1e-12)

    def test_zero_beta_equals_cross_entropy(self, make_model, toy_pairs):
        config, params = make_model("flexible", seed=3)
        batch = collate(toy_pairs)
        assert finetune_loss(batch, params, config, beta=0.0).item() == cross_entropy(batch, params, config).item()

    def test_finetune_loss_needs_a_flexible_model(self, make_model, toy_pairs):
        config, params = make_model("global")
        with pytest.raises(UnsupportedModeError):
            finetune_loss(collate(toy_pairs), params, config)
        with pytest.raises(UnsupportedModeError):
            mean_strength(make_batches(toy_pairs, 2, 0), params, config)

    def test_mean_strength_of_zero_parameters(self, make_config, toy_pairs):
        config = make_config("flexible")
        assert mean_strength(make_batches(toy_pairs, 2, 0), zero_params(config), config) == pytest.approx(0.5)


class TestOptimiser:
    def test_clip_examples(self):
        grads = {"a": np.array([2.0])}
        clipped, norm = clip_gradients(grads, 3.0)
        assert norm == 2.0 and clipped["a"][0] == 2.0
        zero, _ = clip_gradients({"a": np.zeros(3)}, 3.0)
        assert np.array_equal(zero["a"], np.zeros(3))
        halved, norm = clip_gradients({"a": np.full((2, 2), 3.0)}, 3.0)
        assert norm == pytest.approx(6.0)
        assert np.allclose(halved["a"], 1.5)

    def test_adam_first_step(self):
        params = ModelParams(OrderedDict(w=Tensor([0.0])))
        state = AdamState.for_params(params)
        adam_step(params, {"w": np.array([1.0])}, state, lr=1e-4)
        assert params["w"].data[0] == pytest.approx(-1e-4 / (1 + 1e-8), rel=1e-12)
        assert state.step == 1

    def test_adam_zero_gradient(self):
        params = ModelParams(OrderedDict(w=Tensor([0.3, -0.2])))
        state = AdamState.for_params(params)
        adam_step(params, {"w": np.zeros(2)}, state, lr=1e-3)
        assert np.array_equal(params["w"].data, [0.3, -0.2])
        assert not state.m["w"].any() and not state.v["w"].any()

    def test_moments_survive_extras(self):
        params = ModelParams(OrderedDict(w=Tensor([1.0, 2.0])))
        state = AdamState.for_params(params)
        adam_step(params, {"w": np.array([0.5, -1.0])}, state, lr=1e-3)
        restored = AdamState.from_extras(state.extras(), step=state.step)
        assert np.array_equal(restored.m["w"], state.m["w"])
        assert np.array_equal(restored.v["w"], state.v["w"])

    def test_learning_rate_schedule(self):
        config = TrainConfig(lr=4e-4, epochs=3, halve_from_epoch=2)
        rates = [learning_rate_for_epoch(config, e) for e in (1, 2, 3)]
        assert rates == pytest.approx([4e-4, 2e-4, 1e-4])

    def test_halving_after_the_run_is_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=3, halve_from_epoch=4)


class TestTrainer:
    def test_divergence_aborts(self, make_model, toy_pairs):
        config, params = make_model("global")
        batches = make_batches(toy_pairs, 2, 0)
        with pytest.raises(DivergenceError, match="epoch 1, batch 0"):
            run_epoch(batches, params, AdamState.for_params(params), 1e-3, 3.0,
                      lambda batch: ops.exp(ops.constant([1000.0])), epoch=1)

    def test_single_pair_loss_decreases(self, make_config):
        pair = CorpusPair(source=[4, 5, 6], target=[4, 5, 6, EOS_ID])
        _, losses = memorize(pair, make_config("global"), steps=50)
        assert losses[-1] < losses[0]

    def test_single_pair_is_memorised(self, make_config):
        config = make_config("flexible", embed_dim=8, hidden_dim=16, preout_dim=16)
        pair = CorpusPair(source=[4, 5, 6], target=[6, 5, 4, EOS_ID])
        params, _ = memorize(pair, config, steps=200)
        assert greedy(pair.source, params, config).tokens == [6, 5, 4]

    def test_identical_seeds_are_bit_identical(self, make_config, small_corpus):
        config = make_config("flexible", vocab=34)
        train_config = TrainConfig(batch_size=8, lr=1e-2, epochs=2, halve_from_epoch=2, seed=4)
        a = train(small_corpus[:16], config, train_config)
        b = train(small_corpus[:16], config, train_config)
        assert [r.train_loss for r in a.history] == [r.train_loss for r in b.history]
        assert a.params.equals(b.params)

    def test_dev_selection_and_log(self, make_config, small_corpus, tmp_path):
        config = make_config("global", vocab=34)
        train_config = TrainConfig(batch_size=8, lr=1e-2, epochs=2, halve_from_epoch=2, seed=1)
        log = tmp_path / "train.jsonl"
        result = train(small_corpus[:16], config, train_config, dev=small_corpus[16:20], log_path=log)
        assert len(log.read_text(encoding="utf-8").splitlines()) == 2
        assert 1 <= result.best_epoch <= 2
        assert all(r.dev_bleu is not None for r in result.history)

    def test_resume_continues_bit_identically(self, make_config, small_corpus, tmp_path):
        config = make_config("flexible", vocab=34)
        corpus = small_corpus[:16]
        full = TrainConfig(batch_size=8, lr=1e-2, epochs=3, halve_from_epoch=2, seed=2)
        first = TrainConfig(batch_size=8, lr=1e-2, epochs=2, halve_from_epoch=2, seed=2)
        straight = train(corpus, config, full)

        ckpt = tmp_path / "flex.ckpt"
        train(corpus, config, first, checkpoint_path=ckpt)
        assert resume_path(ckpt).exists()
        assert load_checkpoint(resume_path(ckpt)).meta["epoch"] == "2"
        resumed = train(corpus, config, full, checkpoint_path=ckpt, resume=True)
        assert [r.epoch for r in resumed.history] == [3]
        assert resumed.last_params.equals(straight.last_params)

    def test_finetune_rejects_other_kinds(self, make_model, toy_pairs):
        config, params = make_model("local")
        with pytest.raises(UnsupportedModeError):
            finetune(params, toy_pairs, config, TrainConfig(epochs=1, halve_from_epoch=1))

    def test_zero_beta_finetune_matches_plain_training(self, make_config, small_corpus):
        config = make_config("flexible", vocab=34)
        params = init_params(config, seed=8)
        corpus = small_corpus[:16]
        train_config = TrainConfig(batch_size=8, epochs=1, halve_from_epoch=1, beta=0.0, seed=3)
        tuned = finetune(params, corpus, config, train_config, lr=1e-3)

        plain = params.copy()
        batches = make_batches(corpus, 8, train_config.seed + 10_000 + 1)
        run_epoch(batches, plain, AdamState.for_params(plain), 1e-3, train_config.clip_norm,
                  lambda batch: cross_entropy(batch, plain, config), epoch=1)
        for name in plain.names():
            assert np.allclose(tuned.params[name].data, plain[name].data, rtol=0, atol=1e-12)

    def test_finetune_raises_mean_strength(self, make_config, small_corpus):
        config = make_config("flexible", vocab=34)
        params = init_params(config, seed=5)
        train_config = TrainConfig(batch_size=8, epochs=1, halve_from_epoch=1, beta=1.0, seed=6)
        result = finetune(params, small_corpus, config, train_config, held_out=small_corpus[:10], lr=1e-2)
        assert result.mean_g_after > result.mean_g_before
        assert not result.params.equals(params)
