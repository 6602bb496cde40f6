import math

import numpy as np
import pytest

from autodiff import Tensor, grad_check
from autodiff import ops
from models import PAD_ID
from network import (
    decoder_step,
    encode,
    init_params,
    initial_decoder_state,
    load_checkpoint,
    output_logits,
    param_shapes,
    save_checkpoint,
    zero_params,
)
from network.seq2seq import DecoderState
from utils.errors import CheckpointIntegrityError, CheckpointParseError, IdRangeError, LengthError, ShapeError


class TestEncoder:
    def test_state_shape(self, make_config):
        config = make_config("global", hidden_dim=64)
        enc = encode([4, 5, 6, 7, 8], init_params(config), config)
        assert enc.states.shape == (1, 5, 128)
        assert enc.length == 5

    def test_zero_parameters_give_zero_states(self, make_config):
        config = make_config("global")
        enc = encode([4, 5, 6], zero_params(config), config)
        assert np.array_equal(enc.states.data, np.zeros((1, 3, 2 * config.hidden_dim)))

    def test_deterministic(self, make_model):
        config, params = make_model("global")
        a = encode([4, 9, 6], params, config).states.data
        b = encode([4, 9, 6], params, config).states.data
        assert np.array_equal(a, b)

    def test_padded_rows_match_unpadded_encoding(self, make_model):
        config, params = make_model("flexible", seed=3)
        batch = encode(np.array([[4, 5, 6], [7, 8, PAD_ID]]), params, config, lengths=[3, 2])
        single = encode([7, 8], params, config)
        assert np.allclose(batch.states.data[1, :2], single.states.data[0], atol=1e-12)
        assert batch.mask.tolist() == [[True, True, True], [True, True, False]]

    def test_errors(self, make_model):
        config, params = make_model("global")
        with pytest.raises(IdRangeError):
            encode([4, config.src_vocab], params, config)
        with pytest.raises(LengthError):
            encode([], params, config)
        with pytest.raises(LengthError):
            encode(list(range(4, 8)) * 60, params, config)

    def test_gradient_wrt_embeddings(self, make_model):
        config, params = make_model("global", seed=1)
        f = lambda: ops.sum(encode([4, 5, 6], params, config).states)  # noqa: E731
        assert grad_check(f, [params["src_embed"]]) < 1e-4

    def test_tile_repeats_one_sentence(self, make_model):
        config, params = make_model("global")
        enc = encode([4, 5, 6], params, config)
        tiled = enc.tile(3)
        assert tiled.states.shape[0] == 3
        for b in range(3):
            assert np.array_equal(tiled.states.data[b], enc.states.data[0])
        assert enc.tile(1) is enc
        with pytest.raises(ShapeError):
            tiled.tile(2)


class TestDecoder:
    def test_zero_parameters_keep_a_zero_hidden_state(self, make_config):
        config = make_config("global")
        params = zero_params(config)
        state = initial_decoder_state(1, params, config)
        nxt = decoder_step(state, Tensor(np.ones((1, 2 * config.hidden_dim))), params)
        assert np.array_equal(nxt.h.data, np.zeros((1, config.hidden_dim)))

    def test_context_dims_checked(self, make_model):
        config, params = make_model("global")
        state = initial_decoder_state(1, params, config)
        with pytest.raises(ShapeError):
            decoder_step(state, Tensor(np.ones((1, config.hidden_dim))), params)

    def test_gradient_through_two_steps(self, make_model, rng):
        config, params = make_model("global", seed=2)
        contexts = [Tensor(rng.normal(size=(1, 2 * config.hidden_dim))) for _ in range(2)]

        def f():
            state = initial_decoder_state(1, params, config)
            for context in contexts:
                state = decoder_step(state, context, params)
            return ops.sum(state.h)

        assert grad_check(f, [params["dec_W"], params["dec_b"]]) < 1e-4

    def test_zero_parameters_give_uniform_output(self, make_config):
        config = make_config("global")
        params = zero_params(config)
        state = initial_decoder_state(1, params, config)
        log_probs = ops.log_softmax(output_logits(state, params)).data[0]
        assert np.allclose(log_probs, -math.log(config.tgt_vocab))

    def test_gradient_of_one_step_cross_entropy(self, make_model, rng):
        config, params = make_model("global", seed=4)
        h = Tensor(rng.normal(size=(1, config.hidden_dim)))
        state = DecoderState(h, h, Tensor(np.zeros((1, config.embed_dim))))
        f = lambda: ops.neg(ops.sum(ops.pick(ops.log_softmax(output_logits(state, params)), np.array([5]))))  # noqa: E731
        assert grad_check(f, [params["pre_W"], params["out_W"], params["out_b"]]) < 1e-4


class TestParams:
    def test_shapes_depend_on_attention_kind(self, make_config):
        assert "str_W_g" in param_shapes(make_config("flexible"))
        assert "loc_W_p" in param_shapes(make_config("local"))
        assert not {"str_W_g", "loc_W_p"} & set(param_shapes(make_config("global")))

    def test_init_is_seeded(self, make_config):
        config = make_config("flexible")
        assert init_params(config, seed=5).equals(init_params(config, seed=5))
        assert not init_params(config, seed=5).equals(init_params(config, seed=6))

    def test_forget_gate_bias(self, make_config):
        config = make_config("global")
        H = config.hidden_dim
        b = init_params(config)["dec_b"].data
        assert np.all(b[:, H:2 * H] == 1.0)
        assert np.all(b[:, :H] == 0.0)


class TestCheckpoint:
    def test_save_then_load(self, make_model, tmp_path):
        config, params = make_model("flexible", seed=9)
        path = save_checkpoint(params, tmp_path / "m.ckpt", config, meta={"epoch": 3},
                               extras={"opt.m.out_b": np.full((1, config.tgt_vocab), 0.25)})
        ckpt = load_checkpoint(path)
        assert ckpt.config == config
        assert ckpt.params.equals(params)
        assert ckpt.meta == {"epoch": "3", "precision": "float64"}
        assert np.all(ckpt.extras["opt.m.out_b"] == 0.25)

    def test_truncated_file(self, make_model, tmp_path):
        config, params = make_model("global")
        path = save_checkpoint(params, tmp_path / "m.ckpt", config)
        lines = path.read_text(encoding="utf-8").splitlines()
        path.write_text("\n".join(lines[:-5]) + "\n", encoding="utf-8")
        with pytest.raises(CheckpointIntegrityError, match="truncated"):
            load_checkpoint(path)

    def test_malformed_value_reports_its_line(self, make_model, tmp_path):
        config, params = make_model("global")
        path = save_checkpoint(params, tmp_path / "m.ckpt", config)
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[-1] = "not-a-number"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(CheckpointParseError) as info:
            load_checkpoint(path)
        assert info.value.line == len(lines)

    def test_missing_magic_line(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text("hello\n", encoding="utf-8")
        with pytest.raises(CheckpointParseError) as info:
            load_checkpoint(path)
        assert info.value.line == 1

    def test_config_mismatch(self, make_model, tmp_path):
        config, params = make_model("global")
        path = save_checkpoint(params, tmp_path / "m.ckpt", config)
        text = path.read_text(encoding="utf-8").replace("config.attention_kind=global", "config.attention_kind=local")
        path.write_text(text, encoding="utf-8")
        with pytest.raises(CheckpointIntegrityError):
            load_checkpoint(path)
