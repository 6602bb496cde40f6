"""
Named collection of trainable arrays and its initialisation.
"""
from collections import OrderedDict
from typing import Dict, Iterator, List, Tuple

import numpy as np

from autodiff.tensor import Tensor
from models import ModelConfig

INIT_SCALE = 0.08
FORGET_BIAS = 1.0
LSTM_BIASES = ("enc_fwd_b", "enc_bwd_b", "dec_b")


def param_shapes(config: ModelConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    """Parameter names and shapes for a configuration, in checkpoint order."""
    E, H, P = config.embed_dim, config.hidden_dim, config.preout_dim
    A = H  # attention hidden size
    shapes: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
    shapes["src_embed"] = (config.src_vocab, E)
    shapes["tgt_embed"] = (config.tgt_vocab, E)
    for direction in ("fwd", "bwd"):
        shapes[f"enc_{direction}_W"] = (E + H, 4 * H)
        shapes[f"enc_{direction}_b"] = (1, 4 * H)
    shapes["dec_W"] = (E + 2 * H + H, 4 * H)
    shapes["dec_b"] = (1, 4 * H)
    shapes["att_W_a"] = (H + 2 * H, A)
    shapes["att_v_a"] = (A, 1)
    if config.attention_kind == "flexible":
        shapes["str_W_g"] = (H + E, A)
        shapes["str_v_g"] = (A, 1)
        shapes["str_b_g"] = (1, 1)
    if config.attention_kind == "local":
        shapes["loc_W_p"] = (H, A)
        shapes["loc_v_p"] = (A, 1)
    shapes["pre_W"] = (H, P)
    shapes["pre_b"] = (1, P)
    shapes["out_W"] = (P, config.tgt_vocab)
    shapes["out_b"] = (1, config.tgt_vocab)
    return shapes


def is_bias(name: str) -> bool:
    return name.endswith("_b") or name == "str_b_g"


class ModelParams:
    """Ordered name -> Tensor map of every trainable array."""

    def __init__(self, tensors: "OrderedDict[str, Tensor]"):
        self._tensors = OrderedDict(tensors)
        for name, t in self._tensors.items():
            t.name = name
            t.requires_grad = True

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> List[str]:
        return list(self._tensors)

    def items(self):
        return self._tensors.items()

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: t.data for name, t in self._tensors.items()}

    def grads(self) -> Dict[str, np.ndarray]:
        """Gradients by name; parameters untouched by the last backward pass get zeros."""
        return {name: (np.zeros_like(t.data) if t.grad is None else t.grad) for name, t in self._tensors.items()}

    def zero_grad(self) -> None:
        for t in self._tensors.values():
            t.zero_grad()

    def copy(self) -> "ModelParams":
        return ModelParams(OrderedDict((n, Tensor(t.data.copy())) for n, t in self._tensors.items()))

    def load_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        for name, t in self._tensors.items():
            t.data = np.array(arrays[name], dtype=t.data.dtype)

    def equals(self, other: "ModelParams") -> bool:
        if self.names() != other.names():
            return False
        return all(np.array_equal(self[n].data, other[n].data) for n in self.names())

    def __repr__(self) -> str:
        return f"<ModelParams {len(self)} tensors>"


def init_params(config: ModelConfig, seed: int = 0) -> ModelParams:
    """Uniform [-0.08, 0.08] weights, zero biases, forget-gate bias 1.0."""
    rng = np.random.default_rng(seed)
    tensors: "OrderedDict[str, Tensor]" = OrderedDict()
    H = config.hidden_dim
    for name, shape in param_shapes(config).items():
        if is_bias(name):
            data = np.zeros(shape)
            if name in LSTM_BIASES:
                data[:, H:2 * H] = FORGET_BIAS  # gate order i, f, o, g
        else:
            data = rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)
        tensors[name] = Tensor(data)
    return ModelParams(tensors)


def zero_params(config: ModelConfig) -> ModelParams:
    return ModelParams(OrderedDict((n, Tensor(np.zeros(s))) for n, s in param_shapes(config).items()))
