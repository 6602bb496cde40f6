from typing import Tuple

from autodiff import ops
from autodiff.tensor import Tensor


def lstm_cell(x: Tensor, h: Tensor, c: Tensor, W: Tensor, b: Tensor) -> Tuple[Tensor, Tensor]:
    """Single LSTM transition; gate columns are ordered input, forget, output, candidate."""
    H = h.shape[-1]
    z = ops.add(ops.matmul(ops.concat([x, h], axis=-1), W), b)
    i = ops.sigmoid(ops.slice_axis(z, 0, H))
    f = ops.sigmoid(ops.slice_axis(z, H, 2 * H))
    o = ops.sigmoid(ops.slice_axis(z, 2 * H, 3 * H))
    g = ops.tanh(ops.slice_axis(z, 3 * H, 4 * H))
    c_new = ops.add(ops.mul(f, c), ops.mul(i, g))
    h_new = ops.mul(o, ops.tanh(c_new))
    return h_new, c_new
