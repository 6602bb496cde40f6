"""
Floating-point precision switch for tensor values.
64-bit is the default and is required for gradient checks; 32-bit may be
selected for training runs.
"""
import numpy as np

_PRECISIONS = {"float64": np.float64, "float32": np.float32}
_current = {"dtype": np.float64}


def set_precision(name: str) -> None:
    if name not in _PRECISIONS:
        raise ValueError(f"Unknown precision '{name}', expected one of {sorted(_PRECISIONS)}")
    _current["dtype"] = _PRECISIONS[name]


def get_dtype() -> type:
    return _current["dtype"]


def precision_name() -> str:
    return "float32" if _current["dtype"] is np.float32 else "float64"
