"""
Plain-text checkpoint format.

    #visionspan-checkpoint v1
    config.<field>=<value>          ModelConfig, one key per line
    meta.<key>=<value>              run provenance, training state, value precision
    param <name> <rank> <d1>x<d2> <count>
    ...
    values
    <one decimal float per line, in header order>

Values are written with ``repr`` so a round trip is bit-exact at the stored
precision. Optimiser moments ride along as extra ``param`` entries named
``opt.m.<name>`` / ``opt.v.<name>``.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from autodiff.precision import get_dtype, precision_name
from autodiff.tensor import Tensor
from models import ModelConfig
from network.params import ModelParams, param_shapes
from utils.errors import CheckpointIntegrityError, CheckpointParseError

MAGIC = "#visionspan-checkpoint v1"


@dataclass
class Checkpoint:
    config: ModelConfig
    params: ModelParams
    meta: Dict[str, str] = field(default_factory=dict)
    extras: "OrderedDict[str, np.ndarray]" = field(default_factory=OrderedDict)


def save_checkpoint(
    params: ModelParams,
    path: Union[str, Path],
    config: ModelConfig,
    meta: Optional[Dict[str, object]] = None,
    extras: Optional[Dict[str, np.ndarray]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays: List[Tuple[str, np.ndarray]] = [(n, t.data) for n, t in params.items()]
    arrays += list((extras or {}).items())

    lines = [MAGIC]
    lines += [f"config.{k}={v}" for k, v in config.model_dump().items()]
    meta = {**(meta or {}), "precision": precision_name()}
    lines += [f"meta.{k}={v}" for k, v in meta.items()]
    for name, arr in arrays:
        dims = "x".join(str(d) for d in arr.shape)
        lines.append(f"param {name} {arr.ndim} {dims} {arr.size}")
    lines.append("values")
    for _, arr in arrays:
        lines.extend(repr(float(x)) for x in arr.reshape(-1))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _parse_header(lines: List[str]):
    if not lines or lines[0] != MAGIC:
        raise CheckpointParseError("missing checkpoint magic line", line=1, offset=0)
    config_fields: Dict[str, str] = {}
    meta: Dict[str, str] = {}
    entries: List[Tuple[str, Tuple[int, ...], int]] = []
    for idx in range(1, len(lines)):
        line = lines[idx]
        lineno = idx + 1
        if line == "values":
            return config_fields, meta, entries, idx + 1
        if line.startswith("config.") or line.startswith("meta."):
            key, sep, value = line.partition("=")
            if not sep:
                raise CheckpointParseError("expected key=value", line=lineno, offset=len(line))
            target = config_fields if key.startswith("config.") else meta
            target[key.split(".", 1)[1]] = value
        elif line.startswith("param "):
            parts = line.split()
            if len(parts) != 5:
                raise CheckpointParseError("expected 'param <name> <rank> <dims> <count>'", line=lineno)
            try:
                rank = int(parts[2])
                dims = tuple(int(d) for d in parts[3].split("x"))
                count = int(parts[4])
            except ValueError:
                raise CheckpointParseError("non-integer rank/dims/count", line=lineno) from None
            if len(dims) != rank or int(np.prod(dims)) != count:
                raise CheckpointIntegrityError(f"parameter '{parts[1]}' header disagrees with itself (line {lineno})")
            entries.append((parts[1], dims, count))
        else:
            raise CheckpointParseError(f"unexpected header line '{line[:40]}'", line=lineno, offset=0)
    raise CheckpointIntegrityError("checkpoint ends before the values section")


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    config_fields, meta, entries, start = _parse_header(lines)
    try:
        config = ModelConfig(**config_fields)
    except ValidationError as e:
        raise CheckpointIntegrityError(f"invalid config header: {e.errors()[0]['msg']}") from None

    expected = param_shapes(config)
    names = [name for name, _, _ in entries if not name.startswith("opt.")]
    if names != list(expected):
        raise CheckpointIntegrityError(f"parameter names {names} do not match config {list(expected)}")

    total = sum(count for _, _, count in entries)
    values = lines[start:]
    if len(values) < total:
        raise CheckpointIntegrityError(f"truncated checkpoint: {len(values)} of {total} values present")
    if len(values) > total:
        raise CheckpointIntegrityError(f"checkpoint holds {len(values) - total} values beyond its header")

    dtype = get_dtype()
    tensors: "OrderedDict[str, Tensor]" = OrderedDict()
    extras: "OrderedDict[str, np.ndarray]" = OrderedDict()
    pos = 0
    for name, dims, count in entries:
        chunk = values[pos:pos + count]
        try:
            arr = np.array([float(v) for v in chunk], dtype=dtype).reshape(dims)
        except ValueError:
            bad = next(i for i, v in enumerate(chunk) if not _is_float(v))
            raise CheckpointParseError(f"malformed value '{chunk[bad]}'", line=start + pos + bad + 1) from None
        if name.startswith("opt."):
            extras[name] = arr
        else:
            if dims != expected[name]:
                raise CheckpointIntegrityError(f"'{name}' has dims {list(dims)}, config implies {list(expected[name])}")
            tensors[name] = Tensor(arr)
        pos += count
    return Checkpoint(config, ModelParams(tensors), meta, extras)


def _is_float(v: str) -> bool:
    try:
        float(v)
        return True
    except ValueError:
        return False
