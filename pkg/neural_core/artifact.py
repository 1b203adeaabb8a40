from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple

import numpy as np

from .layers import NetworkError

MAGIC = b"IRSLAB\0"
FORMAT_VERSION = 1
_U32 = struct.Struct("<I")


def save_parameters(path: Path, params: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None) -> Path:
    """Header (magic, version, JSON length, JSON) followed by float64 LE tensors in header order."""
    tensors = []
    payload = bytearray()
    for name, value in params.items():
        array = np.ascontiguousarray(value, dtype="<f8")
        tensors.append({"name": name, "shape": list(array.shape)})
        payload += array.tobytes(order="C")
    header = json.dumps({"meta": dict(meta or {}), "tensors": tensors}, sort_keys=True).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as handle:
        handle.write(MAGIC)
        handle.write(_U32.pack(FORMAT_VERSION))
        handle.write(_U32.pack(len(header)))
        handle.write(header)
        handle.write(bytes(payload))
    return path


def load_parameters(path: Path) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    data = path.read_bytes()
    if not data.startswith(MAGIC):
        raise NetworkError(f"{path} is not an irslab model artifact")
    offset = len(MAGIC)
    try:
        (version,) = _U32.unpack_from(data, offset)
        (header_len,) = _U32.unpack_from(data, offset + 4)
    except struct.error as exc:
        raise NetworkError(f"{path} header is truncated") from exc
    if version != FORMAT_VERSION:
        raise NetworkError(f"{path} has artifact version {version}, expected {FORMAT_VERSION}")
    offset += 8
    try:
        header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise NetworkError(f"{path} header is not valid JSON: {exc}") from exc
    offset += header_len
    params: Dict[str, np.ndarray] = {}
    for tensor in header.get("tensors", []):
        shape = tuple(int(n) for n in tensor["shape"])
        n_bytes = 8 * int(np.prod(shape, dtype=np.int64))
        chunk = data[offset : offset + n_bytes]
        if len(chunk) != n_bytes:
            raise NetworkError(f"{path} payload is truncated at tensor {tensor['name']}")
        params[tensor["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        offset += n_bytes
    if offset != len(data):
        raise NetworkError(f"{path} has {len(data) - offset} trailing bytes")
    return params, header.get("meta", {})
