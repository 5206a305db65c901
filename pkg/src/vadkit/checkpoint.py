"""Self-describing model checkpoint container.

Layout: a little-endian u32 header length, a UTF-8 JSON header, then the raw
array payloads back to back in header order.  Float arrays are stored as
little-endian 32-bit floats; 32-bit little-endian integer arrays are also
accepted (dtype is recorded per array).  The header carries the method name,
container version, hyperparameters, free-form metadata, and each array's name,
shape and dtype.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DecodeError

FORMAT_NAME = "vadkit-model"
FORMAT_VERSION = 1

_DTYPES = {"float32": np.dtype("<f4"), "int32": np.dtype("<i4")}


@dataclass
class Container:
    method: str
    hyperparameters: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)  # name -> np.ndarray


def _dtype_name(arr: np.ndarray) -> str:
    if arr.dtype == np.float32:
        return "float32"
    if arr.dtype == np.int32:
        return "int32"
    raise DecodeError(f"container arrays must be float32 or int32, got {arr.dtype}")


def dumps(container: Container) -> bytes:
    entries, payload = [], []
    for name, arr in container.arrays.items():
        arr = np.ascontiguousarray(arr)
        dtype = _dtype_name(arr)
        entries.append({"name": name, "shape": list(arr.shape), "dtype": dtype})
        payload.append(arr.astype(_DTYPES[dtype], copy=False).tobytes())
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "method": container.method,
        "hyperparameters": container.hyperparameters,
        "metadata": container.metadata,
        "arrays": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return struct.pack("<I", len(header_bytes)) + header_bytes + b"".join(payload)


def loads(data: bytes) -> Container:
    if len(data) < 4:
        raise DecodeError("container shorter than its length prefix")
    (header_len,) = struct.unpack_from("<I", data, 0)
    if len(data) < 4 + header_len:
        raise DecodeError("container header truncated")
    try:
        header = json.loads(data[4:4 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DecodeError(f"container header is not valid JSON: {exc}") from exc
    if header.get("format") != FORMAT_NAME:
        raise DecodeError(f"not a {FORMAT_NAME} container")
    if header.get("version") != FORMAT_VERSION:
        raise DecodeError(f"unsupported container version {header.get('version')}")

    offset = 4 + header_len
    arrays = {}
    for entry in header["arrays"]:
        dtype = _DTYPES.get(entry.get("dtype", "float32"))
        if dtype is None:
            raise DecodeError(f"unsupported array dtype {entry.get('dtype')!r}")
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        chunk = data[offset:offset + nbytes]
        if len(chunk) < nbytes:
            raise DecodeError(f"array {entry['name']!r} payload truncated")
        arrays[entry["name"]] = np.frombuffer(chunk, dtype=dtype).reshape(shape).copy()
        offset += nbytes
    return Container(
        method=header["method"],
        hyperparameters=header.get("hyperparameters", {}),
        metadata=header.get("metadata", {}),
        arrays=arrays,
    )


def save(path, container: Container):
    with open(path, "wb") as fh:
        fh.write(dumps(container))


def load(path) -> Container:
    with open(path, "rb") as fh:
        return loads(fh.read())
