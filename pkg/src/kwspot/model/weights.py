"""Weight tensors addressed by layer path, a seeded initializer, and the binary weight file."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arch import Architecture, block_plan, se_channels

MAGIC = b"KWSW"
VERSION = 1
BUFFER_SUFFIXES = (".mean", ".var")


class WeightError(ValueError):
    pass


def _bn(prefix: str, ch: int) -> dict[str, tuple[int, ...]]:
    return {f"{prefix}.gamma": (ch,), f"{prefix}.beta": (ch,),
            f"{prefix}.mean": (ch,), f"{prefix}.var": (ch,)}


def tensor_shapes(arch: Architecture) -> dict[str, tuple[int, ...]]:
    """Every tensor the forward pass needs, in canonical order.

    Conv kernels are (k, k, cin, cout); depthwise kernels (k, k, ch); 1x1
    convs and dense layers (cin, cout).
    """
    shapes: dict[str, tuple[int, ...]] = {}
    stem = arch.stages[0]
    shapes["stem.conv.weight"] = (stem.kernel, stem.kernel, arch.input_shape[2], stem.channels)
    shapes.update(_bn("stem.bn", stem.channels))
    cin = stem.channels
    for path, _si, cin, cout, k, _stride, e in block_plan(arch):
        mid = cin * e
        if e != 1:
            shapes[f"{path}.expand.weight"] = (cin, mid)
            shapes.update(_bn(f"{path}.expand.bn", mid))
        shapes[f"{path}.dw.weight"] = (k, k, mid)
        shapes.update(_bn(f"{path}.dw.bn", mid))
        sq = se_channels(arch, cin, mid)
        shapes[f"{path}.se.reduce.weight"] = (mid, sq)
        shapes[f"{path}.se.reduce.bias"] = (sq,)
        shapes[f"{path}.se.expand.weight"] = (sq, mid)
        shapes[f"{path}.se.expand.bias"] = (mid,)
        shapes[f"{path}.project.weight"] = (mid, cout)
        shapes.update(_bn(f"{path}.project.bn", cout))
        cin = cout
    head = arch.stages[-1]
    shapes["head.conv.weight"] = (cin, head.channels)
    shapes.update(_bn("head.bn", head.channels))
    shapes["head.fc.weight"] = (head.channels, arch.num_classes)
    shapes["head.fc.bias"] = (arch.num_classes,)
    return shapes


def is_buffer(path: str) -> bool:
    """Batch-norm running statistics: needed for inference, not trainable."""
    return path.endswith(BUFFER_SUFFIXES)


@dataclass(frozen=True, eq=False)
class WeightSet:
    tensors: dict[str, np.ndarray]

    def __post_init__(self):
        frozen = {}
        for name, t in self.tensors.items():
            arr = np.array(t, dtype=np.float32, copy=True)
            arr.flags.writeable = False
            frozen[name] = arr
        object.__setattr__(self, "tensors", frozen)

    def __getitem__(self, path: str) -> np.ndarray:
        try:
            return self.tensors[path]
        except KeyError:
            raise WeightError(f"missing weight tensor {path!r}") from None

    def num_params(self) -> int:
        return sum(t.size for name, t in self.tensors.items() if not is_buffer(name))

    def num_elements(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def check(self, arch: Architecture) -> None:
        want = tensor_shapes(arch)
        missing = [p for p in want if p not in self.tensors]
        if missing:
            raise WeightError(f"missing weight tensors: {missing[:5]}{' ...' if len(missing) > 5 else ''}")
        for p, shape in want.items():
            if self.tensors[p].shape != shape:
                raise WeightError(f"{p}: shape {self.tensors[p].shape}, expected {shape}")

    def with_tensor(self, path: str, value) -> "WeightSet":
        t = dict(self.tensors)
        t[path] = value
        return WeightSet(t)


def init_weights(arch: Architecture, seed: int = 0) -> WeightSet:
    """Deterministic pseudo-random weights, fan-in scaled, for tests and smoke runs."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for path, shape in tensor_shapes(arch).items():
        if path.endswith(".gamma"):
            t = 1.0 + 0.1 * rng.standard_normal(shape)
        elif path.endswith((".beta", ".mean", ".bias")):
            t = 0.1 * rng.standard_normal(shape)
        elif path.endswith(".var"):
            t = rng.uniform(0.5, 1.5, shape)
        else:
            fan_in = int(np.prod(shape[:-1])) if len(shape) > 2 else shape[0]
            if path.endswith("dw.weight"):
                fan_in = shape[0] * shape[1]
            t = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
        tensors[path] = t
    return WeightSet(tensors)


# File layout (all little-endian):
#   b"KWSW", u32 version, u32 n_tensors
#   n_tensors x { u16 path_len, path utf-8, u8 ndim, u32 dims[ndim], u64 byte offset into data }
#   data: float32 tensors, row-major, concatenated in table order
_HEAD = struct.Struct("<4sII")


def save_weights(ws: WeightSet, path) -> None:
    table = bytearray()
    offset = 0
    blobs = []
    for name, t in ws.tensors.items():
        raw = name.encode("utf-8")
        table += struct.pack("<H", len(raw)) + raw + struct.pack("<B", t.ndim)
        table += struct.pack(f"<{t.ndim}I", *t.shape) + struct.pack("<Q", offset)
        blob = np.ascontiguousarray(t, dtype="<f4").tobytes()
        blobs.append(blob)
        offset += len(blob)
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, len(ws.tensors)))
        fh.write(bytes(table))
        for blob in blobs:
            fh.write(blob)


def load_weights(path) -> WeightSet:
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size:
        raise WeightError(f"{path}: truncated weight file")
    magic, version, n = _HEAD.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise WeightError(f"{path}: not a version-{VERSION} weight file")
    pos = _HEAD.size
    entries = []
    try:
        for _ in range(n):
            (plen,) = struct.unpack_from("<H", raw, pos)
            pos += 2
            name = raw[pos:pos + plen].decode("utf-8")
            pos += plen
            (ndim,) = struct.unpack_from("<B", raw, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}I", raw, pos)
            pos += 4 * ndim
            (off,) = struct.unpack_from("<Q", raw, pos)
            pos += 8
            entries.append((name, shape, off))
    except struct.error as exc:
        raise WeightError(f"{path}: corrupt tensor table") from exc
    data = raw[pos:]
    tensors = {}
    for name, shape, off in entries:
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        if off + nbytes > len(data):
            raise WeightError(f"{path}: tensor {name} runs past end of file")
        tensors[name] = np.frombuffer(data, dtype="<f4", count=nbytes // 4, offset=off).reshape(shape)
    return WeightSet(tensors)
