"""SDLM1 container files and raw float32 tensor files.

Layout, all integers little-endian::

    b"SDLM" 0x01                      magic, version
    K:u8 C:u16 P:u16 count:u32        shared block config
    per tensor:
        name_len:u16 name:utf-8
        rank:u8 dims:u64*rank elements:u64
        payload_len:u32 payload

A payload is the blocks' bit fields written back to back, LSB-first: seed
(K bits), exponent (4 bits), then P mantissas (4 bits each), the last two in
two's complement. The final byte is zero-padded.
"""

import io
import math
import struct
from pathlib import Path

import numpy as np

from seedcodec.blocks import CompressedTensor
from seedcodec.config import COEFF_BITS, EXPONENT_BITS, BlockConfig
from seedcodec.errors import (
    BadMagicError,
    ConfigError,
    CorruptBlockError,
    FormatError,
    ShapeMismatchError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)

MAGIC = b"SDLM"
VERSION = 1
_HEADER = struct.Struct("<4sBBHHI")


def _field_widths(config):
    return [config.k, EXPONENT_BITS] + [COEFF_BITS] * config.p


def payload_size(n_blocks: int, config: BlockConfig) -> int:
    """Payload length in bytes for ``n_blocks`` blocks."""
    return -(-config.payload_bits(n_blocks) // 8)


def encode_payload(ct: CompressedTensor) -> bytes:
    cfg = ct.config
    fields = [ct.seeds.astype(np.int64), ct.exponents.astype(np.int64) & 0xF]
    fields += [ct.coefficients[:, j].astype(np.int64) & 0xF for j in range(cfg.p)]
    columns = []
    for values, width in zip(fields, _field_widths(cfg)):
        columns.append(((values[:, None] >> np.arange(width)) & 1).astype(np.uint8))
    bits = np.concatenate(columns, axis=1).reshape(-1)
    return np.packbits(bits, bitorder="little").tobytes()


def _signed4(values):
    return np.where(values >= 8, values - 16, values).astype(np.int8)


def decode_payload(payload: bytes, config: BlockConfig, shape, name=None) -> CompressedTensor:
    n = math.prod(shape)
    n_blocks = config.num_blocks(n)
    expected = payload_size(n_blocks, config)
    if len(payload) < expected:
        raise TruncatedPayloadError(f"payload has {len(payload)} bytes, expected {expected}", tensor=name)
    if len(payload) > expected:
        raise FormatError(f"payload has {len(payload)} bytes, expected {expected}", tensor=name)
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little")
    used = config.payload_bits(n_blocks)
    if bits[used:].any():
        raise FormatError("nonzero padding bits after the last block", tensor=name)
    bits = bits[:used].reshape(n_blocks, config.block_bits).astype(np.int64)

    values = []
    offset = 0
    for width in _field_widths(config):
        chunk = bits[:, offset:offset + width]
        values.append((chunk << np.arange(width)).sum(axis=1))
        offset += width
    seeds = values[0]
    zero = np.flatnonzero(seeds == 0)
    if zero.size:
        raise CorruptBlockError("all-zero seed field", tensor=name, block=int(zero[0]))
    exponents = _signed4(values[1])
    coeffs = _signed4(np.stack(values[2:], axis=1))
    return CompressedTensor(config, shape, seeds, exponents, coeffs)


def encode(tensors) -> bytes:
    """Serialize ``{name: CompressedTensor}`` (all sharing one config)."""
    items = list(tensors.items())
    if not items:
        raise ValueError("nothing to encode")
    config = items[0][1].config
    for name, ct in items:
        if (ct.config.c, ct.config.p, ct.config.k) != (config.c, config.p, config.k):
            raise ConfigError(f"tensor {name!r} uses {ct.config}, container uses {config}")
    out = io.BytesIO()
    out.write(_HEADER.pack(MAGIC, VERSION, config.k, config.c, config.p, len(items)))
    for name, ct in items:
        raw_name = name.encode("utf-8")
        payload = encode_payload(ct)
        out.write(struct.pack("<H", len(raw_name)))
        out.write(raw_name)
        out.write(struct.pack("<B", len(ct.shape)))
        out.write(struct.pack(f"<{len(ct.shape)}Q", *ct.shape))
        out.write(struct.pack("<QI", ct.element_count, len(payload)))
        out.write(payload)
    return out.getvalue()


class _Reader:
    def __init__(self, data):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n, what, tensor=None):
        if self.pos + n > len(self.data):
            raise TruncatedPayloadError(f"file ends inside {what}", tensor=tensor)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt, what, tensor=None):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what, tensor))


def decode(data: bytes) -> dict:
    """Parse an SDLM1 file into ``{name: CompressedTensor}`` in file order."""
    reader = _Reader(data)
    if len(data) < 5 or bytes(data[:4]) != MAGIC:
        raise BadMagicError(f"not an SDLM container (magic {bytes(data[:4])!r})")
    magic, version, k, c, p, count = reader.unpack(_HEADER.format, "header")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    try:
        config = BlockConfig(c, p, k)
    except ConfigError as exc:
        raise FormatError(f"invalid block config in header: {exc}") from None

    tensors = {}
    for index in range(count):
        (name_len,) = reader.unpack("<H", f"name of tensor #{index}")
        name = bytes(reader.take(name_len, f"name of tensor #{index}")).decode("utf-8")
        (rank,) = reader.unpack("<B", "rank", name)
        dims = reader.unpack(f"<{rank}Q", "dims", name)
        n, payload_len = reader.unpack("<QI", "element count", name)
        if rank == 0 or 0 in dims or math.prod(dims) != n:
            raise FormatError(f"dims {dims} do not match element count {n}", tensor=name)
        if name in tensors:
            raise FormatError("duplicate tensor name", tensor=name)
        if reader.pos + payload_len > len(reader.data):
            raise TruncatedPayloadError(
                f"payload declares {payload_len} bytes, {len(reader.data) - reader.pos} remain", tensor=name
            )
        payload = bytes(reader.take(payload_len, "payload", name))
        tensors[name] = decode_payload(payload, config, dims, name)
    if reader.pos != len(reader.data):
        raise FormatError(f"{len(reader.data) - reader.pos} trailing bytes after last tensor")
    return tensors


def container_size(shapes, config: BlockConfig, names=None) -> int:
    """Exact encoded size in bytes for tensors of the given shapes."""
    names = names or [f"t{i}" for i in range(len(shapes))]
    size = _HEADER.size
    for name, shape in zip(names, shapes):
        n = math.prod(shape)
        size += 2 + len(name.encode("utf-8")) + 1 + 8 * len(shape) + 8 + 4
        size += payload_size(config.num_blocks(n), config)
    return size


def write_container(path, tensors) -> int:
    data = encode(tensors)
    Path(path).write_bytes(data)
    return len(data)


def read_container(path) -> dict:
    return decode(Path(path).read_bytes())


def parse_shape(text: str) -> tuple:
    """Parse ``"2x3x4"`` into ``(2, 3, 4)``."""
    try:
        dims = tuple(int(part) for part in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"bad shape {text!r}; expected e.g. 4096x1024") from None
    if any(d < 1 for d in dims):
        raise ValueError(f"bad shape {text!r}; dimensions must be positive")
    return dims


def read_plain_tensor(path, shape):
    """Read headerless little-endian float32 data and check it against ``shape``."""
    shape = tuple(int(d) for d in shape)
    n = math.prod(shape)
    raw = Path(path).read_bytes()
    if len(raw) != 4 * n:
        raise ShapeMismatchError(f"{path}: {len(raw)} bytes, shape {shape} needs {4 * n}")
    return np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape), shape


def write_plain_tensor(path, data, shape=None):
    arr = np.asarray(data, dtype="<f4")
    if shape is not None and math.prod(shape) != arr.size:
        raise ShapeMismatchError(f"shape {tuple(shape)} does not match {arr.size} elements")
    Path(path).write_bytes(arr.tobytes())
