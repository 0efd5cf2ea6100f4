"""Bit-exact weight file format shared with external trainers.

Layout of a file (all integers little-endian u32, all floats IEEE-754
binary32 little-endian):

    bytes 0-3      magic "FCW1"
    u32            layer_count
    per layer      out_dim, in_dim, activation_id (0=identity, 1=relu,
                   2=tanh, 3=sigmoid), out_dim*in_dim weights row-major,
                   out_dim biases
    u32            block_count
    per block      offset, length, activation_id (4=softmax allowed here only)
    layout         group_count, per-group class count, continuous_count,
                   v_dim, r_c (f32), r_v (f32)

Trailing bytes are forbidden. A layout section of all zeros (written for
networks without latent semantics, e.g. denoisers) loads back as None.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import WeightFormatError
from .latent import LatentLayout
from .mlp import Activation, DenseLayer, MlpNetwork, OutputBlockSpec

MAGIC = b"FCW1"


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise WeightFormatError(
                f"truncated file: expected {self.pos + n} bytes through {what}, "
                f"file has {len(self.data)}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f32(self, what: str) -> float:
        return struct.unpack("<f", self.take(4, what))[0]

    def f32_array(self, count: int, what: str) -> np.ndarray:
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def save_weights(net: MlpNetwork, layout: LatentLayout | None, path) -> None:
    """Serialize a network (and its latent layout, if any) to disk."""
    chunks = [MAGIC, struct.pack("<I", len(net.layers))]
    for layer in net.layers:
        if layer.activation not in (Activation.IDENTITY, Activation.RELU,
                                    Activation.TANH, Activation.SIGMOID):
            raise WeightFormatError(
                f"layer activation {layer.activation} is not storable")
        chunks.append(struct.pack("<III", layer.out_dim, layer.in_dim,
                                  int(layer.activation)))
        chunks.append(np.ascontiguousarray(layer.weights, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(layer.bias, dtype="<f4").tobytes())
    blocks = net.output_blocks.blocks
    chunks.append(struct.pack("<I", len(blocks)))
    for off, length, act in blocks:
        chunks.append(struct.pack("<III", off, length, int(act)))
    if layout is None:
        chunks.append(struct.pack("<III", 0, 0, 0))
        chunks.append(struct.pack("<ff", 1.0, 1.0))
    else:
        chunks.append(struct.pack("<I", len(layout.categorical_groups)))
        for g in layout.categorical_groups:
            chunks.append(struct.pack("<I", g))
        chunks.append(struct.pack("<II", layout.continuous_codes, layout.v_dim))
        chunks.append(struct.pack("<ff", layout.r_c, layout.r_v))
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_weights(path):
    """Parse a weight file; returns (network, layout-or-None).

    Malformed files raise WeightFormatError naming the offending position.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise WeightFormatError(f"bad magic at offset 0: {magic!r} != {MAGIC!r}")
    layer_count = r.u32("layer count")
    if layer_count == 0:
        raise WeightFormatError("layer count is zero at offset 4")
    layers = []
    for k in range(layer_count):
        at = r.pos
        out_dim = r.u32(f"layer {k} out_dim")
        in_dim = r.u32(f"layer {k} in_dim")
        act_id = r.u32(f"layer {k} activation")
        if out_dim == 0 or in_dim == 0:
            raise WeightFormatError(f"layer {k} has zero dimension at offset {at}")
        if act_id > 3:
            raise WeightFormatError(
                f"unknown layer activation id {act_id} at offset {at + 8}")
        w = r.f32_array(out_dim * in_dim, f"layer {k} weights")
        b = r.f32_array(out_dim, f"layer {k} biases")
        layers.append(DenseLayer(w.reshape(out_dim, in_dim), b, Activation(act_id)))
    block_count = r.u32("block count")
    blocks = []
    for k in range(block_count):
        at = r.pos
        off = r.u32(f"block {k} offset")
        length = r.u32(f"block {k} length")
        act_id = r.u32(f"block {k} activation")
        if act_id > 4:
            raise WeightFormatError(
                f"unknown block activation id {act_id} at offset {at + 8}")
        blocks.append((off, length, Activation(act_id)))
    group_count = r.u32("layout group count")
    groups = tuple(r.u32(f"layout group {k}") for k in range(group_count))
    continuous = r.u32("layout continuous count")
    v_dim = r.u32("layout v_dim")
    r_c = r.f32("layout r_c")
    r_v = r.f32("layout r_v")
    if r.pos != len(data):
        raise WeightFormatError(
            f"trailing bytes: file has {len(data)}, payload ends at {r.pos}")

    try:
        spec = OutputBlockSpec(blocks=tuple(blocks))
        net = MlpNetwork(layers, spec)
    except (ValueError, TypeError) as exc:
        raise WeightFormatError(f"inconsistent network structure: {exc}") from exc
    if group_count == 0 and continuous == 0 and v_dim == 0:
        return net, None
    try:
        layout = LatentLayout(categorical_groups=groups, continuous_codes=continuous,
                              v_dim=v_dim, r_c=r_c, r_v=r_v)
    except ValueError as exc:
        raise WeightFormatError(f"invalid latent layout section: {exc}") from exc
    if layout.l != net.out_dim and layout.l != net.in_dim:
        raise WeightFormatError(
            f"layout dimension L={layout.l} matches neither network input "
            f"({net.in_dim}) nor output ({net.out_dim})")
    return net, layout
