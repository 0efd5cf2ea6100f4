"""Consumer side of externally trained model bundles.

A bundle directory holds a generator weight file, a test-image archive, a
pair of parity-fixture archives (fixed latent inputs and the exporter's own
forward outputs), and a plain-text manifest whose sha256.<file> entries pin
every byte. Loading verifies the digests first and refuses the bundle on any
mismatch.

Image archive format "FIM1": bytes 0-3 magic, u32 count, u32 dim, then
count*dim IEEE-754 binary32 little-endian values.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import WeightFormatError
from .latent import Generator
from .mlp import forward_batch, lipschitz_upper_bound
from .weights_io import load_weights

FIM_MAGIC = b"FIM1"


def read_image_archive(path) -> np.ndarray:
    """Load a (count, dim) float64 array from a binary32 archive."""
    data = Path(path).read_bytes()
    if data[:4] != FIM_MAGIC:
        raise WeightFormatError(f"bad magic at offset 0: {data[:4]!r} != {FIM_MAGIC!r}")
    if len(data) < 12:
        raise WeightFormatError(f"truncated header: file has {len(data)} bytes")
    count, dim = struct.unpack_from("<II", data, 4)
    expected = 12 + 4 * count * dim
    if len(data) != expected:
        raise WeightFormatError(
            f"archive length {len(data)} != expected {expected} for {count}x{dim}")
    values = np.frombuffer(data, dtype="<f4", offset=12)
    return values.astype(np.float64).reshape(count, dim)


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if "=" not in line:
            raise WeightFormatError(f"manifest line without '=': {line!r}")
        key, value = line.split("=", 1)
        out[key] = value
    return out


@dataclass
class ModelBundle:
    generator: Generator
    test_images: np.ndarray
    fixture_inputs: np.ndarray
    fixture_outputs: np.ndarray
    manifest: dict

    def fixture_parity(self) -> float:
        """Worst relative deviation between our forward pass on the fixture
        inputs and the exporter's recorded outputs."""
        ours = forward_batch(self.generator.net, self.fixture_inputs)
        theirs = self.fixture_outputs
        denom = np.maximum(np.abs(theirs), 1e-6)
        return float(np.max(np.abs(ours - theirs) / denom))


def load_bundle(directory) -> ModelBundle:
    """Verify digests, then load every bundle artifact."""
    directory = Path(directory)
    manifest = read_manifest(directory / "manifest.txt")
    for key, recorded in manifest.items():
        if not key.startswith("sha256."):
            continue
        name = key[len("sha256."):]
        target = directory / name
        if not target.is_file():
            raise WeightFormatError(f"manifest names missing file {name}")
        actual = hashlib.sha256(target.read_bytes()).hexdigest()
        if actual != recorded:
            raise WeightFormatError(
                f"digest mismatch for {name}: manifest {recorded[:12]}..., "
                f"file {actual[:12]}...")

    net, layout = load_weights(directory / "generator.fcw")
    if layout is None:
        raise WeightFormatError("bundle generator carries no latent layout")
    gen = Generator(net=net, layout=layout, t_hat=lipschitz_upper_bound(net))
    return ModelBundle(
        generator=gen,
        test_images=read_image_archive(directory / "test_images.fim"),
        fixture_inputs=read_image_archive(directory / "fixture_inputs.fim"),
        fixture_outputs=read_image_archive(directory / "fixture_outputs.fim"),
        manifest=manifest)
