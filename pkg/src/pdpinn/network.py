"""Trainable tanh MLP: initialization, jet forward pass, checkpoints."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .diffgraph import ParamStore, TracedJet, affine, tanh

_CKPT_MAGIC = b"MLPC"
_CKPT_VERSION = 1


@dataclass(frozen=True)
class MlpConfig:
    """Architecture of the trainable network.

    ``hidden_widths`` lists the widths of the hidden layers in order; the
    output layer is linear (no activation).
    """

    input_dim: int
    hidden_widths: tuple
    output_dim: int
    seed: int = 0

    def __post_init__(self):
        widths = tuple(self.hidden_widths)
        object.__setattr__(self, "hidden_widths", widths)
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("dimensions must be >= 1")
        if len(widths) < 1 or any(w < 1 for w in widths):
            raise ValueError("need at least one hidden layer of width >= 1")


def init_mlp(cfg: MlpConfig) -> ParamStore:
    """Uniform initialization on [-1/sqrt(fan_in), 1/sqrt(fan_in)].

    Weights and biases of a layer share the same law; draws are reproducible
    for a given seed.
    """
    rng = np.random.default_rng(cfg.seed)
    dims = [cfg.input_dim, *cfg.hidden_widths, cfg.output_dim]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        W = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append((W, b))
    return ParamStore(layers)


def mlp_forward(layers, x):
    """Apply the network to an input jet.

    ``layers`` is either ``ParamStore.layers`` (plain forward evaluation) or
    the Parameter leaves from ``diffgraph.wrap_params`` with ``x`` a traced
    jet (gradient recording).  tanh follows every layer except the last.
    """
    W0 = layers[0][0]
    fan_in = (W0.arr if hasattr(W0, "arr") else np.asarray(W0)).shape[1]
    width = x.jet.value.shape[-1] if isinstance(x, TracedJet) else x.value.shape[-1]
    if width != fan_in:
        raise ValueError(f"input width {width} does not match fan-in {fan_in}")
    out = x
    for i, (W, b) in enumerate(layers):
        out = affine(out, W, b)
        if i < len(layers) - 1:
            out = tanh(out)
    return out


def save_checkpoint(store: ParamStore, path) -> None:
    """Write parameters as little-endian doubles behind a shape header."""
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<II", _CKPT_VERSION, len(store.layers)))
        for W, _ in store.layers:
            fh.write(struct.pack("<II", W.shape[0], W.shape[1]))
        for W, b in store.layers:
            fh.write(W.astype("<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())


def load_checkpoint(path) -> ParamStore:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _CKPT_MAGIC:
        raise ValueError(f"{path}: not a parameter checkpoint")
    version, n_layers = struct.unpack_from("<II", data, 4)
    if version != _CKPT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos = 12
    shapes = []
    for _ in range(n_layers):
        out_dim, in_dim = struct.unpack_from("<II", data, pos)
        shapes.append((out_dim, in_dim))
        pos += 8
    expected = pos + 8 * sum(o * i + o for o, i in shapes)
    if len(data) != expected:
        raise ValueError(f"{path}: truncated checkpoint "
                         f"({len(data)} bytes, expected {expected})")
    layers = []
    for out_dim, in_dim in shapes:
        W = np.frombuffer(data, dtype="<f8", count=out_dim * in_dim,
                          offset=pos).reshape(out_dim, in_dim).copy()
        pos += 8 * out_dim * in_dim
        b = np.frombuffer(data, dtype="<f8", count=out_dim, offset=pos).copy()
        pos += 8 * out_dim
        layers.append((W, b))
    return ParamStore(layers)
