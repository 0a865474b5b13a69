"""Dual-head network: shared trunk, classification head, two power heads.

The CNN trunk (conv 16/32/64 on the M x (3+N) plane, then dense 256/256/128)
and the FC-DNN trunk (dense 64/128/128) both feed three linear heads: class
logits over all matchings (softmax), and one regression head per power
vector (ReLU, clamped to [0, 1] in normalized power units).

Checkpoint format (versioned binary, little endian):
  magic 'V2XN' | u32 version | u32 header length | header JSON
  followed by one raw float32 buffer per parameter tensor in declaration
  order. The header JSON carries the network spec, the feature scaler, and
  the power de-normalization scales.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import matchings
from ..errors import CheckpointError
from ..problem import Allocation
from ..rng import STREAM_INIT, make_rng
from .features import FeatureScaler, featurize
from .layers import Conv2D, Dense, Flatten, ReLU, UpperClamp, softmax

CHECKPOINT_MAGIC = b"V2XN"
CHECKPOINT_VERSION = 1


@dataclass
class NetworkSpec:
    """Architecture descriptor; shapes must chain consistently."""

    kind: str                     # 'cnn' or 'dnn'
    m: int
    n: int
    conv_channels: tuple = ()     # cnn only; output channels per conv layer
    kernel: tuple = (3, 3)
    dense_widths: tuple = (256, 256, 128)

    def __post_init__(self):
        self.conv_channels = tuple(self.conv_channels)
        self.kernel = tuple(self.kernel)
        self.dense_widths = tuple(self.dense_widths)
        if self.kind not in ("cnn", "dnn"):
            raise ValueError(f"unknown network kind {self.kind!r}")
        if self.kind == "cnn" and not self.conv_channels:
            raise ValueError("cnn spec needs conv_channels")
        if not self.dense_widths:
            raise ValueError("spec needs at least one dense layer")
        if not (self.m >= self.n >= 1):
            raise ValueError("need m >= n >= 1")

    @property
    def input_rows(self) -> int:
        return self.m

    @property
    def input_cols(self) -> int:
        return 3 + self.n

    @property
    def n_classes(self) -> int:
        return math.perm(self.m, self.n)

    @classmethod
    def cnn_default(cls, m: int, n: int) -> "NetworkSpec":
        return cls("cnn", m, n, conv_channels=(16, 32, 64),
                   dense_widths=(256, 256, 128))

    @classmethod
    def dnn_default(cls, m: int, n: int) -> "NetworkSpec":
        return cls("dnn", m, n, dense_widths=(64, 128, 128))

    def to_dict(self):
        return {"kind": self.kind, "m": self.m, "n": self.n,
                "conv_channels": list(self.conv_channels),
                "kernel": list(self.kernel),
                "dense_widths": list(self.dense_widths)}

    @classmethod
    def from_dict(cls, d) -> "NetworkSpec":
        return cls(kind=d["kind"], m=d["m"], n=d["n"],
                   conv_channels=tuple(d["conv_channels"]),
                   kernel=tuple(d["kernel"]),
                   dense_widths=tuple(d["dense_widths"]))


class Network:
    """Trunk plus three heads; holds one in-flight batch of caches."""

    def __init__(self, spec: NetworkSpec, rng_seed: int = 0):
        self.spec = spec
        rng = make_rng(rng_seed, STREAM_INIT)
        self.trunk = []
        rows, cols = spec.input_rows, spec.input_cols
        if spec.kind == "cnn":
            in_ch = 1
            for out_ch in spec.conv_channels:
                self.trunk.append(Conv2D(in_ch, out_ch, spec.kernel[0],
                                         spec.kernel[1], rng))
                self.trunk.append(ReLU())
                in_ch = out_ch
            self.trunk.append(Flatten())
            width = rows * cols * in_ch
        else:
            self.trunk.append(Flatten())
            width = rows * cols
        for dense_width in spec.dense_widths:
            self.trunk.append(Dense(width, dense_width, rng))
            self.trunk.append(ReLU())
            width = dense_width

        self.head_cls = Dense(width, spec.n_classes, rng)
        self.head_pc = Dense(width, spec.m, rng)
        self.head_pv = Dense(width, spec.n, rng)
        # Start the power heads mid-range with small weights so no output
        # sits in the dead zone of the ReLU/clamp pair early in training.
        for head in (self.head_pc, self.head_pv):
            head.w.values *= 0.1
            head.b.values[:] = 0.5
        self._pc_act = [ReLU(), UpperClamp(1.0)]
        self._pv_act = [ReLU(), UpperClamp(1.0)]

    def params(self):
        out = []
        for layer in self.trunk:
            out.extend(layer.params())
        for head in (self.head_cls, self.head_pc, self.head_pv):
            out.extend(head.params())
        return out

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()

    def forward(self, x):
        """Returns (class probabilities, C-UE powers, V-UE powers).

        Power outputs are in normalized units, already clamped to [0, 1].
        """
        x = np.asarray(x, dtype=np.float64)
        expected = (self.spec.input_rows, self.spec.input_cols, 1)
        if x.ndim != 4 or x.shape[1:] != expected:
            raise ValueError(f"expected input of shape (B, {expected[0]}, "
                             f"{expected[1]}, 1), got {x.shape}")
        h = x
        for layer in self.trunk:
            h = layer.forward(h)
        logits = self.head_cls.forward(h)
        probs = softmax(logits)
        pc = h
        for layer in [self.head_pc] + self._pc_act:
            pc = layer.forward(pc)
        pv = h
        for layer in [self.head_pv] + self._pv_act:
            pv = layer.forward(pv)
        return probs, pc, pv

    def backward(self, d_logits, d_pc, d_pv):
        """Accumulates parameter gradients; call zero_grad() first."""
        dh = self.head_cls.backward(d_logits)
        g = d_pc
        for layer in reversed([self.head_pc] + self._pc_act):
            g = layer.backward(g)
        dh = dh + g
        g = d_pv
        for layer in reversed([self.head_pv] + self._pv_act):
            g = layer.backward(g)
        dh = dh + g
        for layer in reversed(self.trunk):
            dh = layer.backward(dh)
        return dh


@dataclass
class TrainedModel:
    """A network bundled with everything inference needs."""

    network: Network
    scaler: FeatureScaler
    p_max_cue_w: float
    p_max_vue_w: float
    meta: dict = field(default_factory=dict)

    @property
    def spec(self) -> NetworkSpec:
        return self.network.spec

    def infer_batch(self, gains_list):
        """Allocations for a list of channel snapshots."""
        x = np.stack([featurize(g, self.scaler) for g in gains_list])
        probs, pc, pv = self.network.forward(x)
        out = []
        for i in range(len(gains_list)):
            cls = int(np.argmax(probs[i]))
            match = matchings.decode_matching(cls, self.spec.m, self.spec.n)
            p_cue = np.clip(pc[i], 0.0, 1.0) * self.p_max_cue_w
            p_vue = np.clip(pv[i], 0.0, 1.0) * self.p_max_vue_w
            out.append(Allocation(matching=match, p_cue=p_cue, p_vue=p_vue))
        return out

    def infer(self, gains) -> Allocation:
        """Real-time decision for one snapshot; always a valid Allocation."""
        return self.infer_batch([gains])[0]


def save_model(path, model: TrainedModel):
    header = {
        "spec": model.spec.to_dict(),
        "scaler": model.scaler.to_dict(),
        "p_max_cue_w": model.p_max_cue_w,
        "p_max_vue_w": model.p_max_vue_w,
        "meta": model.meta,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for p in model.network.params():
            fh.write(np.ascontiguousarray(p.values, dtype="<f4").tobytes())


def load_model(path) -> TrainedModel:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a v2xalloc checkpoint")
    version, header_len = struct.unpack("<II", data[4:12])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(data[12:12 + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint header") from exc

    spec = NetworkSpec.from_dict(header["spec"])
    network = Network(spec, rng_seed=0)
    offset = 12 + header_len
    for p in network.params():
        nbytes = p.size * 4
        buf = data[offset:offset + nbytes]
        if len(buf) != nbytes:
            raise CheckpointError(f"{path}: truncated parameter buffer")
        p.values[...] = np.frombuffer(buf, dtype="<f4").reshape(p.shape)
        offset += nbytes
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")

    return TrainedModel(network=network,
                        scaler=FeatureScaler.from_dict(header["scaler"]),
                        p_max_cue_w=header["p_max_cue_w"],
                        p_max_vue_w=header["p_max_vue_w"],
                        meta=header.get("meta", {}))
