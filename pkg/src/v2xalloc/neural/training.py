"""Mini-batch training with Adam-style per-parameter step sizes."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..errors import TrainingDivergedError
from ..rng import STREAM_SHUFFLE, make_rng
from .losses import dual_head_loss, loss_gradients
from .network import Network


@dataclass
class TrainingConfig:
    batch_size: int = 128
    epochs: int = 100            # Table defaults: 100 for the CNN, 500 for the DNN
    alpha: float = 0.1           # weight of the C-UE power regression loss
    beta: float = 0.1            # weight of the V-UE power regression loss
    learning_rate: float = 1e-3
    seed: int = 0
    validation_fraction: float = 0.0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be nonnegative")
        if not (0.0 <= self.validation_fraction < 1.0):
            raise ValueError("validation_fraction must lie in [0, 1)")

    @classmethod
    def for_kind(cls, kind: str, **overrides) -> "TrainingConfig":
        epochs = 100 if kind == "cnn" else 500
        overrides.setdefault("epochs", epochs)
        return cls(**overrides)


@dataclass
class EpochStats:
    epoch: int
    l_total: float
    l_cls: float
    l_reg_c: float
    l_reg_v: float


class Adam:
    """Standard Adam with bias correction."""

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999,
                 eps=1e-8):
        self.params = list(params)
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]
        self.t = 0

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * p.grad
            v *= b2
            v += (1.0 - b2) * p.grad ** 2
            p.values -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def _batch_loss(network, x, onehot, y_pc, y_pv, config, batch_size=1024):
    """Mean loss over a dataset without touching gradients."""
    total = 0.0
    for start in range(0, len(x), batch_size):
        sl = slice(start, start + batch_size)
        probs, pc, pv = network.forward(x[sl])
        l_total, *_ = dual_head_loss(probs, onehot[sl], pc, y_pc[sl],
                                     pv, y_pv[sl], config.alpha, config.beta)
        total += l_total * (min(start + batch_size, len(x)) - start)
    return total / len(x)


def train(network: Network, x, y_class, y_pc, y_pv,
          config: TrainingConfig) -> list[EpochStats]:
    """Train in place; returns the per-epoch loss trace.

    Deterministic per seed, including the shuffle order. A positive
    ``validation_fraction`` holds that share of samples out of training
    (seed-deterministically), and the parameters with the best validation
    loss over the epochs are restored at the end; the trace always reports
    training losses. Raises TrainingDivergedError as soon as a batch loss
    is non-finite.
    """
    n = len(x)
    if n == 0:
        raise ValueError("training dataset is empty")
    onehot = np.zeros((n, network.spec.n_classes))
    onehot[np.arange(n), y_class] = 1.0

    rng = make_rng(config.seed, STREAM_SHUFFLE)
    indices = rng.permutation(n)
    n_val = int(n * config.validation_fraction)
    val_idx = indices[:n_val]
    train_idx = indices[n_val:]
    if train_idx.size == 0:
        raise ValueError("validation fraction leaves no training samples")

    adam = Adam(network.params(), learning_rate=config.learning_rate)
    trace = []
    best_val = np.inf
    best_params = None
    for epoch in range(1, config.epochs + 1):
        order = train_idx[rng.permutation(train_idx.size)]
        sums = np.zeros(4)
        for start in range(0, order.size, config.batch_size):
            idx = order[start:start + config.batch_size]
            probs, pc, pv = network.forward(x[idx])
            losses = dual_head_loss(probs, onehot[idx], pc, y_pc[idx],
                                    pv, y_pv[idx], config.alpha, config.beta)
            if not np.isfinite(losses[0]):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch offset {start}")
            grads = loss_gradients(probs, onehot[idx], pc, y_pc[idx],
                                   pv, y_pv[idx], config.alpha, config.beta)
            network.zero_grad()
            network.backward(*grads)
            adam.step()
            sums += np.array(losses) * idx.size
        mean = sums / order.size
        trace.append(EpochStats(epoch, *mean))
        if val_idx.size:
            val_loss = _batch_loss(network, x[val_idx], onehot[val_idx],
                                   y_pc[val_idx], y_pv[val_idx], config)
            if val_loss < best_val:
                best_val = val_loss
                best_params = [p.values.copy() for p in network.params()]

    if best_params is not None:
        for p, vals in zip(network.params(), best_params):
            p.values[...] = vals
    return trace


def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "L_total", "L_cls", "L_reg_c", "L_reg_v"])
        for row in trace:
            writer.writerow([row.epoch, f"{row.l_total:.9g}", f"{row.l_cls:.9g}",
                             f"{row.l_reg_c:.9g}", f"{row.l_reg_v:.9g}"])
