"""Channel gains -> network input tensors, and label preparation.

The input plane for one sample is M x (3 + N): the four gain groups
[h_cue_bs | h_vue_bs | h_vue | h_cue_vue] placed column-wise, each value in
dB and standardized with a dataset-level mean/std per group. When M > N the
missing rows of the two N-length columns are padded with a -200 dB sentinel
before standardization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import ChannelGains

SENTINEL_DB = -200.0
GROUP_NAMES = ("h_cue_bs", "h_vue_bs", "h_vue", "h_cue_vue")


def _to_db(values: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    bad = ~(np.isfinite(values) & (values > 0))
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"non-finite or non-positive gain {name}[{idx}]")
    return 10.0 * np.log10(values)


def gains_to_db_plane(gains: ChannelGains) -> np.ndarray:
    """Raw dB feature plane of shape (M, 3 + N), sentinel-padded."""
    m, n = gains.m, gains.n
    plane = np.full((m, 3 + n), SENTINEL_DB)
    plane[:, 0] = _to_db(gains.h_cue_bs, "h_cue_bs")
    plane[:n, 1] = _to_db(gains.h_vue_bs, "h_vue_bs")
    plane[:n, 2] = _to_db(gains.h_vue, "h_vue")
    plane[:, 3:] = _to_db(gains.h_cue_vue, "h_cue_vue")
    return plane


def _group_columns(n: int):
    return [np.array([0]), np.array([1]), np.array([2]), np.arange(3, 3 + n)]


@dataclass
class FeatureScaler:
    """Dataset-level dB mean/std per gain group (4 groups)."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def identity(cls) -> "FeatureScaler":
        return cls(mean=np.zeros(4), std=np.ones(4))

    @classmethod
    def fit(cls, gains_list) -> "FeatureScaler":
        """Pooled statistics over a dataset; sentinel padding is excluded."""
        groups = [[], [], [], []]
        for gains in gains_list:
            groups[0].append(_to_db(gains.h_cue_bs, "h_cue_bs"))
            groups[1].append(_to_db(gains.h_vue_bs, "h_vue_bs"))
            groups[2].append(_to_db(gains.h_vue, "h_vue"))
            groups[3].append(_to_db(gains.h_cue_vue, "h_cue_vue").ravel())
        mean = np.empty(4)
        std = np.empty(4)
        for gi in range(4):
            pooled = np.concatenate(groups[gi])
            mean[gi] = pooled.mean()
            s = pooled.std()
            std[gi] = s if s > 0 else 1.0
        return cls(mean=mean, std=std)

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d) -> "FeatureScaler":
        return cls(mean=np.asarray(d["mean"], dtype=np.float64),
                   std=np.asarray(d["std"], dtype=np.float64))


def featurize(gains: ChannelGains, scaler: FeatureScaler = None) -> np.ndarray:
    """Standardized input tensor of shape (M, 3 + N, 1) for one sample."""
    scaler = scaler or FeatureScaler.identity()
    plane = gains_to_db_plane(gains)
    out = np.empty_like(plane)
    for gi, cols in enumerate(_group_columns(gains.n)):
        out[:, cols] = (plane[:, cols] - scaler.mean[gi]) / scaler.std[gi]
    return out[:, :, None]


def destandardize(features: np.ndarray, n: int, scaler: FeatureScaler) -> np.ndarray:
    """Inverse of the standardization; returns the dB plane."""
    plane = features[:, :, 0].copy()
    for gi, cols in enumerate(_group_columns(n)):
        plane[:, cols] = plane[:, cols] * scaler.std[gi] + scaler.mean[gi]
    return plane


def featurize_batch(gains_list, scaler: FeatureScaler = None) -> np.ndarray:
    return np.stack([featurize(g, scaler) for g in gains_list])


def training_arrays(samples, scaler: FeatureScaler, p_max_cue_w: float,
                    p_max_vue_w: float):
    """(X, class index, normalized power targets) arrays from labeled samples.

    Power targets are watts divided by the per-role maximum so they lie in
    [0, 1], matching the clamped power heads.
    """
    x = np.stack([featurize(s.gains, scaler) for s in samples])
    y_class = np.array([s.label_class for s in samples], dtype=np.int64)
    y_pc = np.stack([s.label_p_cue for s in samples]) / p_max_cue_w
    y_pv = np.stack([s.label_p_vue for s in samples]) / p_max_vue_w
    return x, y_class, y_pc, y_pv
