"""Allocation decision space, SINR, capacities, latency metric, objective.

Capacities are ergodic: Monte-Carlo averages of log2(1 + SINR) over redraws
of all fast-fading factors with the large-scale gains held fixed. Every
estimator in this module draws its fading from ``draw_fading_block`` so that
callers evaluating many candidate allocations under one (seed, sample count)
share a common random-number stream, which makes argmax comparisons between
candidates noise-consistent and bit-reproducible.

Estimator arrays keep the realization axis last and contiguous; reductions
over identical draws then produce bit-identical means regardless of which
code path assembled the array.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matchings
from .channel import ChannelGains, LinkGains
from .rng import STREAM_MC, make_rng


@dataclass
class Allocation:
    """One candidate decision: reuse matching plus both power vectors.

    ``matching[s]`` is the index of the C-UE whose spectrum V-UE s reuses.
    Powers are in watts.
    """

    matching: np.ndarray
    p_cue: np.ndarray
    p_vue: np.ndarray

    def __post_init__(self):
        self.matching = np.asarray(self.matching, dtype=np.int64)
        self.p_cue = np.asarray(self.p_cue, dtype=np.float64)
        self.p_vue = np.asarray(self.p_vue, dtype=np.float64)

    @property
    def m(self) -> int:
        return self.p_cue.size

    @property
    def n(self) -> int:
        return self.p_vue.size

    def validate(self, p_max_cue_w: float, p_max_vue_w: float):
        matchings.validate_matching(self.matching, self.m)
        if self.matching.size != self.n:
            raise ValueError("matching length must equal the number of V-UEs")
        if np.any(self.p_cue < 0) or np.any(self.p_cue > p_max_cue_w):
            raise ValueError("C-UE power out of bounds")
        if np.any(self.p_vue < 0) or np.any(self.p_vue > p_max_vue_w):
            raise ValueError("V-UE power out of bounds")

    def class_index(self) -> int:
        return matchings.encode_matching(self.matching, self.m)

    def inverse_matching(self) -> np.ndarray:
        """Per-C-UE index of the V-UE reusing it, -1 when unmatched."""
        inv = np.full(self.m, -1, dtype=np.int64)
        inv[self.matching] = np.arange(self.n)
        return inv


@dataclass
class ObjectiveWeights:
    w1: float = 1.0   # weight on summed V-UE capacities
    w2: float = 10.0  # weight on the latency-compliance probability

    def __post_init__(self):
        if self.w1 <= 0 or self.w2 <= 0:
            raise ValueError("objective weights must be strictly positive")


@dataclass
class LatencySpec:
    """Latency requirement: packet of B bits within L seconds."""

    packet_bits: float = 6400.0
    latency_s: float = 0.1
    per_channel_bandwidth_hz: float = 2e6

    def __post_init__(self):
        if min(self.packet_bits, self.latency_s, self.per_channel_bandwidth_hz) <= 0:
            raise ValueError("latency spec fields must be positive")

    @property
    def target_rate_bpshz(self) -> float:
        return self.packet_bits / self.latency_s / self.per_channel_bandwidth_hz

    @classmethod
    def from_config(cls, config) -> "LatencySpec":
        return cls(config.packet_bits, config.latency_s,
                   config.per_channel_bandwidth_hz)


@dataclass
class CapacityReport:
    """Evaluated performance of one allocation."""

    c_cue: np.ndarray          # (M,) ergodic capacities, bps/Hz
    c_vue: np.ndarray          # (N,)
    xi: float                  # latency-compliance probability in [0, 1]
    objective: float
    feasible: bool
    mc_samples: int
    violations: list = field(default_factory=list)


@dataclass
class FadingBlock:
    """Common random numbers: K fast-fading redraws of every link gain.

    Realization axis is last: cue_bs (M, K), vue (N, K), vue_bs (N, K),
    cue_vue (M, N, K).
    """

    cue_bs: np.ndarray
    vue: np.ndarray
    vue_bs: np.ndarray
    cue_vue: np.ndarray

    @property
    def k(self) -> int:
        return self.cue_bs.shape[-1]


def draw_fading_block(m: int, n: int, mc_samples: int, rng_seed: int) -> FadingBlock:
    """Draw the shared fading stream for one (seed, K) evaluation context."""
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    rng = make_rng(rng_seed, STREAM_MC)
    return FadingBlock(
        cue_bs=rng.exponential(1.0, size=(m, mc_samples)),
        vue=rng.exponential(1.0, size=(n, mc_samples)),
        vue_bs=rng.exponential(1.0, size=(n, mc_samples)),
        cue_vue=rng.exponential(1.0, size=(m, n, mc_samples)),
    )


def effective_channels(large_scale: LinkGains, block: FadingBlock):
    """Per-realization composite gains h = alpha * g, realization axis last."""
    return (
        large_scale.cue_bs[:, None] * block.cue_bs,
        large_scale.vue[:, None] * block.vue,
        large_scale.vue_bs[:, None] * block.vue_bs,
        large_scale.cue_vue[:, :, None] * block.cue_vue,
    )


# ---------------------------------------------------------------------------
# Instantaneous SINR


def sinr(gains: ChannelGains, alloc: Allocation, noise_w: float):
    """Instantaneous SINRs (gamma_c, gamma_v) for one fading snapshot."""
    if noise_w <= 0:
        raise ValueError("noise power must be positive")
    inv = alloc.inverse_matching()
    interference_bs = np.zeros(alloc.m)
    matched = inv >= 0
    interference_bs[matched] = alloc.p_vue[inv[matched]] * gains.h_vue_bs[inv[matched]]
    gamma_c = alloc.p_cue * gains.h_cue_bs / (noise_w + interference_bs)

    mm = alloc.matching
    s_idx = np.arange(alloc.n)
    interference_v = alloc.p_cue[mm] * gains.h_cue_vue[mm, s_idx]
    gamma_v = alloc.p_vue * gains.h_vue / (noise_w + interference_v)
    return gamma_c, gamma_v


# ---------------------------------------------------------------------------
# Monte-Carlo capacity machinery


def _capacity_samples(large_scale: LinkGains, alloc: Allocation,
                      noise_w: float, block: FadingBlock):
    """Per-realization capacities log2(1 + gamma), shapes (M, K) and (N, K)."""
    h_cue_bs, h_vue, h_vue_bs, h_cue_vue = effective_channels(large_scale, block)

    inv = alloc.inverse_matching()
    num_c = alloc.p_cue[:, None] * h_cue_bs
    interference = np.zeros_like(num_c)
    for m_idx in range(alloc.m):
        s = inv[m_idx]
        if s >= 0:
            interference[m_idx] = alloc.p_vue[s] * h_vue_bs[s]
    cap_c = np.log2(1.0 + num_c / (noise_w + interference))

    num_v = alloc.p_vue[:, None] * h_vue
    interference_v = np.empty_like(num_v)
    for s in range(alloc.n):
        mm = alloc.matching[s]
        interference_v[s] = alloc.p_cue[mm] * h_cue_vue[mm, s]
    cap_v = np.log2(1.0 + num_v / (noise_w + interference_v))
    return np.ascontiguousarray(cap_c), np.ascontiguousarray(cap_v)


def ergodic_capacities(large_scale: LinkGains, alloc: Allocation, config,
                       mc_samples: int = None, rng_seed: int = 0,
                       block: FadingBlock = None):
    """Ergodic capacities (c_cue, c_vue) in bps/Hz.

    Averages log2(1 + gamma) over ``mc_samples`` i.i.d. redraws of all
    fast-fading factors, holding the large-scale gains fixed. Deterministic
    per seed; pass a pre-drawn ``block`` to share the stream across calls.
    """
    if block is None:
        k = mc_samples if mc_samples is not None else config.mc_samples_solver
        block = draw_fading_block(large_scale.m, large_scale.n, k, rng_seed)
    cap_c, cap_v = _capacity_samples(large_scale, alloc, config.noise_w, block)
    return cap_c.mean(axis=-1), cap_v.mean(axis=-1)


def latency_metric(large_scale: LinkGains, alloc: Allocation, spec: LatencySpec,
                   config, mc_samples: int = None, rng_seed: int = 0,
                   block: FadingBlock = None) -> float:
    """Probability that the weakest V-UE meets the target rate.

    The weakest V-UE is the one with the smallest ergodic capacity (ties go
    to the lowest index); xi is the fraction of fading realizations in which
    its instantaneous capacity reaches ``spec.target_rate_bpshz``.
    """
    if block is None:
        k = mc_samples if mc_samples is not None else config.mc_samples_solver
        block = draw_fading_block(large_scale.m, large_scale.n, k, rng_seed)
    _, cap_v = _capacity_samples(large_scale, alloc, config.noise_w, block)
    s_min = int(np.argmin(cap_v.mean(axis=-1)))
    return xi_from_samples(cap_v[s_min], spec.target_rate_bpshz)


def xi_from_samples(cap_samples: np.ndarray, target_rate_bpshz: float) -> float:
    return np.count_nonzero(cap_samples >= target_rate_bpshz) / cap_samples.size


def objective(report: CapacityReport, weights: ObjectiveWeights) -> float:
    """Weighted sum: total C-UE capacity + w1 * V-UE capacity + w2 * xi."""
    return float(np.sum(report.c_cue) + weights.w1 * np.sum(report.c_vue)
                 + weights.w2 * report.xi)


def check_feasible(large_scale: LinkGains, alloc: Allocation, config,
                   mc_samples: int = None, rng_seed: int = 0,
                   block: FadingBlock = None, margin: float = 0.0,
                   c_cue: np.ndarray = None):
    """Constraint check; returns (feasible, violation names).

    Constraints: every C-UE ergodic capacity meets the minimum (7c), power
    bounds (7d)/(7e), distinct in-range matching (7f)/(7g). ``margin`` is a
    Monte-Carlo slack subtracted from the (7c) threshold when re-checking an
    allocation with an estimator seed different from the one that chose it.
    Pass ``c_cue`` to reuse already-computed capacities.
    """
    violations = []
    counts = np.bincount(alloc.matching[(alloc.matching >= 0)
                                        & (alloc.matching < alloc.m)],
                         minlength=alloc.m)
    for m_idx in np.flatnonzero(counts > 1):
        violations.append(f"(7f) C-UE {m_idx} reused more than once")
    bad = (alloc.matching < 0) | (alloc.matching >= alloc.m)
    for s in np.flatnonzero(bad):
        violations.append(f"(7g) V-UE {s} has invalid C-UE index {alloc.matching[s]}")
    for m_idx in np.flatnonzero((alloc.p_cue < 0) | (alloc.p_cue > config.p_max_cue_w)):
        violations.append(f"(7d) m={m_idx}")
    for s in np.flatnonzero((alloc.p_vue < 0) | (alloc.p_vue > config.p_max_vue_w)):
        violations.append(f"(7e) s={s}")

    if not violations:
        if c_cue is None:
            c_cue, _ = ergodic_capacities(large_scale, alloc, config,
                                          mc_samples=mc_samples,
                                          rng_seed=rng_seed, block=block)
        for m_idx in np.flatnonzero(c_cue < config.min_cue_capacity_bpshz - margin):
            violations.append(f"(7c) m={m_idx}")
    return len(violations) == 0, violations


def evaluate_allocation(large_scale: LinkGains, alloc: Allocation, config,
                        mc_samples: int = None, rng_seed: int = 0,
                        block: FadingBlock = None) -> CapacityReport:
    """Full evaluation of one allocation under one shared fading stream."""
    if block is None:
        k = mc_samples if mc_samples is not None else config.mc_samples_solver
        block = draw_fading_block(large_scale.m, large_scale.n, k, rng_seed)
    cap_c, cap_v = _capacity_samples(large_scale, alloc, config.noise_w, block)
    c_cue = cap_c.mean(axis=-1)
    c_vue = cap_v.mean(axis=-1)
    spec = LatencySpec.from_config(config)
    s_min = int(np.argmin(c_vue))
    xi = xi_from_samples(cap_v[s_min], spec.target_rate_bpshz)
    weights = ObjectiveWeights(config.weight_vue, config.weight_latency)
    feasible, violations = check_feasible(large_scale, alloc, config, c_cue=c_cue)
    report = CapacityReport(
        c_cue=c_cue, c_vue=c_vue, xi=xi,
        objective=0.0, feasible=feasible, mc_samples=block.k,
        violations=violations)
    report.objective = objective(report, weights)
    return report
