"""Allocation solvers: exhaustive benchmark, fixed-power baselines, oracle.

The exhaustive benchmark enumerates every (matching, discretized power)
scheme and returns the feasible objective maximizer. It is implemented with
a per-pair factorization: capacities of every (C-UE, V-UE, power level,
power level) combination are Monte-Carlo estimated once, after which the
search over matchings and per-pair level choices is pure table arithmetic.
The factorization covers the identical candidate set as naive enumeration
because, for a fixed matching, the objective separates across pairs except
through the latency term, which depends only on the bottleneck pair; the
search therefore enumerates every possible (bottleneck pair, bottleneck
level combo) explicitly and maximizes the remaining pairs independently.

All candidate comparisons inside one solver call share one fading stream
(common random numbers), so the selected argmax is deterministic per seed
and reproducible by any other enumeration of the same candidate set under
the same stream.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import matchings
from .config import dbm_to_watts, watts_to_dbm
from .errors import IntractableSearchError
from .problem import (Allocation, CapacityReport, FadingBlock, draw_fading_block,
                      effective_channels, evaluate_allocation, xi_from_samples)
from .rng import STREAM_POWER, make_rng

_VALID_FLOOR = -1e28  # totals below this mean "no admissible candidate"
_NEG = -1e30          # finite stand-in for impossible per-C-UE choices


@dataclass
class PowerGrid:
    """Per-role transmit power discretization, uniform in dB."""

    levels_cue: int = 4
    levels_vue: int = 4
    p_min_cue_w: float = dbm_to_watts(10.0)
    p_max_cue_w: float = dbm_to_watts(23.0)
    p_min_vue_w: float = dbm_to_watts(10.0)
    p_max_vue_w: float = dbm_to_watts(23.0)
    include_zero: bool = False

    def __post_init__(self):
        if self.levels_cue < 1 or self.levels_vue < 1:
            raise ValueError("power grids need at least one level")
        if self.p_min_cue_w > self.p_max_cue_w or self.p_min_vue_w > self.p_max_vue_w:
            raise ValueError("p_min must not exceed p_max")

    @classmethod
    def from_config(cls, config, levels_cue: int = 4, levels_vue: int = 4,
                    include_zero: bool = False) -> "PowerGrid":
        return cls(levels_cue=levels_cue, levels_vue=levels_vue,
                   p_min_cue_w=config.p_min_cue_w, p_max_cue_w=config.p_max_cue_w,
                   p_min_vue_w=config.p_min_vue_w, p_max_vue_w=config.p_max_vue_w,
                   include_zero=include_zero)

    @staticmethod
    def _levels(p_min_w: float, p_max_w: float, levels: int,
                include_zero: bool) -> np.ndarray:
        if levels == 1:
            vals = np.array([p_max_w])  # a single level sits at the cap
        else:
            dbm = np.linspace(watts_to_dbm(p_min_w), watts_to_dbm(p_max_w), levels)
            vals = np.array([dbm_to_watts(v) for v in dbm])
        if include_zero:
            vals = np.concatenate([[0.0], vals])
        return vals

    def cue_levels_w(self) -> np.ndarray:
        return self._levels(self.p_min_cue_w, self.p_max_cue_w,
                            self.levels_cue, self.include_zero)

    def vue_levels_w(self) -> np.ndarray:
        return self._levels(self.p_min_vue_w, self.p_max_vue_w,
                            self.levels_vue, self.include_zero)


@dataclass
class SolverResult:
    allocation: Allocation
    report: CapacityReport
    candidates_evaluated: int
    wall_time_s: float


# ---------------------------------------------------------------------------
# Shared Monte-Carlo tables


def _pair_tables(large_scale, config, pc_levels, pv_levels, block: FadingBlock):
    """Capacity tables over (C-UE m, V-UE s, C-UE level i, V-UE level j).

    Returns (cc, cv, xi, cc0): matched C-UE capacity, V-UE capacity, latency
    compliance of the pair, and the interference-free C-UE capacity per level.
    The arithmetic mirrors problem._capacity_samples operation for operation
    so table entries are bit-identical to a direct evaluation of the same
    candidate on the same fading block.
    """
    h_cue_bs, h_vue, h_vue_bs, h_cue_vue = effective_channels(large_scale, block)
    n0 = config.noise_w
    target = config.target_rate_bpshz

    num_c = pc_levels[None, :, None] * h_cue_bs[:, None, :]          # (M, Lc, K)
    den_c = n0 + pv_levels[None, :, None] * h_vue_bs[:, None, :]     # (N, Lv, K)
    gamma_c = num_c[:, None, :, None, :] / den_c[None, :, None, :, :]
    cc = np.log2(1.0 + gamma_c).mean(axis=-1)                        # (M, N, Lc, Lv)
    cc0 = np.log2(1.0 + num_c / n0).mean(axis=-1)                    # (M, Lc)

    num_v = pv_levels[None, :, None] * h_vue[:, None, :]             # (N, Lv, K)
    den_v = n0 + pc_levels[None, None, :, None] * h_cue_vue[:, :, None, :]  # (M,N,Lc,K)
    cap_v = np.log2(1.0 + num_v[None, :, None, :, :] / den_v[:, :, :, None, :])
    cv = cap_v.mean(axis=-1)                                         # (M, N, Lc, Lv)
    xi = np.count_nonzero(cap_v >= target, axis=-1) / block.k
    return cc, cv, xi, cc0


def _fixed_power_tables(large_scale, config, p_cue, p_vue, block: FadingBlock):
    """Same tables as _pair_tables but for one fixed per-transmitter power vector."""
    h_cue_bs, h_vue, h_vue_bs, h_cue_vue = effective_channels(large_scale, block)
    n0 = config.noise_w
    target = config.target_rate_bpshz

    num_c = p_cue[:, None] * h_cue_bs                                # (M, K)
    den_c = n0 + p_vue[:, None] * h_vue_bs                           # (N, K)
    cc = np.log2(1.0 + num_c[:, None, :] / den_c[None, :, :]).mean(axis=-1)  # (M, N)
    cc0 = np.log2(1.0 + num_c / n0).mean(axis=-1)                    # (M,)

    num_v = p_vue[:, None] * h_vue                                   # (N, K)
    den_v = n0 + p_cue[:, None, None] * h_cue_vue                    # (M, N, K)
    cap_v = np.log2(1.0 + num_v[None, :, :] / den_v)                 # (M, N, K)
    cv = cap_v.mean(axis=-1)
    xi = np.count_nonzero(cap_v >= target, axis=-1) / block.k
    return cc, cv, xi, cc0


# ---------------------------------------------------------------------------
# Exhaustive search


class _MatchingSearch:
    """Vectorized argmax over matchings x per-pair level choices."""

    def __init__(self, large_scale, config, pc_levels, pv_levels, block):
        self.m, self.n = large_scale.m, large_scale.n
        self.pc_levels, self.pv_levels = pc_levels, pv_levels
        self.lc, self.lv = len(pc_levels), len(pv_levels)
        self.ll = self.lc * self.lv
        self.w1 = config.weight_vue
        self.w2 = config.weight_latency
        self.r0 = config.min_cue_capacity_bpshz

        cc, cv, xi, cc0 = _pair_tables(large_scale, config, pc_levels,
                                       pv_levels, block)
        mn = self.m * self.n
        self.u2 = (cc + self.w1 * cv).reshape(mn, self.ll)
        self.cv2 = cv.reshape(mn, self.ll)
        self.xi2 = xi.reshape(mn, self.ll)
        self.feas2 = (cc >= self.r0).reshape(mn, self.ll)
        self.cc0 = cc0
        self.feas0 = cc0 >= self.r0

        self.perms = matchings.all_matchings(self.m, self.n)      # (G, N)
        self.q = self.perms * self.n + np.arange(self.n)[None, :]  # pair ids

    def _pair_structures(self, feasible_only: bool):
        u_eff = np.where(self.feas2, self.u2, -np.inf) if feasible_only else self.u2
        order = np.argsort(self.cv2, axis=1, kind="stable")
        cv_sorted = np.take_along_axis(self.cv2, order, axis=1)
        u_sorted = np.take_along_axis(u_eff, order, axis=1)
        sufmax = np.maximum.accumulate(u_sorted[:, ::-1], axis=1)[:, ::-1]

        mn, ll = self.cv2.shape
        b_gt = np.full((mn, ll, mn), -np.inf)
        b_ge = np.full((mn, ll, mn), -np.inf)
        for qp in range(mn):
            pos_gt = np.searchsorted(cv_sorted[qp], self.cv2, side="right")
            pos_ge = np.searchsorted(cv_sorted[qp], self.cv2, side="left")
            safe_gt = np.minimum(pos_gt, ll - 1)
            safe_ge = np.minimum(pos_ge, ll - 1)
            b_gt[:, :, qp] = np.where(pos_gt < ll, sufmax[qp][safe_gt], -np.inf)
            b_ge[:, :, qp] = np.where(pos_ge < ll, sufmax[qp][safe_ge], -np.inf)
        return u_eff, b_gt, b_ge

    def _unmatched_terms(self, feasible_only: bool):
        """Per-matching total of the best interference-free C-UE capacities."""
        g_count = len(self.perms)
        if self.m == self.n:
            return np.zeros(g_count)
        u0 = np.where(self.feas0, self.cc0, -np.inf) if feasible_only else self.cc0
        best0 = u0.max(axis=1)
        best0 = np.where(np.isneginf(best0), _NEG, best0)
        return best0.sum() - best0[self.perms].sum(axis=1)

    def search(self, feasible_only: bool):
        """Best total and the argwhere list of (matching, bottleneck, combo)."""
        _, b_gt, b_ge = self._pair_structures(feasible_only)
        bot = self.u2 + self.w2 * self.xi2
        if feasible_only:
            bot = np.where(self.feas2, bot, -np.inf)
        unmatched = self._unmatched_terms(feasible_only)

        g_count = len(self.perms)
        totals = np.empty((g_count, self.n, self.ll))
        for b in range(self.n):
            qb = self.q[:, b]
            acc = bot[qb] + unmatched[:, None]
            gt_rows = b_gt[qb]
            ge_rows = b_ge[qb]
            for p in range(self.n):
                if p == b:
                    continue
                rows = gt_rows if p < b else ge_rows
                qp = self.q[:, p][:, None, None]
                acc = acc + np.take_along_axis(rows, qp, axis=2)[:, :, 0]
            totals[:, b, :] = acc

        best = totals.max()
        if not np.isfinite(best) or best <= _VALID_FLOOR:
            return None, None
        winners = np.argwhere(totals == best)
        return best, winners

    def reconstruct(self, g: int, b: int, combo: int, feasible_only: bool):
        """Full (matching, level indices) candidate for one winner slot."""
        match = self.perms[g]
        pc_idx = np.full(self.m, -1, dtype=np.int64)
        pv_idx = np.full(self.n, -1, dtype=np.int64)
        i_b, j_b = divmod(combo, self.lv)
        pc_idx[match[b]] = i_b
        pv_idx[b] = j_b
        threshold = self.cv2[self.q[g, b], combo]

        for p in range(self.n):
            if p == b:
                continue
            qp = self.q[g, p]
            admissible = (self.cv2[qp] > threshold if p < b
                          else self.cv2[qp] >= threshold)
            if feasible_only:
                admissible = admissible & self.feas2[qp]
            u = np.where(admissible, self.u2[qp], -np.inf)
            c_p = int(np.argmax(u))
            if not np.isfinite(u[c_p]):
                return None
            pc_idx[match[p]], pv_idx[p] = divmod(c_p, self.lv)

        for m_idx in range(self.m):
            if pc_idx[m_idx] >= 0:
                continue
            u0 = self.cc0[m_idx]
            if feasible_only:
                u0 = np.where(self.feas0[m_idx], u0, -np.inf)
            pc_idx[m_idx] = int(np.argmax(u0))

        return match, pc_idx, pv_idx

    def best_candidate(self, feasible_only: bool):
        best, winners = self.search(feasible_only)
        if best is None:
            return None
        chosen = None
        for g, b, combo in winners:
            cand = self.reconstruct(int(g), int(b), int(combo), feasible_only)
            if cand is None:
                continue
            key = (tuple(cand[0]), tuple(cand[1]), tuple(cand[2]))
            if chosen is None or key < chosen[0]:
                chosen = (key, cand)
        if chosen is None:
            return None
        match, pc_idx, pv_idx = chosen[1]
        return Allocation(matching=match.copy(),
                          p_cue=self.pc_levels[pc_idx],
                          p_vue=self.pv_levels[pv_idx])


def exhaustive_solve(large_scale, config, grid: PowerGrid, rng_seed: int,
                     max_candidates: int = 10_000_000) -> SolverResult:
    """Feasible objective maximizer over all matching x power-grid schemes.

    Ties are broken toward the lexicographically smallest (matching, C-UE
    level indices, V-UE level indices). When no scheme satisfies the minimum
    C-UE capacity constraint, the unconstrained maximizer is returned with
    ``report.feasible`` False rather than raising, so dataset generation can
    flag and continue. ``max_candidates`` caps the factorized enumeration
    size (matchings x bottleneck combos), raising IntractableSearchError
    beyond it.
    """
    t0 = time.perf_counter()
    m, n = large_scale.m, large_scale.n
    if m < n:
        raise ValueError("need at least as many C-UEs as V-UE pairs")
    pc_levels = grid.cue_levels_w()
    pv_levels = grid.vue_levels_w()
    g_count = matchings.n_matchings(m, n)
    enumeration = g_count * n * len(pc_levels) * len(pv_levels)
    if enumeration > max_candidates:
        raise IntractableSearchError(
            f"search enumerates {enumeration} candidates "
            f"(> cap {max_candidates}); reduce levels or problem size")

    block = draw_fading_block(m, n, config.mc_samples_solver, rng_seed)
    searcher = _MatchingSearch(large_scale, config, pc_levels, pv_levels, block)

    candidates = enumeration
    alloc = searcher.best_candidate(feasible_only=True)
    if alloc is None:
        candidates += enumeration
        alloc = searcher.best_candidate(feasible_only=False)

    report = evaluate_allocation(large_scale, alloc, config, block=block)
    return SolverResult(allocation=alloc, report=report,
                        candidates_evaluated=candidates,
                        wall_time_s=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Fixed-power baselines


def fixed_power_baseline(large_scale, config, mode: str, rng_seed: int,
                         grid: PowerGrid = None) -> SolverResult:
    """MaxPower / MinPower / RandomPower baseline.

    Sets every transmit power to the configured maximum, minimum, or an
    i.i.d. uniform draw over the solver's power levels in [p_min, p_max]
    (per transmitter), then picks the best full matching by enumeration
    under those powers (feasible matchings preferred, best-effort flagged
    result when none is). Random draws come from the discretized scheme set
    so that every baseline candidate the benchmark could have considered is
    dominated by it on the shared stream.
    """
    t0 = time.perf_counter()
    m, n = large_scale.m, large_scale.n
    if mode == "max":
        p_cue = np.full(m, config.p_max_cue_w)
        p_vue = np.full(n, config.p_max_vue_w)
    elif mode == "min":
        p_cue = np.full(m, config.p_min_cue_w)
        p_vue = np.full(n, config.p_min_vue_w)
    elif mode == "random":
        grid = grid or PowerGrid.from_config(config)
        rng = make_rng(rng_seed, STREAM_POWER)
        cue_levels = grid.cue_levels_w()
        vue_levels = grid.vue_levels_w()
        p_cue = cue_levels[rng.integers(0, len(cue_levels), size=m)]
        p_vue = vue_levels[rng.integers(0, len(vue_levels), size=n)]
    else:
        raise ValueError(f"unknown baseline mode {mode!r}")

    block = draw_fading_block(m, n, config.mc_samples_solver, rng_seed)
    cc, cv, xi, cc0 = _fixed_power_tables(large_scale, config, p_cue, p_vue, block)
    w1, w2, r0 = config.weight_vue, config.weight_latency, config.min_cue_capacity_bpshz

    perms = matchings.all_matchings(m, n)
    g_count = len(perms)
    s_idx = np.arange(n)
    cv_g = cv[perms, s_idx]                        # (G, N)
    u_g = (cc + w1 * cv)[perms, s_idx].sum(axis=1)
    if m > n:
        u_g = u_g + (cc0.sum() - cc0[perms].sum(axis=1))
    s_min = np.argmin(cv_g, axis=1)
    rows = np.arange(g_count)
    xi_g = xi[perms[rows, s_min], s_min]
    obj_g = u_g + w2 * xi_g

    feas_g = (cc[perms, s_idx] >= r0).all(axis=1)
    if m > n:
        feas0 = cc0 >= r0
        feas_g &= (feas0.sum() - feas0[perms].sum(axis=1)) == (m - n)

    if feas_g.any():
        best = int(np.argmax(np.where(feas_g, obj_g, -np.inf)))
    else:
        best = int(np.argmax(obj_g))

    alloc = Allocation(matching=perms[best].copy(), p_cue=p_cue, p_vue=p_vue)
    report = evaluate_allocation(large_scale, alloc, config, block=block)
    return SolverResult(allocation=alloc, report=report,
                        candidates_evaluated=g_count,
                        wall_time_s=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Brute-force oracle (testing only)


def brute_force_oracle(large_scale, config, grid: PowerGrid,
                       rng_seed: int) -> SolverResult:
    """Structurally independent re-enumeration for tiny instances.

    Walks every (matching, per-transmitter level) candidate in lexicographic
    order and evaluates each through the public problem API on the shared
    fading stream; no tables, no pruning. Restricted to M, N <= 3 and <= 3
    levels per role.
    """
    t0 = time.perf_counter()
    m, n = large_scale.m, large_scale.n
    pc_levels = grid.cue_levels_w()
    pv_levels = grid.vue_levels_w()
    if m > 3 or n > 3 or len(pc_levels) > 3 or len(pv_levels) > 3:
        raise ValueError("brute_force_oracle is limited to M, N <= 3 and <= 3 levels")

    block = draw_fading_block(m, n, config.mc_samples_solver, rng_seed)
    best_feasible = None
    best_any = None
    count = 0
    for match in itertools.permutations(range(m), n):
        for lev_c in itertools.product(range(len(pc_levels)), repeat=m):
            for lev_v in itertools.product(range(len(pv_levels)), repeat=n):
                alloc = Allocation(matching=np.array(match),
                                   p_cue=pc_levels[list(lev_c)],
                                   p_vue=pv_levels[list(lev_v)])
                report = evaluate_allocation(large_scale, alloc, config,
                                             block=block)
                count += 1
                if best_any is None or report.objective > best_any[1].objective:
                    best_any = (alloc, report)
                if report.feasible and (best_feasible is None
                                        or report.objective > best_feasible[1].objective):
                    best_feasible = (alloc, report)

    alloc, report = best_feasible if best_feasible is not None else best_any
    return SolverResult(allocation=alloc, report=report,
                        candidates_evaluated=count,
                        wall_time_s=time.perf_counter() - t0)
