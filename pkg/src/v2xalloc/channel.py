"""Manhattan-grid topology generation and channel gain simulation.

One network snapshot consists of a vehicle drop on the road grid plus the
channel power gains of all V2I and V2V links. Gains decompose as
h = alpha * g: a large-scale part alpha (pathloss x log-normal shadowing)
and a unit-mean exponential fast-fading part g.

Pathloss models:
  * V2I links (any vehicle <-> BS): 128.1 + 37.6 log10(d), d in km.
  * V2V links: simplified two-regime street model. LOS when both vehicles
    drive on the same road: 22.7 log10(d) + 41 + 20 log10(f/5), d in m,
    f in GHz. NLOS otherwise: the LOS formula applied to the around-corner
    (Manhattan) distance plus a fixed 20 dB corner penalty. The constants
    are a documented model choice, not a full WINNER II implementation.

All distances are floored at 1 m before entering a pathloss formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DropError
from .rng import STREAM_DROP, STREAM_FADE, STREAM_SHADOW, make_rng

MIN_PATHLOSS_DISTANCE_M = 1.0
NLOS_CORNER_PENALTY_DB = 20.0


# ---------------------------------------------------------------------------
# Geometry


@dataclass(frozen=True)
class Lane:
    """One directed lane of one road; a segment parallel to an axis."""

    axis: int          # 0: lane runs along x (horizontal road), 1: along y
    road_index: int    # index of the road among roads of the same axis
    offset_m: float    # fixed coordinate of the lane centerline
    start_m: float     # segment extent along the running axis
    end_m: float

    @property
    def length_m(self) -> float:
        return self.end_m - self.start_m

    def point(self, along_m: float) -> tuple[float, float]:
        if self.axis == 0:
            return (along_m, self.offset_m)
        return (self.offset_m, along_m)


@dataclass
class GridGeometry:
    """Manhattan grid of rectangular buildings separated by multi-lane roads."""

    building_length_m: float = 413.0
    building_width_m: float = 30.0
    sidewalk_m: float = 3.0
    lane_width_m: float = 3.5
    lanes_per_direction: int = 2
    grid_rows: int = 3
    grid_cols: int = 3
    bs_position: tuple[float, float] = None  # defaults to the region center

    def __post_init__(self):
        for name in ("building_length_m", "building_width_m", "sidewalk_m",
                     "lane_width_m"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.lanes_per_direction < 1 or self.grid_rows < 1 or self.grid_cols < 1:
            raise ConfigError("lane and grid counts must be >= 1")
        if self.bs_position is None:
            self.bs_position = (self.region_width_m / 2.0, self.region_height_m / 2.0)
        bx, by = self.bs_position
        if not (0.0 <= bx <= self.region_width_m and 0.0 <= by <= self.region_height_m):
            raise ConfigError("bs_position lies outside the simulated region")

    @property
    def road_width_m(self) -> float:
        return 2 * self.lanes_per_direction * self.lane_width_m

    @property
    def pitch_x_m(self) -> float:
        return self.building_length_m + 2 * self.sidewalk_m + self.road_width_m

    @property
    def pitch_y_m(self) -> float:
        return self.building_width_m + 2 * self.sidewalk_m + self.road_width_m

    @property
    def region_width_m(self) -> float:
        return self.grid_cols * self.pitch_x_m + self.road_width_m

    @property
    def region_height_m(self) -> float:
        return self.grid_rows * self.pitch_y_m + self.road_width_m

    def lanes(self) -> list[Lane]:
        """All lane segments, horizontal roads first, in deterministic order."""
        lanes = []
        half_road = self.road_width_m / 2.0
        # Lane centerline offsets relative to the road center.
        rel = [
            sign * self.lane_width_m * (k + 0.5)
            for sign in (-1, 1)
            for k in range(self.lanes_per_direction)
        ]
        for j in range(self.grid_rows + 1):
            yc = half_road + j * self.pitch_y_m
            for r in sorted(rel):
                lanes.append(Lane(0, j, yc + r, 0.0, self.region_width_m))
        for i in range(self.grid_cols + 1):
            xc = half_road + i * self.pitch_x_m
            for r in sorted(rel):
                lanes.append(Lane(1, i, xc + r, 0.0, self.region_height_m))
        return lanes

    @classmethod
    def from_config(cls, config) -> "GridGeometry":
        bs = None
        if config.bs_x_m >= 0 and config.bs_y_m >= 0:
            bs = (config.bs_x_m, config.bs_y_m)
        return cls(
            building_length_m=config.building_length_m,
            building_width_m=config.building_width_m,
            sidewalk_m=config.sidewalk_m,
            lane_width_m=config.lane_width_m,
            lanes_per_direction=config.lanes_per_direction,
            grid_rows=config.grid_rows,
            grid_cols=config.grid_cols,
            bs_position=bs,
        )


@dataclass
class Topology:
    """Positions and lane ids of all role-assigned vehicles in one snapshot."""

    cue_positions: np.ndarray      # (M, 2) meters
    vue_tx_positions: np.ndarray   # (N, 2)
    vue_rx_positions: np.ndarray   # (N, 2)
    cue_lanes: np.ndarray          # (M,) lane index into GridGeometry.lanes()
    vue_tx_lanes: np.ndarray       # (N,)
    vue_rx_lanes: np.ndarray       # (N,)

    @property
    def m(self) -> int:
        return len(self.cue_positions)

    @property
    def n(self) -> int:
        return len(self.vue_tx_positions)


# ---------------------------------------------------------------------------
# Gains containers


@dataclass
class LinkGains:
    """One multiplicative gain component for every link in a snapshot.

    Shapes: cue_bs (M,), vue (N,), vue_bs (N,), cue_vue (M, N). ``vue`` is the
    s-th V-UE transmitter to its paired receiver; ``cue_vue[m, s]`` is the
    interference path from C-UE m to the s-th V-UE receiver.
    """

    cue_bs: np.ndarray
    vue: np.ndarray
    vue_bs: np.ndarray
    cue_vue: np.ndarray

    @property
    def m(self) -> int:
        return len(self.cue_bs)

    @property
    def n(self) -> int:
        return len(self.vue)

    def validate(self):
        for name in ("cue_bs", "vue", "vue_bs", "cue_vue"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"{name} gains must be finite and strictly positive")
        if self.cue_vue.shape != (self.m, self.n):
            raise ValueError("cue_vue must have shape (M, N)")

    def flat(self) -> np.ndarray:
        """All gains as one vector, in declaration order."""
        return np.concatenate(
            [self.cue_bs, self.vue, self.vue_bs, self.cue_vue.ravel()]
        )

    @classmethod
    def from_flat(cls, vec: np.ndarray, m: int, n: int) -> "LinkGains":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != m + 2 * n + m * n:
            raise ValueError("flat gain vector has the wrong length")
        return cls(
            cue_bs=vec[:m].copy(),
            vue=vec[m:m + n].copy(),
            vue_bs=vec[m + n:m + 2 * n].copy(),
            cue_vue=vec[m + 2 * n:].reshape(m, n).copy(),
        )


@dataclass
class ChannelGains:
    """Composite channel power gains h = alpha * g plus their decomposition."""

    h_cue_bs: np.ndarray
    h_vue: np.ndarray
    h_vue_bs: np.ndarray
    h_cue_vue: np.ndarray
    large_scale: LinkGains
    fast_fade: LinkGains

    @property
    def m(self) -> int:
        return len(self.h_cue_bs)

    @property
    def n(self) -> int:
        return len(self.h_vue)

    @classmethod
    def compose(cls, large_scale: LinkGains, fast_fade: LinkGains) -> "ChannelGains":
        return cls(
            h_cue_bs=large_scale.cue_bs * fast_fade.cue_bs,
            h_vue=large_scale.vue * fast_fade.vue,
            h_vue_bs=large_scale.vue_bs * fast_fade.vue_bs,
            h_cue_vue=large_scale.cue_vue * fast_fade.cue_vue,
            large_scale=large_scale,
            fast_fade=fast_fade,
        )

    def composite(self) -> LinkGains:
        return LinkGains(self.h_cue_bs, self.h_vue, self.h_vue_bs, self.h_cue_vue)

    def validate(self):
        self.large_scale.validate()
        self.fast_fade.validate()
        self.composite().validate()
        for name in ("cue_bs", "vue", "vue_bs", "cue_vue"):
            h = getattr(self, "h_" + name)
            prod = getattr(self.large_scale, name) * getattr(self.fast_fade, name)
            if not np.array_equal(h, prod):
                raise ValueError(f"h_{name} does not equal alpha * g")


# ---------------------------------------------------------------------------
# Pathloss formulas


def v2i_pathloss_db(distance_m) -> np.ndarray:
    """BS link pathloss in dB; distance in meters, floored at 1 m."""
    d_km = np.maximum(np.asarray(distance_m, dtype=np.float64),
                      MIN_PATHLOSS_DISTANCE_M) / 1000.0
    return 128.1 + 37.6 * np.log10(d_km)


def v2v_los_pathloss_db(distance_m, carrier_freq_ghz: float) -> np.ndarray:
    """Street-level LOS pathloss in dB; distance in meters, floored at 1 m."""
    d = np.maximum(np.asarray(distance_m, dtype=np.float64), MIN_PATHLOSS_DISTANCE_M)
    return 22.7 * np.log10(d) + 41.0 + 20.0 * np.log10(carrier_freq_ghz / 5.0)


def v2v_nlos_pathloss_db(manhattan_distance_m, carrier_freq_ghz: float) -> np.ndarray:
    """Around-corner pathloss: LOS formula on the Manhattan distance + penalty."""
    return v2v_los_pathloss_db(manhattan_distance_m, carrier_freq_ghz) + NLOS_CORNER_PENALTY_DB


def _same_street(lane_a: Lane, lane_b: Lane) -> bool:
    return lane_a.axis == lane_b.axis and lane_a.road_index == lane_b.road_index


def _v2v_pathloss_db(pos_a, pos_b, lane_a: Lane, lane_b: Lane,
                     carrier_freq_ghz: float) -> float:
    dx = abs(pos_a[0] - pos_b[0])
    dy = abs(pos_a[1] - pos_b[1])
    if _same_street(lane_a, lane_b):
        return float(v2v_los_pathloss_db(math.hypot(dx, dy), carrier_freq_ghz))
    return float(v2v_nlos_pathloss_db(dx + dy, carrier_freq_ghz))


# ---------------------------------------------------------------------------
# Operations


def drop_vehicles(geometry: GridGeometry, m_cue: int, n_vue: int,
                  density_per_m: float, rng_seed: int,
                  vue_pair_max_distance_m: float = 50.0,
                  max_retries: int = 20) -> Topology:
    """Drop vehicles by a spatial Poisson process and assign roles.

    Per-lane vehicle counts are Poisson(density * lane length) with positions
    uniform along the lane. Roles (C-UE, V-UE transmitter, V-UE receiver) are
    assigned uniformly at random among the dropped vehicles, subject to every
    V-UE receiver lying within ``vue_pair_max_distance_m`` of its transmitter;
    any remaining vehicles are idle. Deterministic for a fixed seed.

    Raises DropError when ``max_retries`` drops in a row cannot supply
    M + 2N role-assigned vehicles, which signals that the density is too low.
    """
    if not (m_cue >= n_vue >= 1):
        raise ValueError("need m_cue >= n_vue >= 1")
    if density_per_m <= 0:
        raise ValueError("density must be positive")
    rng = make_rng(rng_seed, STREAM_DROP)
    lanes = geometry.lanes()
    needed = m_cue + 2 * n_vue

    for _ in range(max_retries):
        counts = rng.poisson(density_per_m * np.array([l.length_m for l in lanes]))
        positions = []
        lane_ids = []
        for lane_id, (lane, count) in enumerate(zip(lanes, counts)):
            if count == 0:
                continue
            along = rng.uniform(lane.start_m, lane.end_m, size=count)
            for a in along:
                positions.append(lane.point(a))
            lane_ids.extend([lane_id] * count)
        if len(positions) < needed:
            continue

        pos = np.asarray(positions, dtype=np.float64)
        lane_ids = np.asarray(lane_ids, dtype=np.int64)
        order = rng.permutation(len(pos))

        used = np.zeros(len(pos), dtype=bool)
        tx_idx, rx_idx = [], []
        for cand in order:
            if len(tx_idx) == n_vue:
                break
            if used[cand]:
                continue
            dist = np.hypot(pos[:, 0] - pos[cand, 0], pos[:, 1] - pos[cand, 1])
            near = np.flatnonzero((~used) & (dist <= vue_pair_max_distance_m))
            near = near[near != cand]
            if near.size == 0:
                continue
            partner = int(rng.choice(near))
            used[cand] = used[partner] = True
            tx_idx.append(int(cand))
            rx_idx.append(partner)
        if len(tx_idx) < n_vue:
            continue

        cue_idx = [int(i) for i in order if not used[i]][:m_cue]
        if len(cue_idx) < m_cue:
            continue

        return Topology(
            cue_positions=pos[cue_idx],
            vue_tx_positions=pos[tx_idx],
            vue_rx_positions=pos[rx_idx],
            cue_lanes=lane_ids[cue_idx],
            vue_tx_lanes=lane_ids[tx_idx],
            vue_rx_lanes=lane_ids[rx_idx],
        )

    raise DropError(
        f"could not place {m_cue} C-UEs and {n_vue} V-UE pairs after "
        f"{max_retries} drops; vehicle density {density_per_m}/m is too low"
    )


def large_scale_gain(topology: Topology, geometry: GridGeometry, rng_seed: int,
                     carrier_freq_ghz: float = 2.0,
                     shadow_std_v2i_db: float = 8.0,
                     shadow_std_v2v_db: float = 3.0) -> LinkGains:
    """Large-scale gains alpha = 10^(-(PL + S)/10) for every link.

    Shadowing S is an independent zero-mean normal per link, with the V2I
    deviation on BS links and the V2V deviation on vehicle-vehicle links.
    Deterministic for a fixed seed.
    """
    lanes = geometry.lanes()
    bs = np.asarray(geometry.bs_position, dtype=np.float64)
    m, n = topology.m, topology.n

    d_cue_bs = np.hypot(*(topology.cue_positions - bs).T)
    d_vue_bs = np.hypot(*(topology.vue_tx_positions - bs).T)
    pl_cue_bs = v2i_pathloss_db(d_cue_bs)
    pl_vue_bs = v2i_pathloss_db(d_vue_bs)

    pl_vue = np.empty(n)
    for s in range(n):
        pl_vue[s] = _v2v_pathloss_db(
            topology.vue_tx_positions[s], topology.vue_rx_positions[s],
            lanes[topology.vue_tx_lanes[s]], lanes[topology.vue_rx_lanes[s]],
            carrier_freq_ghz)

    pl_cue_vue = np.empty((m, n))
    for i in range(m):
        for s in range(n):
            pl_cue_vue[i, s] = _v2v_pathloss_db(
                topology.cue_positions[i], topology.vue_rx_positions[s],
                lanes[topology.cue_lanes[i]], lanes[topology.vue_rx_lanes[s]],
                carrier_freq_ghz)

    rng = make_rng(rng_seed, STREAM_SHADOW)
    s_cue_bs = rng.normal(0.0, shadow_std_v2i_db, size=m)
    s_vue = rng.normal(0.0, shadow_std_v2v_db, size=n)
    s_vue_bs = rng.normal(0.0, shadow_std_v2i_db, size=n)
    s_cue_vue = rng.normal(0.0, shadow_std_v2v_db, size=(m, n))

    gains = LinkGains(
        cue_bs=10.0 ** (-(pl_cue_bs + s_cue_bs) / 10.0),
        vue=10.0 ** (-(pl_vue + s_vue) / 10.0),
        vue_bs=10.0 ** (-(pl_vue_bs + s_vue_bs) / 10.0),
        cue_vue=10.0 ** (-(pl_cue_vue + s_cue_vue) / 10.0),
    )
    gains.validate()
    return gains


def draw_fast_fading(m: int, n: int, rng_seed: int) -> LinkGains:
    """I.i.d. unit-mean exponential power gains for every link (one snapshot)."""
    if m < 1 or n < 1:
        raise ValueError("link counts must be positive")
    rng = make_rng(rng_seed, STREAM_FADE)
    return LinkGains(
        cue_bs=rng.exponential(1.0, size=m),
        vue=rng.exponential(1.0, size=n),
        vue_bs=rng.exponential(1.0, size=n),
        cue_vue=rng.exponential(1.0, size=(m, n)),
    )


def snapshot(topology: Topology, geometry: GridGeometry, rng_seed: int,
             carrier_freq_ghz: float = 2.0,
             shadow_std_v2i_db: float = 8.0,
             shadow_std_v2v_db: float = 3.0) -> ChannelGains:
    """Full channel snapshot: h = alpha * g for every link."""
    alpha = large_scale_gain(topology, geometry, rng_seed,
                             carrier_freq_ghz=carrier_freq_ghz,
                             shadow_std_v2i_db=shadow_std_v2i_db,
                             shadow_std_v2v_db=shadow_std_v2v_db)
    fading = draw_fast_fading(topology.m, topology.n, rng_seed)
    return ChannelGains.compose(alpha, fading)


def draw_scenario(config, rng_seed: int) -> ChannelGains:
    """Drop a topology from ``config`` and return its channel snapshot."""
    geometry = GridGeometry.from_config(config)
    topo = drop_vehicles(geometry, config.n_cue, config.n_vue,
                         config.density_per_m, rng_seed,
                         vue_pair_max_distance_m=config.vue_pair_max_distance_m)
    return snapshot(topo, geometry, rng_seed,
                    carrier_freq_ghz=config.carrier_freq_ghz,
                    shadow_std_v2i_db=config.shadow_std_v2i_db,
                    shadow_std_v2v_db=config.shadow_std_v2v_db)
