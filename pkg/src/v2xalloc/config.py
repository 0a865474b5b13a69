"""Scenario configuration: physical constants, problem constants, file IO.

A scenario is fully described by a flat key=value text file whose keys match
the dataclass field names below. Unknown keys are rejected by name so a typo
in a config file fails loudly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError("power must be positive to convert to dBm")
    return 10.0 * math.log10(watts) + 30.0


@dataclass
class ScenarioConfig:
    """All scenario constants for one simulated cell.

    Power values are stored in dBm (the unit used for the radio parameters),
    distances in meters, bandwidth in Hz. Derived linear-unit values are
    exposed as properties.
    """

    # Radio parameters
    carrier_freq_ghz: float = 2.0
    bandwidth_hz: float = 10e6
    bs_antenna_height_m: float = 25.0       # recorded; unused by the simplified pathloss
    vehicle_antenna_height_m: float = 1.5   # recorded; unused by the simplified pathloss
    noise_dbm: float = -114.0

    # Problem size and constraints
    n_cue: int = 5
    n_vue: int = 5
    min_cue_capacity_bpshz: float = 0.5
    p_max_cue_dbm: float = 23.0
    p_max_vue_dbm: float = 23.0
    p_min_cue_dbm: float = 10.0
    p_min_vue_dbm: float = 10.0

    # Latency requirement
    packet_bits: float = 6400.0
    latency_s: float = 0.1

    # Objective weights
    weight_vue: float = 1.0       # weight on the summed V2V capacities
    weight_latency: float = 10.0  # weight on the latency-compliance probability

    # Monte-Carlo estimator sizes
    mc_samples_solver: int = 2000
    mc_samples_report: int = 100000

    # Drop statistics
    vehicle_speed_kmh: float = 30.0
    # Per-lane density in vehicles/m; <= 0 means "derive from speed" using the
    # standard 2.5 s average inter-vehicle spacing.
    vehicle_density_per_m: float = -1.0
    vue_pair_max_distance_m: float = 50.0

    # Manhattan grid geometry
    building_length_m: float = 413.0
    building_width_m: float = 30.0
    sidewalk_m: float = 3.0
    lane_width_m: float = 3.5
    lanes_per_direction: int = 2
    grid_rows: int = 3
    grid_cols: int = 3
    # BS position in meters; negative means "center of the region".
    bs_x_m: float = -1.0
    bs_y_m: float = -1.0

    # Shadowing standard deviations (dB)
    shadow_std_v2i_db: float = 8.0
    shadow_std_v2v_db: float = 3.0

    def __post_init__(self):
        self.validate()

    # Derived quantities -------------------------------------------------

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def p_max_cue_w(self) -> float:
        return dbm_to_watts(self.p_max_cue_dbm)

    @property
    def p_max_vue_w(self) -> float:
        return dbm_to_watts(self.p_max_vue_dbm)

    @property
    def p_min_cue_w(self) -> float:
        return dbm_to_watts(self.p_min_cue_dbm)

    @property
    def p_min_vue_w(self) -> float:
        return dbm_to_watts(self.p_min_vue_dbm)

    @property
    def per_channel_bandwidth_hz(self) -> float:
        """Uplink spectrum is split orthogonally among the C-UEs."""
        return self.bandwidth_hz / self.n_cue

    @property
    def target_rate_bpshz(self) -> float:
        """Packet rate B/L normalized by the per-channel bandwidth."""
        return self.packet_bits / self.latency_s / self.per_channel_bandwidth_hz

    @property
    def density_per_m(self) -> float:
        if self.vehicle_density_per_m > 0:
            return self.vehicle_density_per_m
        # Average inter-vehicle spacing of 2.5 s at the configured speed.
        speed_mps = self.vehicle_speed_kmh / 3.6
        return 1.0 / (2.5 * speed_mps)

    def validate(self):
        if self.n_cue < 1 or self.n_vue < 1:
            raise ConfigError("n_cue and n_vue must be >= 1")
        if self.n_cue < self.n_vue:
            raise ConfigError("n_cue must be >= n_vue for a full matching")
        for name in ("carrier_freq_ghz", "bandwidth_hz", "packet_bits",
                     "latency_s", "lane_width_m", "building_length_m",
                     "building_width_m", "sidewalk_m",
                     "vue_pair_max_distance_m"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.weight_vue <= 0 or self.weight_latency <= 0:
            raise ConfigError("objective weights must be strictly positive")
        if self.p_min_cue_dbm > self.p_max_cue_dbm:
            raise ConfigError("p_min_cue_dbm exceeds p_max_cue_dbm")
        if self.p_min_vue_dbm > self.p_max_vue_dbm:
            raise ConfigError("p_min_vue_dbm exceeds p_max_vue_dbm")
        if self.mc_samples_solver < 1 or self.mc_samples_report < 1:
            raise ConfigError("Monte-Carlo sample counts must be >= 1")

    # Serialization -------------------------------------------------------

    def to_text(self) -> str:
        lines = ["# v2xalloc scenario configuration"]
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        field_types = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in field_types:
                raise ConfigError(f"unknown config key {key!r}")
            kind = field_types[key]
            try:
                values[key] = int(val) if kind == "int" else float(val)
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: cannot parse {val!r}") from exc
        return cls(**values)

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_text(path.read_text())

    def content_hash(self) -> str:
        """Stable hash of the configuration, used in dataset manifests."""
        canonical = "".join(
            f"{f.name}={getattr(self, f.name)!r};" for f in dataclasses.fields(self)
        )
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]
