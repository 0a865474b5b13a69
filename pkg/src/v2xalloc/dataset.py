"""Labeled dataset generation, serialization, splitting, loading.

One dataset is a directory holding ``manifest.txt`` (plain key=value) and
``records.bin``, a sequence of fixed-size little-endian records:

  u32 sample index | u64 sample seed
  | f32 gains h, alpha, g (each: M + N + N + M*N values, declaration order)
  | u32 matching class | f32 C-UE powers (M) | f32 V-UE powers (N)
  | u8 feasible flag | f64 label objective
  | u64 checksum (BLAKE2b-64 of everything before it)

Records are independent, so generation is resumable per index and the file
supports random access. Every sample is reproducible from its stored seed:
the same drop / snapshot / exhaustive-solve pipeline regenerates the label.
"""

from __future__ import annotations

import dataclasses
import hashlib
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelGains, GridGeometry, LinkGains, drop_vehicles, snapshot
from .config import ScenarioConfig
from .errors import DatasetFormatError
from .rng import STREAM_SAMPLE, derive_seed, make_rng, STREAM_SPLIT
from .solvers import PowerGrid, exhaustive_solve

FORMAT_VERSION = 1
_CHECKSUM_BYTES = 8
_HEADER = struct.Struct("<IQ")
_TRAILER = struct.Struct("<Bd")


@dataclass
class LabeledSample:
    """One channel snapshot paired with the exhaustive solver's decision."""

    index: int
    seed: int
    gains: ChannelGains
    label_class: int
    label_p_cue: np.ndarray
    label_p_vue: np.ndarray
    feasible: bool
    objective_value: float


@dataclass
class DatasetManifest:
    format_version: int
    config_hash: str
    m: int
    n: int
    count: int
    base_seed: int
    grid_levels_cue: int
    grid_levels_vue: int
    grid_include_zero: int
    mc_samples: int
    feasible_count: int
    split_train: int = -1
    split_val: int = -1
    split_test: int = -1
    split_seed: int = -1

    def to_text(self) -> str:
        lines = ["# v2xalloc dataset manifest"]
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DatasetManifest":
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in fields:
                raise DatasetFormatError(f"unknown manifest key {key!r}")
            values[key] = int(val) if fields[key] == "int" else val
        try:
            return cls(**values)
        except TypeError as exc:
            raise DatasetFormatError(f"incomplete manifest: {exc}") from exc


def record_size(m: int, n: int) -> int:
    n_gains = m + 2 * n + m * n
    return (_HEADER.size + 4 * (3 * n_gains) + 4 + 4 * (m + n)
            + _TRAILER.size + _CHECKSUM_BYTES)


def _checksum(body: bytes) -> int:
    digest = hashlib.blake2b(body, digest_size=_CHECKSUM_BYTES).digest()
    return int.from_bytes(digest, "little")


def serialize_record(sample: LabeledSample) -> bytes:
    gains = sample.gains
    parts = [
        _HEADER.pack(sample.index, sample.seed),
        np.asarray(gains.composite().flat(), dtype="<f4").tobytes(),
        np.asarray(gains.large_scale.flat(), dtype="<f4").tobytes(),
        np.asarray(gains.fast_fade.flat(), dtype="<f4").tobytes(),
        struct.pack("<I", sample.label_class),
        np.asarray(sample.label_p_cue, dtype="<f4").tobytes(),
        np.asarray(sample.label_p_vue, dtype="<f4").tobytes(),
        _TRAILER.pack(int(sample.feasible), sample.objective_value),
    ]
    body = b"".join(parts)
    return body + struct.pack("<Q", _checksum(body))


def parse_record(buf: bytes, m: int, n: int, position: int) -> LabeledSample:
    if len(buf) != record_size(m, n):
        raise DatasetFormatError(f"record {position}: truncated")
    body, (stored,) = buf[:-_CHECKSUM_BYTES], struct.unpack("<Q", buf[-_CHECKSUM_BYTES:])
    if _checksum(body) != stored:
        raise DatasetFormatError(f"record {position}: checksum mismatch")
    index, seed = _HEADER.unpack_from(body, 0)
    if index != position:
        raise DatasetFormatError(
            f"record {position}: stored index {index} does not match position")
    off = _HEADER.size
    n_gains = m + 2 * n + m * n

    def take(count):
        nonlocal off
        arr = np.frombuffer(body, dtype="<f4", count=count, offset=off)
        off += 4 * count
        return arr.astype(np.float64)

    h = LinkGains.from_flat(take(n_gains), m, n)
    alpha = LinkGains.from_flat(take(n_gains), m, n)
    fade = LinkGains.from_flat(take(n_gains), m, n)
    (label_class,) = struct.unpack_from("<I", body, off)
    off += 4
    p_cue = take(m)
    p_vue = take(n)
    feasible, objective_value = _TRAILER.unpack_from(body, off)

    gains = ChannelGains(h_cue_bs=h.cue_bs, h_vue=h.vue, h_vue_bs=h.vue_bs,
                         h_cue_vue=h.cue_vue, large_scale=alpha, fast_fade=fade)
    return LabeledSample(index=index, seed=seed, gains=gains,
                         label_class=int(label_class), label_p_cue=p_cue,
                         label_p_vue=p_vue, feasible=bool(feasible),
                         objective_value=objective_value)


# ---------------------------------------------------------------------------
# Generation


def sample_seed(base_seed: int, index: int) -> int:
    return derive_seed(base_seed, STREAM_SAMPLE, index)


def generate_sample(config: ScenarioConfig, grid: PowerGrid, index: int,
                    seed: int) -> LabeledSample:
    """Drop, draw gains, and label one sample with the exhaustive solver."""
    geometry = GridGeometry.from_config(config)
    topo = drop_vehicles(geometry, config.n_cue, config.n_vue,
                         config.density_per_m, seed,
                         vue_pair_max_distance_m=config.vue_pair_max_distance_m)
    gains = snapshot(topo, geometry, seed,
                     carrier_freq_ghz=config.carrier_freq_ghz,
                     shadow_std_v2i_db=config.shadow_std_v2i_db,
                     shadow_std_v2v_db=config.shadow_std_v2v_db)
    result = exhaustive_solve(gains.large_scale, config, grid, seed)
    return LabeledSample(
        index=index, seed=seed, gains=gains,
        label_class=result.allocation.class_index(),
        label_p_cue=result.allocation.p_cue,
        label_p_vue=result.allocation.p_vue,
        feasible=result.report.feasible,
        objective_value=result.report.objective,
    )


def _record_for_index(args) -> bytes:
    config_text, grid, index, seed = args
    config = ScenarioConfig.from_text(config_text)
    return serialize_record(generate_sample(config, grid, index, seed))


def generate(config: ScenarioConfig, grid: PowerGrid, count: int,
             base_seed: int, out_dir, workers: int = 1,
             progress=None) -> DatasetManifest:
    """Generate ``count`` labeled samples into ``out_dir``.

    Deterministic per (config, grid, base_seed) regardless of worker count,
    and resumable: existing complete records in the output file are verified
    and kept. ``progress`` is an optional callable(done, total).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.bin"
    rb = record_size(config.n_cue, config.n_vue)

    done = 0
    if records_path.exists():
        size = records_path.stat().st_size
        done = size // rb
        if done > count:
            raise ValueError(
                f"{records_path} already holds {done} records, more than the "
                f"requested {count}; refusing to truncate")
        with open(records_path, "rb") as fh:
            for i in range(done):
                parse_record(fh.read(rb), config.n_cue, config.n_vue, i)
        if size > done * rb:  # drop a partial trailing record
            with open(records_path, "r+b") as fh:
                fh.truncate(done * rb)

    todo = [(config.to_text(), grid, i, sample_seed(base_seed, i))
            for i in range(done, count)]
    with open(records_path, "ab") as fh:
        if workers > 1 and todo:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for rec in pool.map(_record_for_index, todo, chunksize=8):
                    fh.write(rec)
                    done += 1
                    if progress:
                        progress(done, count)
        else:
            for args in todo:
                fh.write(_record_for_index(args))
                done += 1
                if progress:
                    progress(done, count)

    # Re-validate the finished file and count feasible labels.
    data = records_path.read_bytes()
    feasible_count = 0
    for i in range(count):
        rec = parse_record(data[i * rb:(i + 1) * rb], config.n_cue,
                           config.n_vue, i)
        feasible_count += rec.feasible

    manifest = DatasetManifest(
        format_version=FORMAT_VERSION,
        config_hash=config.content_hash(),
        m=config.n_cue, n=config.n_vue, count=count, base_seed=base_seed,
        grid_levels_cue=grid.levels_cue, grid_levels_vue=grid.levels_vue,
        grid_include_zero=int(grid.include_zero),
        mc_samples=config.mc_samples_solver,
        feasible_count=feasible_count,
    )
    (out_dir / "manifest.txt").write_text(manifest.to_text())
    config.save(out_dir / "scenario.cfg")
    return manifest


def load(path, config: ScenarioConfig = None):
    """Load a dataset directory; returns (manifest | None, samples).

    Validates the format version, the record count against the manifest, and
    every record checksum. When loading a directory that is still being
    generated (no manifest yet), pass the scenario ``config`` for the shapes.
    """
    path = Path(path)
    manifest = None
    manifest_path = path / "manifest.txt"
    if manifest_path.exists():
        manifest = DatasetManifest.from_text(manifest_path.read_text())
        if manifest.format_version != FORMAT_VERSION:
            raise DatasetFormatError(
                f"dataset format version {manifest.format_version} unsupported "
                f"(expected {FORMAT_VERSION})")
        m, n = manifest.m, manifest.n
    elif config is not None:
        m, n = config.n_cue, config.n_vue
    else:
        raise DatasetFormatError(f"{manifest_path} not found")

    records_path = path / "records.bin"
    if not records_path.exists():
        raise DatasetFormatError(f"{records_path} not found")
    data = records_path.read_bytes()
    rb = record_size(m, n)
    if len(data) % rb != 0:
        raise DatasetFormatError(
            f"records file size {len(data)} is not a multiple of record size {rb}")
    n_records = len(data) // rb
    if manifest is not None and n_records != manifest.count:
        raise DatasetFormatError(
            f"manifest says {manifest.count} records, file holds {n_records}")

    samples = [parse_record(data[i * rb:(i + 1) * rb], m, n, i)
               for i in range(n_records)]
    return manifest, samples


# ---------------------------------------------------------------------------
# Splitting and selection helpers


def split(count, fractions, seed: int):
    """Disjoint, exhaustive, seed-deterministic index partition.

    ``count`` may be an integer or a DatasetManifest. ``fractions`` must sum
    to 1; every part must round to at least one sample. Returns a tuple of
    sorted index arrays, one per fraction.
    """
    if isinstance(count, DatasetManifest):
        count = count.count
    fractions = list(fractions)
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    sizes = [int(round(f * count)) for f in fractions[:-1]]
    sizes.append(count - sum(sizes))
    if any(s < 1 for s in sizes):
        raise ValueError(f"empty split: sizes {sizes} from fractions {fractions}")
    perm = make_rng(seed, STREAM_SPLIT).permutation(count)
    parts = []
    start = 0
    for s in sizes:
        parts.append(np.sort(perm[start:start + s]))
        start += s
    return tuple(parts)


def training_samples(samples):
    """Samples eligible for training: infeasible-flagged ones are excluded."""
    return [s for s in samples if s.feasible]


def class_histogram(samples, n_classes: int) -> np.ndarray:
    counts = np.zeros(n_classes, dtype=np.int64)
    for s in samples:
        counts[s.label_class] += 1
    return counts
