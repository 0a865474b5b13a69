"""Seed-derived random generators.

Every stochastic operation owns a generator derived from (root seed, stream
tag, ...), so independent operations never share RNG state and any draw can
be reproduced from the seed alone.
"""

import numpy as np

# Stream tags. Distinct tags give statistically independent substreams of the
# same root seed; never reuse a tag for a different purpose.
STREAM_DROP = 1       # vehicle placement and role assignment
STREAM_SHADOW = 2     # log-normal shadowing draws
STREAM_FADE = 3       # single fast-fading snapshot
STREAM_MC = 4         # Monte-Carlo fading block for capacity estimates
STREAM_POWER = 5      # random-power baseline draws
STREAM_SHUFFLE = 6    # training mini-batch shuffling
STREAM_INIT = 7       # network weight initialization
STREAM_EVAL = 8       # shared evaluation fading stream
STREAM_SPLIT = 9      # dataset split permutation
STREAM_SAMPLE = 10    # per-sample seed derivation in dataset generation
STREAM_SOLVER = 11    # per-instance solver decisions during evaluation


def make_rng(seed: int, *tags: int) -> np.random.Generator:
    """Generator for the substream of ``seed`` identified by ``tags``."""
    entropy = (int(seed),) + tuple(int(t) for t in tags)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *tags: int) -> int:
    """Collapse (seed, tags) into a single 64-bit integer seed.

    Used where a seed must be stored (e.g. per-sample seeds in a dataset
    manifest) rather than consumed immediately.
    """
    entropy = (int(seed),) + tuple(int(t) for t in tags)
    state = np.random.SeedSequence(entropy).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
