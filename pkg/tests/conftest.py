import numpy as np
import pytest

from v2xalloc import (ChannelGains, GridGeometry, LinkGains, ScenarioConfig,
                      drop_vehicles, snapshot)


@pytest.fixture(scope="session")
def default_config():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def small_config():
    """M=N=2 scenario with a cheap solver estimator for fast tests."""
    return ScenarioConfig(n_cue=2, n_vue=2, mc_samples_solver=500)


def make_instance(config, seed):
    """Random topology + channel snapshot for the given scenario."""
    geometry = GridGeometry.from_config(config)
    topo = drop_vehicles(geometry, config.n_cue, config.n_vue,
                         config.density_per_m, seed,
                         vue_pair_max_distance_m=config.vue_pair_max_distance_m)
    return snapshot(topo, geometry, seed)


def synthetic_link_gains(m, n, seed=0, scale=1e-9):
    """Hand-sized positive gains, no topology involved."""
    rng = np.random.default_rng(seed)
    return LinkGains(
        cue_bs=scale * rng.uniform(0.5, 2.0, m),
        vue=100 * scale * rng.uniform(0.5, 2.0, n),
        vue_bs=0.1 * scale * rng.uniform(0.5, 2.0, n),
        cue_vue=0.2 * scale * rng.uniform(0.5, 2.0, (m, n)),
    )


def synthetic_channel_gains(m, n, seed=0):
    alpha = synthetic_link_gains(m, n, seed)
    rng = np.random.default_rng(seed + 1)
    fade = LinkGains(
        cue_bs=rng.exponential(1.0, m),
        vue=rng.exponential(1.0, n),
        vue_bs=rng.exponential(1.0, n),
        cue_vue=rng.exponential(1.0, (m, n)),
    )
    return ChannelGains.compose(alpha, fade)
