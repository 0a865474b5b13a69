#!/usr/bin/env python3
"""Tour of the channel simulator.

Drops vehicles on the Manhattan grid, draws one channel snapshot, and shows
how the gain decomposition h = pathloss/shadowing x fast fading behaves.
Run: python3 demos/01_channel_tour.py
"""

import numpy as np

from v2xalloc import (GridGeometry, ScenarioConfig, draw_fast_fading,
                      drop_vehicles, large_scale_gain, snapshot)
from v2xalloc.channel import v2i_pathloss_db, v2v_los_pathloss_db

config = ScenarioConfig()
geometry = GridGeometry.from_config(config)

print("Manhattan grid: %.0f m x %.0f m, %d lane segments, BS at %s"
      % (geometry.region_width_m, geometry.region_height_m,
         len(geometry.lanes()), geometry.bs_position))
print("vehicle density: %.3f veh/m per lane (from %.0f km/h)"
      % (config.density_per_m, config.vehicle_speed_kmh))

topo = drop_vehicles(geometry, config.n_cue, config.n_vue,
                     config.density_per_m, rng_seed=7)
print("\ndropped %d C-UEs and %d V-UE pairs" % (topo.m, topo.n))
bs = np.asarray(geometry.bs_position)
for m in range(topo.m):
    d = np.hypot(*(topo.cue_positions[m] - bs))
    print("  C-UE %d at distance %6.1f m from BS -> pathloss %6.1f dB"
          % (m, d, v2i_pathloss_db(d)))
for s in range(topo.n):
    d = np.hypot(*(topo.vue_tx_positions[s] - topo.vue_rx_positions[s]))
    print("  V-UE pair %d separated by %5.1f m -> LOS pathloss %6.1f dB"
          % (s, d, v2v_los_pathloss_db(d, config.carrier_freq_ghz)))

# One snapshot and its decomposition.
gains = snapshot(topo, geometry, rng_seed=7)
alpha = large_scale_gain(topo, geometry, rng_seed=7)
assert np.array_equal(gains.large_scale.cue_bs, alpha.cue_bs)
print("\nsnapshot gains (dB) for the C-UE -> BS links:")
print("  large-scale:", np.round(10 * np.log10(gains.large_scale.cue_bs), 1))
print("  fast fading:", np.round(10 * np.log10(gains.fast_fade.cue_bs), 1))
print("  composite h:", np.round(10 * np.log10(gains.h_cue_bs), 1))

# Fast fading is unit-mean exponential: check the first moment empirically.
fade = draw_fast_fading(400, 400, rng_seed=1)
draws = np.concatenate([fade.cue_bs, fade.vue, fade.vue_bs, fade.cue_vue.ravel()])
print("\nfast-fading sample mean over %d draws: %.4f (expected 1.0)"
      % (draws.size, draws.mean()))
