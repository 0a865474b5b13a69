"""v2xalloc: spectrum reuse and power allocation for hybrid V2I/V2V cells.

The package simulates Manhattan-grid vehicular channels, solves the joint
spectrum-reuse / power-allocation problem by exhaustive search and fixed
power heuristics, and trains a from-scratch dual-head convolutional network
to reproduce the exhaustive decisions in real time.
"""

from . import channel, dataset, evalcli, matchings, neural, problem, solvers
from .channel import (ChannelGains, GridGeometry, LinkGains, Topology,
                      draw_fast_fading, draw_scenario, drop_vehicles,
                      large_scale_gain, snapshot)
from .config import ScenarioConfig, dbm_to_watts, watts_to_dbm
from .problem import (Allocation, CapacityReport, FadingBlock, LatencySpec,
                      ObjectiveWeights, check_feasible, draw_fading_block,
                      ergodic_capacities, evaluate_allocation, latency_metric,
                      objective, sinr)
from .solvers import (PowerGrid, SolverResult, brute_force_oracle,
                      exhaustive_solve, fixed_power_baseline)

__version__ = "0.1.0"
