#!/usr/bin/env python3
"""Error-rate and objective CDFs of all methods against the benchmark.

Reuses the artifacts from demo 03 (run that first); writes the CSV report
to demo_out/eval and prints the summary lines.
Run: python3 demos/03_train_small_cnn.py && python3 demos/04_evaluation_cdfs.py
"""

from pathlib import Path

import numpy as np

from v2xalloc import PowerGrid, ScenarioConfig
from v2xalloc import dataset as ds
from v2xalloc.evalcli import empirical_cdf, evaluate, runtime_table, write_report
from v2xalloc.neural import load_model

out = Path("demo_out")
if not (out / "cnn_small.ckpt").exists():
    raise SystemExit("run demos/03_train_small_cnn.py first")

config = ScenarioConfig(n_cue=3, n_vue=3, mc_samples_solver=1000,
                        mc_samples_report=20000)
grid = PowerGrid.from_config(config, levels_cue=3, levels_vue=3)
model = load_model(out / "cnn_small.ckpt")
_, samples = ds.load(out / "dataset")
test_set = ds.training_samples(samples)[240:]

methods = ["benchmark", "cnn", "maxpower", "minpower", "randompower"]
print(f"evaluating {len(methods)} methods on {len(test_set)} held-out instances...")
report = evaluate(test_set, config, grid, methods, rng_seed=77,
                  models={"cnn": model})
write_report(out / "eval", report)

for s in report.summary():
    print(f"  {s['method']:<12} mean objective {s['mean_objective']:7.2f}   "
          f"mean |eta| {s['mean_abs_error']:.3f}   "
          f"within 10% of benchmark: {100 * s['frac_within_10pct']:5.1f}%")

# A text rendering of the |eta| CDF, the quantity behind the paper-style plots.
print("\n|eta| CDF (value at selected quantiles):")
for method in methods[1:]:
    vals, cdf = empirical_cdf(np.abs(report.error_rates(method)))
    q = {p: vals[np.searchsorted(cdf, p)] for p in (0.5, 0.8, 0.95)}
    print(f"  {method:<12} median {q[0.5]:.3f}   80th {q[0.8]:.3f}   "
          f"95th {q[0.95]:.3f}")

rows = runtime_table(test_set, config, grid, ["benchmark", "cnn"], 77,
                     models={"cnn": model})
for r in rows:
    print(f"\n{r['method']}: {r['total_s']:.2f} s total, "
          f"{1000 * r['per_instance_s']:.2f} ms per instance "
          f"({r['pct_of_benchmark']:.1f}% of benchmark)" if r["method"] != "benchmark"
          else f"\n{r['method']}: {r['total_s']:.2f} s total, "
               f"{1000 * r['per_instance_s']:.2f} ms per instance")
print("\nCSV report written to", out / "eval")
