#!/usr/bin/env python3
"""Generate a small labeled dataset and train the dual-head CNN on it.

Small scale so it finishes in about a minute; the acceptance suite runs the
full-scale version. Artifacts (dataset, checkpoint, loss trace) land in
demo_out/.
Run: python3 demos/03_train_small_cnn.py
"""

from pathlib import Path

import numpy as np

from v2xalloc import PowerGrid, ScenarioConfig
from v2xalloc import dataset as ds
from v2xalloc.neural import (FeatureScaler, Network, NetworkSpec, TrainedModel,
                             TrainingConfig, save_model, train,
                             training_arrays, write_trace_csv)

out = Path("demo_out")
config = ScenarioConfig(n_cue=3, n_vue=3, mc_samples_solver=1000)
grid = PowerGrid.from_config(config, levels_cue=3, levels_vue=3)

print("generating 300 labeled samples (exhaustive solver labels)...")
manifest = ds.generate(config, grid, 300, base_seed=12, out_dir=out / "dataset")
print(f"  {manifest.count} samples, {manifest.feasible_count} feasible")

_, samples = ds.load(out / "dataset")
usable = ds.training_samples(samples)
train_set, holdout = usable[:240], usable[240:]

scaler = FeatureScaler.fit([s.gains for s in train_set])
x, y_class, y_pc, y_pv = training_arrays(train_set, scaler,
                                         config.p_max_cue_w, config.p_max_vue_w)
spec = NetworkSpec.cnn_default(config.n_cue, config.n_vue)
net = Network(spec, rng_seed=0)
n_params = sum(p.size for p in net.params())
print(f"training a {spec.kind} ({n_params} parameters, "
      f"{spec.n_classes} matching classes) for 60 epochs...")
trace = train(net, x, y_class, y_pc, y_pv,
              TrainingConfig(epochs=60, seed=0, batch_size=64))
for row in trace[::15] + [trace[-1]]:
    print(f"  epoch {row.epoch:3d}: L_total {row.l_total:.3f} "
          f"(cls {row.l_cls:.3f}, reg_c {row.l_reg_c:.3f}, reg_v {row.l_reg_v:.3f})")

model = TrainedModel(net, scaler, config.p_max_cue_w, config.p_max_vue_w)
save_model(out / "cnn_small.ckpt", model)
write_trace_csv(out / "cnn_small_trace.csv", trace)
print("checkpoint and loss trace written to", out)

# How close do inferred decisions get to the exhaustive labels on held-out data?
rel = []
for s in holdout:
    alloc = model.infer(s.gains)
    rel.append(np.abs(alloc.p_vue - s.label_p_vue).mean() / config.p_max_vue_w)
print(f"held-out mean V-UE power deviation: {100 * np.mean(rel):.1f}% of p_max "
      f"over {len(holdout)} samples")
