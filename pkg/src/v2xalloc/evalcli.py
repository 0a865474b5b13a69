"""Evaluation harness and command-line interface.

``evaluate`` runs a set of allocation methods over a test set, scores every
allocation at the reporting Monte-Carlo size on one shared per-instance
fading stream, and derives each method's error rate against the Benchmark
row of the same instance, eta = (C_n - C_0) / C_0. Aggregates use |eta|
(the benchmark maximizes over its own scheme set, so signed etas are
nonpositive up to estimator noise); row-level signs are preserved.

CLI subcommands: generate, train, evaluate, runtime, inspect. Outputs are
CSV files plus a plain-text summary; no plotting.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataset as ds
from .config import ScenarioConfig
from .errors import V2XError
from .matchings import decode_matching, n_matchings
from .neural import (FeatureScaler, NetworkSpec, Network, TrainedModel,
                     TrainingConfig, load_model, save_model, train,
                     training_arrays, write_trace_csv)
from .problem import Allocation, draw_fading_block, evaluate_allocation
from .rng import STREAM_EVAL, STREAM_SOLVER, derive_seed
from .solvers import PowerGrid, exhaustive_solve, fixed_power_baseline

BASELINE_MODES = {"maxpower": "max", "minpower": "min", "randompower": "random"}
KNOWN_METHODS = ("benchmark", "cnn", "dnn", "maxpower", "minpower", "randompower")


@dataclass
class EvalRow:
    instance: int
    method: str
    objective: float
    error_rate: float
    feasible: bool
    wall_time_s: float


@dataclass
class EvalReport:
    methods: list
    rows: list = field(default_factory=list)
    mc_samples: int = 0

    def rows_for(self, method: str):
        return [r for r in self.rows if r.method == method]

    def objectives(self, method: str) -> np.ndarray:
        return np.array([r.objective for r in self.rows_for(method)])

    def error_rates(self, method: str) -> np.ndarray:
        return np.array([r.error_rate for r in self.rows_for(method)])

    def wall_time(self, method: str) -> float:
        return float(sum(r.wall_time_s for r in self.rows_for(method)))

    def feasible_mask(self, method: str) -> np.ndarray:
        return np.array([r.feasible for r in self.rows_for(method)], dtype=bool)

    def summary(self) -> list:
        out = []
        for method in self.methods:
            abs_eta = np.abs(self.error_rates(method))
            out.append({
                "method": method,
                "instances": len(self.rows_for(method)),
                "mean_objective": float(self.objectives(method).mean()),
                "mean_abs_error": float(abs_eta.mean()),
                "frac_within_10pct": float((abs_eta <= 0.10).mean()),
                "feasible_frac": float(self.feasible_mask(method).mean()),
                "total_time_s": self.wall_time(method),
            })
        return out


def empirical_cdf(values) -> tuple[np.ndarray, np.ndarray]:
    """One step per instance: (sorted values, k/n grid ending at 1)."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    return values, np.arange(1, values.size + 1) / values.size


class _MethodRunner:
    """Produces one Allocation per instance for a named method."""

    def __init__(self, method: str, config, grid, rng_seed: int, models: dict):
        self.method = method
        self.config = config
        self.grid = grid
        self.rng_seed = rng_seed
        self.models = models
        if method in ("cnn", "dnn") and method not in models:
            raise V2XError(f"method {method!r} requires a trained model checkpoint")
        if method not in KNOWN_METHODS:
            raise V2XError(f"unknown method {method!r}")

    def allocate(self, sample, instance: int):
        # Solver methods run on the instance's own stored stream when there
        # is one, so the benchmark method reproduces the dataset label and
        # all solver methods share one decision stream per instance.
        seed = getattr(sample, "seed", None)
        if seed is None:
            seed = derive_seed(self.rng_seed, STREAM_SOLVER, instance)
        if self.method == "benchmark":
            return exhaustive_solve(sample.gains.large_scale, self.config,
                                    self.grid, seed).allocation
        if self.method in BASELINE_MODES:
            return fixed_power_baseline(sample.gains.large_scale, self.config,
                                        BASELINE_MODES[self.method], seed,
                                        grid=self.grid).allocation
        return self.models[self.method].infer(sample.gains)


def evaluate(samples, config, grid: PowerGrid, methods, rng_seed: int,
             models: dict = None, mc_samples: int = None,
             use_label_benchmark: bool = False) -> EvalReport:
    """Run every method on every instance; score on a shared eval stream.

    The benchmark objective C_0 comes from the "benchmark" method when it is
    in ``methods``; otherwise (with ``use_label_benchmark``) from re-scoring
    the stored exhaustive label of each sample. One of the two must hold.
    """
    methods = list(methods)
    models = models or {}
    k = mc_samples if mc_samples is not None else config.mc_samples_report
    if "benchmark" not in methods and not use_label_benchmark:
        raise V2XError("evaluation needs the benchmark method or benchmark labels")

    runners = [_MethodRunner(m, config, grid, rng_seed, models) for m in methods]
    report = EvalReport(methods=methods, mc_samples=k)
    for instance, sample in enumerate(samples):
        block = draw_fading_block(config.n_cue, config.n_vue, k,
                                  derive_seed(rng_seed, STREAM_EVAL, instance))
        scored = {}
        for runner in runners:
            t0 = time.perf_counter()
            alloc = runner.allocate(sample, instance)
            wall = time.perf_counter() - t0
            rep = evaluate_allocation(sample.gains.large_scale, alloc, config,
                                      block=block)
            scored[runner.method] = (rep.objective, rep.feasible, wall)

        if "benchmark" in scored:
            c0 = scored["benchmark"][0]
        else:
            label_alloc = Allocation(
                matching=decode_matching(sample.label_class, config.n_cue,
                                         config.n_vue),
                p_cue=sample.label_p_cue, p_vue=sample.label_p_vue)
            c0 = evaluate_allocation(sample.gains.large_scale, label_alloc,
                                     config, block=block).objective
        for method in methods:
            obj, feasible, wall = scored[method]
            eta = (obj - c0) / c0
            report.rows.append(EvalRow(instance=instance, method=method,
                                       objective=obj, error_rate=eta,
                                       feasible=feasible, wall_time_s=wall))
    return report


def runtime_table(samples, config, grid: PowerGrid, methods, rng_seed: int,
                  models: dict = None) -> list:
    """Wall-clock totals per method over the identical instance list.

    Single-threaded sequential measurement; reports the ratio to the
    benchmark total when the benchmark is included.
    """
    models = models or {}
    rows = []
    totals = {}
    for method in methods:
        runner = _MethodRunner(method, config, grid, rng_seed, models)
        t0 = time.perf_counter()
        for instance, sample in enumerate(samples):
            runner.allocate(sample, instance)
        totals[method] = time.perf_counter() - t0
    for method in methods:
        ratio = (100.0 * totals[method] / totals["benchmark"]
                 if "benchmark" in totals else float("nan"))
        rows.append({
            "method": method,
            "total_s": totals[method],
            "per_instance_s": totals[method] / max(len(samples), 1),
            "pct_of_benchmark": ratio,
            "mode": "single-thread",
        })
    return rows


# ---------------------------------------------------------------------------
# Report files


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_report(out_dir, report: EvalReport):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "rows.csv",
               ["instance", "method", "objective", "error_rate", "feasible",
                "wall_time_s"],
               [(r.instance, r.method, f"{r.objective:.9g}", f"{r.error_rate:.9g}",
                 int(r.feasible), f"{r.wall_time_s:.6g}") for r in report.rows])

    cdf_rows = []
    err_rows = []
    for method in report.methods:
        vals, cdf = empirical_cdf(report.objectives(method))
        cdf_rows += [(method, f"{v:.9g}", f"{c:.9g}") for v, c in zip(vals, cdf)]
        vals, cdf = empirical_cdf(np.abs(report.error_rates(method)))
        err_rows += [(method, f"{v:.9g}", f"{c:.9g}") for v, c in zip(vals, cdf)]
    _write_csv(out_dir / "cdf_objective.csv", ["method", "objective", "cdf"], cdf_rows)
    _write_csv(out_dir / "cdf_error_rate.csv", ["method", "abs_error_rate", "cdf"],
               err_rows)

    summary = report.summary()
    _write_csv(out_dir / "summary.csv",
               ["method", "instances", "mean_objective", "mean_abs_error",
                "frac_within_10pct", "feasible_frac", "total_time_s"],
               [(s["method"], s["instances"], f"{s['mean_objective']:.6g}",
                 f"{s['mean_abs_error']:.6g}", f"{s['frac_within_10pct']:.4g}",
                 f"{s['feasible_frac']:.4g}", f"{s['total_time_s']:.6g}")
                for s in summary])
    text = ["evaluation summary",
            f"instances: {summary[0]['instances'] if summary else 0}, "
            f"reporting mc_samples: {report.mc_samples}"]
    for s in summary:
        text.append(f"  {s['method']:<12} mean objective {s['mean_objective']:8.3f}"
                    f"  mean |eta| {s['mean_abs_error']:.4f}"
                    f"  within 10%: {100 * s['frac_within_10pct']:5.1f}%"
                    f"  feasible: {100 * s['feasible_frac']:5.1f}%"
                    f"  time {s['total_time_s']:.2f} s")
    (out_dir / "summary.txt").write_text("\n".join(text) + "\n")


def write_runtime_csv(out_dir, rows):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "runtime.csv",
               ["method", "total_s", "per_instance_s", "pct_of_benchmark", "mode"],
               [(r["method"], f"{r['total_s']:.6g}", f"{r['per_instance_s']:.6g}",
                 f"{r['pct_of_benchmark']:.4g}", r["mode"]) for r in rows])


# ---------------------------------------------------------------------------
# CLI


def _load_config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        return ScenarioConfig.load(args.config)
    return ScenarioConfig()


def _grid_from(args, config) -> PowerGrid:
    return PowerGrid.from_config(config, levels_cue=args.grid_levels,
                                 levels_vue=args.grid_levels)


def _cmd_generate(args) -> int:
    config = _load_config(args)
    grid = _grid_from(args, config)

    def progress(done, total):
        if done % 50 == 0 or done == total:
            print(f"generated {done}/{total}", file=sys.stderr)

    manifest = ds.generate(config, grid, args.count, args.seed, args.out,
                           workers=args.workers,
                           progress=progress if args.verbose else None)
    print(f"wrote {manifest.count} samples ({manifest.feasible_count} feasible) "
          f"to {args.out}")
    return 0


def _load_dataset(args, config):
    manifest, samples = ds.load(args.data)
    if manifest.m != config.n_cue or manifest.n != config.n_vue:
        raise V2XError(f"dataset is for M={manifest.m}, N={manifest.n} but the "
                       f"config says M={config.n_cue}, N={config.n_vue}")
    return manifest, samples


def _cmd_train(args) -> int:
    config = _load_config(args)
    _, samples = _load_dataset(args, config)
    usable = ds.training_samples(samples)
    if args.train_count > 0:
        usable = usable[:args.train_count]
    if not usable:
        raise V2XError("no feasible training samples in the dataset")

    scaler = FeatureScaler.fit([s.gains for s in usable])
    x, y_class, y_pc, y_pv = training_arrays(usable, scaler, config.p_max_cue_w,
                                             config.p_max_vue_w)
    spec = (NetworkSpec.cnn_default(config.n_cue, config.n_vue)
            if args.arch == "cnn"
            else NetworkSpec.dnn_default(config.n_cue, config.n_vue))
    network = Network(spec, rng_seed=args.seed)
    tcfg = TrainingConfig.for_kind(args.arch, seed=args.seed,
                                   batch_size=args.batch_size,
                                   learning_rate=args.learning_rate,
                                   validation_fraction=args.val_fraction)
    if args.epochs >= 0:
        tcfg.epochs = args.epochs
    trace = train(network, x, y_class, y_pc, y_pv, tcfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = TrainedModel(network=network, scaler=scaler,
                         p_max_cue_w=config.p_max_cue_w,
                         p_max_vue_w=config.p_max_vue_w,
                         meta={"arch": args.arch, "epochs": tcfg.epochs,
                               "train_samples": len(usable)})
    ckpt = out / f"{args.arch}.ckpt"
    save_model(ckpt, model)
    write_trace_csv(out / f"{args.arch}_trace.csv", trace)
    final = trace[-1].l_total if trace else float("nan")
    print(f"trained {args.arch} on {len(usable)} samples for {tcfg.epochs} epochs "
          f"(final loss {final:.4f}); checkpoint at {ckpt}")
    return 0


def _parse_methods(text: str):
    methods = [m.strip().lower() for m in text.split(",") if m.strip()]
    for m in methods:
        if m not in KNOWN_METHODS:
            raise V2XError(f"unknown method {m!r}; choose from {KNOWN_METHODS}")
    return methods


def _models_for(methods, args):
    models = {}
    needs = [m for m in methods if m in ("cnn", "dnn")]
    supplied = dict(args.model) if args.model else {}
    for m in needs:
        path = supplied.get(m)
        if path is None:
            raise V2XError(f"method {m!r} needs --model {m}=<checkpoint>")
        models[m] = load_model(path)
    return models


def _model_arg(text: str):
    if "=" in text:
        arch, _, path = text.partition("=")
        arch = arch.strip().lower()
    else:
        arch, path = "cnn", text
    if arch not in ("cnn", "dnn"):
        raise argparse.ArgumentTypeError("model must be [cnn|dnn]=<path>")
    return arch, path.strip()


def _cmd_evaluate(args) -> int:
    config = _load_config(args)
    _, samples = _load_dataset(args, config)
    if args.limit > 0:
        samples = samples[:args.limit]
    methods = _parse_methods(args.methods)
    models = _models_for(methods, args)
    report = evaluate(samples, config, _grid_from(args, config), methods,
                      args.seed, models=models, mc_samples=args.mc_samples,
                      use_label_benchmark="benchmark" not in methods)
    write_report(args.out, report)
    for s in report.summary():
        print(f"{s['method']:<12} mean objective {s['mean_objective']:8.3f}  "
              f"mean |eta| {s['mean_abs_error']:.4f}  "
              f"within 10%: {100 * s['frac_within_10pct']:.1f}%")
    print(f"report written to {args.out}")
    return 0


def _cmd_runtime(args) -> int:
    config = _load_config(args)
    _, samples = _load_dataset(args, config)
    if args.limit > 0:
        samples = samples[:args.limit]
    methods = _parse_methods(args.methods)
    models = _models_for(methods, args)
    rows = runtime_table(samples, config, _grid_from(args, config), methods,
                         args.seed, models=models)
    write_runtime_csv(args.out, rows)
    for r in rows:
        print(f"{r['method']:<12} {r['total_s']:9.3f} s total  "
              f"{1000 * r['per_instance_s']:8.3f} ms/instance  "
              f"{r['pct_of_benchmark']:6.2f}% of benchmark")
    return 0


def _cmd_inspect(args) -> int:
    if args.data:
        config = _load_config(args)
        manifest, samples = ds.load(args.data)
        n_classes = n_matchings(manifest.m, manifest.n)
        hist = ds.class_histogram(samples, n_classes)
        print(f"dataset {args.data}: {manifest.count} samples, "
              f"M={manifest.m}, N={manifest.n}, base_seed={manifest.base_seed}")
        print(f"  feasible: {manifest.feasible_count} "
              f"({100 * manifest.feasible_count / manifest.count:.1f}%)")
        print(f"  matching classes used: {np.count_nonzero(hist)}/{n_classes}")
        objs = np.array([s.objective_value for s in samples])
        print(f"  label objective: mean {objs.mean():.3f}, "
              f"min {objs.min():.3f}, max {objs.max():.3f}")
    if args.model:
        for arch, path in args.model:
            model = load_model(path)
            n_params = sum(p.size for p in model.network.params())
            print(f"checkpoint {path}: {model.spec.kind} for M={model.spec.m}, "
                  f"N={model.spec.n}, {n_params} parameters, meta={model.meta}")
    if not args.data and not args.model:
        raise V2XError("inspect needs --data and/or --model")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2xalloc",
        description="Spectrum reuse and power allocation toolkit for hybrid "
                    "V2I/V2V cells")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="scenario config file (key = value)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--grid-levels", type=int, default=4,
                       help="power levels per role in the solver grid")

    p = sub.add_parser("generate", help="generate a labeled dataset")
    common(p)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train a CNN or DNN on a dataset")
    common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--arch", choices=("cnn", "dnn"), default="cnn")
    p.add_argument("--epochs", type=int, default=-1,
                   help="override the per-arch default (cnn 100, dnn 500)")
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--val-fraction", type=float, default=0.0)
    p.add_argument("--train-count", type=int, default=-1,
                   help="use only the first K feasible samples")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score methods against the benchmark")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--methods",
                   default="benchmark,cnn,maxpower,minpower,randompower")
    p.add_argument("--model", type=_model_arg, action="append",
                   help="checkpoint as [cnn|dnn]=<path>; repeatable")
    p.add_argument("--mc-samples", type=int, default=None,
                   help="reporting Monte-Carlo size (default from config)")
    p.add_argument("--limit", type=int, default=-1,
                   help="evaluate only the first K instances")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("runtime", help="single-threaded runtime comparison")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--methods", default="benchmark,cnn")
    p.add_argument("--model", type=_model_arg, action="append")
    p.add_argument("--limit", type=int, default=-1)
    p.set_defaults(func=_cmd_runtime)

    p = sub.add_parser("inspect", help="describe a dataset or checkpoint")
    common(p, out_required=False)
    p.add_argument("--data")
    p.add_argument("--model", type=_model_arg, action="append")
    p.set_defaults(func=_cmd_inspect)

    return parser


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except V2XError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
