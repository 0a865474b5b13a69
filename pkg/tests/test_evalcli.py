import numpy as np
import pytest

from v2xalloc import PowerGrid, ScenarioConfig
from v2xalloc.dataset import generate, load
from v2xalloc.evalcli import (cli, empirical_cdf, evaluate, runtime_table,
                              write_report)


@pytest.fixture(scope="module")
def tiny_config():
    return ScenarioConfig(n_cue=2, n_vue=2, mc_samples_solver=300,
                          mc_samples_report=2000)


@pytest.fixture(scope="module")
def tiny_dataset_dir(tiny_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("evalds")
    grid = PowerGrid.from_config(tiny_config, levels_cue=2, levels_vue=2)
    generate(tiny_config, grid, 5, 42, out)
    return out


def test_empirical_cdf_hand_computed():
    values, cdf = empirical_cdf([3.0, 1.0, 2.0])
    assert np.array_equal(values, [1.0, 2.0, 3.0])
    assert np.allclose(cdf, [1 / 3, 2 / 3, 1.0])
    assert np.all(np.diff(cdf) >= 0) and cdf[-1] == 1.0


def test_benchmark_self_comparison_eta_zero(tiny_config, tiny_dataset_dir):
    _, samples = load(tiny_dataset_dir)
    grid = PowerGrid.from_config(tiny_config, levels_cue=2, levels_vue=2)
    report = evaluate(samples, tiny_config, grid, ["benchmark"], rng_seed=1)
    assert np.all(report.error_rates("benchmark") == 0.0)


def test_evaluate_against_label_benchmark(tiny_config, tiny_dataset_dir):
    _, samples = load(tiny_dataset_dir)
    grid = PowerGrid.from_config(tiny_config, levels_cue=2, levels_vue=2)
    report = evaluate(samples, tiny_config, grid, ["maxpower"], rng_seed=1,
                      use_label_benchmark=True)
    assert len(report.rows) == len(samples)
    # against the label allocation the baseline is dominated up to noise
    assert np.all(report.error_rates("maxpower") < 0.05)


def test_evaluate_requires_benchmark_source(tiny_config, tiny_dataset_dir):
    _, samples = load(tiny_dataset_dir)
    grid = PowerGrid.from_config(tiny_config, levels_cue=2, levels_vue=2)
    with pytest.raises(Exception, match="benchmark"):
        evaluate(samples, tiny_config, grid, ["maxpower"], rng_seed=1)


def _strip_time_columns(path):
    """Report content minus wall-clock columns, which are never reproducible."""
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    keep = [i for i, name in enumerate(header) if "time" not in name]
    return "\n".join(",".join(line.split(",")[i] for i in keep)
                     for line in lines)


def test_report_files_byte_identical(tiny_config, tiny_dataset_dir, tmp_path):
    _, samples = load(tiny_dataset_dir)
    grid = PowerGrid.from_config(tiny_config, levels_cue=2, levels_vue=2)
    outs = []
    for name in ("r1", "r2"):
        report = evaluate(samples, tiny_config, grid,
                          ["benchmark", "minpower"], rng_seed=7)
        out = tmp_path / name
        write_report(out, report)
        outs.append(out)
    for fname in ("cdf_objective.csv", "cdf_error_rate.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
    for fname in ("rows.csv", "summary.csv"):
        assert (_strip_time_columns(outs[0] / fname)
                == _strip_time_columns(outs[1] / fname))
    rows = (outs[0] / "rows.csv").read_text().splitlines()
    assert rows[0] == "instance,method,objective,error_rate,feasible,wall_time_s"
    assert len(rows) == 1 + 2 * len(samples)


def test_cdf_files_valid(tiny_config, tiny_dataset_dir, tmp_path):
    _, samples = load(tiny_dataset_dir)
    grid = PowerGrid.from_config(tiny_config, levels_cue=2, levels_vue=2)
    report = evaluate(samples, tiny_config, grid, ["benchmark", "maxpower"],
                      rng_seed=3)
    write_report(tmp_path, report)
    lines = (tmp_path / "cdf_objective.csv").read_text().splitlines()[1:]
    per_method = {}
    for line in lines:
        method, value, c = line.split(",")
        per_method.setdefault(method, []).append((float(value), float(c)))
    for method, pairs in per_method.items():
        values = [p[0] for p in pairs]
        cdf = [p[1] for p in pairs]
        assert values == sorted(values)
        assert cdf == sorted(cdf)
        assert cdf[-1] == pytest.approx(1.0)
        assert len(pairs) == len(samples)


def test_runtime_table_identity_and_empty(tiny_config, tiny_dataset_dir):
    _, samples = load(tiny_dataset_dir)
    grid = PowerGrid.from_config(tiny_config, levels_cue=2, levels_vue=2)
    rows = runtime_table(samples, tiny_config, grid, ["benchmark", "minpower"],
                         rng_seed=1)
    assert rows[0]["method"] == "benchmark"
    assert rows[0]["pct_of_benchmark"] == pytest.approx(100.0)
    assert rows[1]["total_s"] > 0
    assert runtime_table(samples, tiny_config, grid, [], rng_seed=1) == []


# ---------------------------------------------------------------------------
# CLI


@pytest.fixture(scope="module")
def cli_env(tiny_config, tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg_path = root / "tiny.cfg"
    tiny_config.save(cfg_path)
    data_dir = root / "data"
    code = cli(["generate", "--config", str(cfg_path), "--count", "4",
                "--seed", "2", "--out", str(data_dir), "--grid-levels", "2"])
    assert code == 0
    return root, cfg_path, data_dir


def test_cli_generate_happy_path(cli_env):
    _, _, data_dir = cli_env
    assert (data_dir / "records.bin").exists()
    assert (data_dir / "manifest.txt").exists()
    manifest, samples = load(data_dir)
    assert manifest.count == len(samples) == 4


def test_cli_train_zero_epochs_writes_checkpoint(cli_env):
    root, cfg_path, data_dir = cli_env
    out = root / "model0"
    code = cli(["train", "--config", str(cfg_path), "--data", str(data_dir),
                "--arch", "cnn", "--epochs", "0", "--seed", "1",
                "--out", str(out), "--grid-levels", "2"])
    assert code == 0
    assert (out / "cnn.ckpt").exists()
    trace = (out / "cnn_trace.csv").read_text().splitlines()
    assert trace == ["epoch,L_total,L_cls,L_reg_c,L_reg_v"]


def test_cli_evaluate_without_model_fails(cli_env, capsys):
    root, cfg_path, data_dir = cli_env
    code = cli(["evaluate", "--config", str(cfg_path), "--data", str(data_dir),
                "--methods", "benchmark,cnn", "--out", str(root / "ev"),
                "--grid-levels", "2"])
    assert code == 1
    err = capsys.readouterr().err
    assert "error:" in err and "--model" in err
    assert len(err.strip().splitlines()) == 1


def test_cli_evaluate_and_runtime(cli_env):
    root, cfg_path, data_dir = cli_env
    out = root / "model"
    assert cli(["train", "--config", str(cfg_path), "--data", str(data_dir),
                "--arch", "cnn", "--epochs", "2", "--seed", "1",
                "--out", str(out), "--grid-levels", "2"]) == 0
    ev = root / "eval"
    assert cli(["evaluate", "--config", str(cfg_path), "--data", str(data_dir),
                "--methods", "benchmark,cnn,maxpower",
                "--model", f"cnn={out / 'cnn.ckpt'}",
                "--mc-samples", "1000", "--out", str(ev),
                "--grid-levels", "2"]) == 0
    assert (ev / "rows.csv").exists() and (ev / "summary.txt").exists()
    rt = root / "rt"
    assert cli(["runtime", "--config", str(cfg_path), "--data", str(data_dir),
                "--methods", "benchmark,cnn",
                "--model", f"cnn={out / 'cnn.ckpt'}",
                "--out", str(rt), "--grid-levels", "2"]) == 0
    assert (rt / "runtime.csv").exists()


def test_cli_inspect(cli_env, capsys):
    root, cfg_path, data_dir = cli_env
    assert cli(["inspect", "--config", str(cfg_path),
                "--data", str(data_dir)]) == 0
    out = capsys.readouterr().out
    assert "4 samples" in out


def test_cli_unknown_flag_exits_2(capsys):
    assert cli(["generate", "--nonsense", "x"]) == 2


def test_cli_unknown_method_exits_1(cli_env, capsys):
    root, cfg_path, data_dir = cli_env
    code = cli(["evaluate", "--config", str(cfg_path), "--data", str(data_dir),
                "--methods", "benchmark,magic", "--out", str(root / "x")])
    assert code == 1
    assert "magic" in capsys.readouterr().err


def test_cli_invalid_config_names_key(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("n_cue = 2\nnot_a_key = 5\n")
    code = cli(["generate", "--config", str(bad), "--count", "1",
                "--seed", "0", "--out", str(tmp_path / "o")])
    assert code == 1
    err = capsys.readouterr().err
    assert "not_a_key" in err
    assert len(err.strip().splitlines()) == 1
