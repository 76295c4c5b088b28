import csv

import numpy as np
import pytest
import yaml

from gcpso import cli
from gcpso.config import (
    ExperimentConfig,
    dump_config,
    load_config,
    preset,
)
from gcpso.core import ConfigurationError


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def test_run_smoke(tmp_path, capsys):
    out = tmp_path / "o"
    code = run_cli("run", "--algorithm", "pso", "--objective", "sphere", "--dim", 2, "--iters", 50, "--seed", 1,
                   "--output", out)
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"trials.csv", "summary.csv", "summary.json"}
    assert "final best value" in capsys.readouterr().out


def test_run_invalid_epsilon(tmp_path, capsys):
    code = run_cli("run", "--epsilon", 1.5, "--output", tmp_path / "o")
    assert code != 0
    err = capsys.readouterr().err
    assert "epsilon" in err and "[0,1]" in err


def test_rerun_byte_identical(tmp_path):
    out = tmp_path / "o"
    args = ["run", "--algorithm", "gcpso", "--objective", "ackley_shifted_rotated", "--dim", 3, "--iters", 40,
            "--output", out]
    run_cli(*args)
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    run_cli(*args, "--force")
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first


def test_csvs_identical_across_directories(tmp_path):
    args = ["run", "--algorithm", "pso", "--objective", "rastrigin", "--dim", 3, "--iters", 20]
    run_cli(*args, "--output", tmp_path / "a")
    run_cli(*args, "--output", tmp_path / "b")
    for name in ("trials.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_nonempty_output_needs_force(tmp_path, capsys):
    out = tmp_path / "o"
    out.mkdir()
    (out / "keep.txt").write_text("x")
    assert run_cli("run", "--iters", 5, "--output", out) == 1
    assert "--force" in capsys.readouterr().err
    assert run_cli("run", "--iters", 5, "--output", out, "--force") == 0
    assert (out / "keep.txt").exists()


def test_env_var_sets_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv("GCPSO_OUTPUT_DIR", str(tmp_path / "env"))
    assert run_cli("run", "--iters", 5) == 0
    assert (tmp_path / "env" / "summary.csv").exists()


def test_flag_beats_file_beats_default(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("trials: 3\nmaster_seed: 9\nbudget: {iterations: 20}\n")
    args = cli.build_parser().parse_args(["experiment", "--config", str(path), "--trials", "2"])
    cfg = cli.resolve_config(args)
    assert cfg.trials == 2  # flag
    assert cfg.master_seed == 9  # file
    assert cfg.population == 40  # default


def test_experiment_from_config(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(
        "# small run\n"
        "algorithms: [pso, {name: gcpso, epsilon: 0.2}]\n"
        "objectives: [{name: sphere, dim: 2}, {name: rastrigin, dim: 2}]\n"
        "trials: 2\nbudget: {iterations: 10}\npopulation: 6\n"
    )
    assert run_cli("experiment", "--config", path, "--output", tmp_path / "o") == 0
    with open(tmp_path / "o" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [(r["algorithm"], r["objective"]) for r in rows] == [
        ("pso", "sphere"), ("pso", "rastrigin"), ("gcpso", "sphere"), ("gcpso", "rastrigin")]


def test_unknown_key_rejected(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text("trails: 3\n")
    assert run_cli("experiment", "--config", path, "--output", tmp_path / "o") == 2
    assert "trails" in capsys.readouterr().err


def test_unknown_algorithm_param_rejected():
    with pytest.raises(ConfigurationError, match="epsilonn"):
        ExperimentConfig.from_dict({"algorithms": [{"name": "gcpso", "epsilonn": 0.1}]})


def test_init_config_roundtrip(tmp_path):
    for name in ("full", "desk"):
        path = tmp_path / f"{name}.yaml"
        assert run_cli("init-config", path, "--preset", name) == 0
        assert path.read_text().startswith("#")
        assert load_config(path) == preset(name)


def test_roundtrip_with_schedules():
    cfg = ExperimentConfig.from_dict({
        "algorithms": [{"name": "gcpso", "label": "g", "w_schedule": "linear:0.9:0.4", "epsilon": 0.3},
                       {"name": "all_informed", "population": 3, "lambda_weights": [0.2, 0.3, 0.5]}],
        "objectives": [{"name": "ackley_shifted_rotated", "dim": 5, "transform_seed": 4}],
    })
    again = ExperimentConfig.from_dict(yaml.safe_load(dump_config(cfg)))
    assert again == cfg


def test_init_config_refuses_overwrite(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("x")
    assert run_cli("init-config", path) == 1


def test_compare_command(tmp_path, capsys):
    out = tmp_path / "o"
    run_cli("experiment", "--preset", "desk", "--trials", 2, "--iters", 10, "--dim", 2, "--output", out)
    assert run_cli("compare", out, "--baseline", "pso", "--challenger", "pso",
                   "--output", tmp_path / "cmp.csv") == 0
    assert "0 win / 0 loss / 7 tie" in capsys.readouterr().out
    assert (tmp_path / "cmp.csv").exists()


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "o"
    code = run_cli("sweep-epsilon", "--preset", "desk", "--trials", 2, "--iters", 10, "--dim", 2,
                   "--epsilons", "0,0.1,0.3,1.0,0.1", "--output", out)
    assert code == 0
    with open(out / "sweep.csv") as fh:
        header = next(csv.reader(fh))
    assert len(header) == 1 + 4


def test_cml_command_range(tmp_path, capsys):
    path = tmp_path / "f.csv"
    assert run_cli("cml", "--topology", "global", "--size", 64, "--steps", 500, "--output", path) == 0
    data = np.loadtxt(path, delimiter=",", skiprows=1)[:, 1:]
    assert data.shape == (501, 64)
    assert data.min() >= 0 and data.max() <= 1
    assert "min cell value" in capsys.readouterr().out


def test_cml_command_decoupled_columns(tmp_path):
    path = tmp_path / "f.csv"
    run_cli("cml", "--epsilon", 0, "--size", 3, "--steps", 20, "--output", path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)[:, 1:]
    for col in data.T:
        x = col[0]
        for value in col[1:]:
            x = 4.0 * x * (1.0 - x)
            assert value == x


def test_cml_command_homogeneous(tmp_path):
    path = tmp_path / "f.csv"
    run_cli("cml", "--topology", "diffusive", "--init", "homogeneous", "--value", 0.3, "--size", 5,
            "--steps", 50, "--output", path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)[:, 1:]
    assert np.all(data == data[:, :1])


def test_cml_invalid_topology(capsys):
    with pytest.raises(SystemExit) as info:
        run_cli("cml", "--topology", "star")
    assert info.value.code != 0
    assert "diffusive" in capsys.readouterr().err


def test_list_objectives(capsys):
    assert run_cli("list-objectives") == 0
    out = capsys.readouterr().out
    assert "rastrigin_shifted_rotated" in out and "dejong_f4" in out
