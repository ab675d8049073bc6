import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from eispde.cli import main
from eispde.config import ConfigError, build_model, check_config, load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = """
[space]
kind = "laplacian"
n = 4

[drift]
kind = "linear_diagonal"
c = 1.0

[constants]
theta1 = 0.2
theta2 = 0.4
"""


def write(tmp_path, text, name="m.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_bundled_configs_load():
    for p in sorted(CONFIGS.glob("*.toml")):
        build_model(load_config(p))


def test_missing_key_names_it(tmp_path, capsys):
    p = write(tmp_path, BASE.replace("c = 1.0\n", ""))
    assert main(["constants", "--config", str(p), "--out-dir", str(tmp_path)]) == 3
    assert "drift.c" in capsys.readouterr().err


def test_unknown_key_and_table(tmp_path):
    with pytest.raises(ConfigError, match="drift.speed"):
        check_config({"drift": {"speed": 1}})
    with pytest.raises(ConfigError, match="'solver'"):
        check_config({"solver": {}})
    p = write(tmp_path, BASE + "\n[experiment]\nwibble = 3\n")
    with pytest.raises(ConfigError, match="experiment.wibble"):
        load_config(p)


def test_bad_values(tmp_path):
    with pytest.raises(ConfigError, match="space.n"):
        build_model(load_config(write(tmp_path, BASE.replace("n = 4", 'n = "four"'))))
    with pytest.raises(ConfigError, match="space.kind"):
        build_model(load_config(write(tmp_path, BASE.replace('"laplacian"', '"torus"'))))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "[space\nkind=", "broken.toml"))
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.toml")


def test_declared_assumptions_override(tmp_path):
    p = write(tmp_path, BASE + "\n[assumptions]\ngamma = 1.5\nL1 = 2.0\n")
    m = build_model(load_config(p))
    assert m.gamma == 1.5 and m.drift.L1 == 2.0


def test_generic_space(tmp_path):
    text = BASE.replace('kind = "laplacian"\nn = 4', 'kind = "generic"\neigenvalues = [2.0, 5.0]')
    m = build_model(load_config(write(tmp_path, text)))
    assert m.space.alpha == 2.0 and m.n == 2


def test_constants_command(tmp_path, capsys):
    rc = main(["constants", "--config", str(CONFIGS / "laplacian_example.toml"),
               "--out-dir", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    for key in ("Lbar", "beta1", "rho1", "rho2", "tau", "stepsize_bound_p1", "stepsize_bound_p2"):
        assert f"{key} = " in out
    doc = json.loads((tmp_path / "constants.json").read_text())
    assert doc["constants"]["Lbar"] == 2.02
    assert doc["seed"] == 20240101 and "version" in doc and doc["config"]["space"]["n"] == 16
    assert (tmp_path / "constants.csv").exists()


def test_distance_identical_files(tmp_path, capsys):
    a = tmp_path / "a.csv"
    np.savetxt(a, np.random.default_rng(0).normal(size=(50, 3)), delimiter=",", header="x,y,z",
               comments="")
    shutil.copy(a, tmp_path / "b.csv")
    assert main(["distance", str(a), str(tmp_path / "b.csv"), "--out-dir", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "distance.json").read_text())["details"]["distance"] == 0.0


def test_distance_one_dimensional(tmp_path):
    np.savetxt(tmp_path / "a.csv", [0.0])
    np.savetxt(tmp_path / "b.csv", [0.7])
    main(["distance", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--out-dir", str(tmp_path)])
    d = json.loads((tmp_path / "distance.json").read_text())["details"]
    assert d["method"] == "exact-1d" and d["distance"] == pytest.approx(0.7)


def test_validate_and_simulate(tmp_path):
    cfg = CONFIGS / "laplacian_example.toml"
    assert main(["validate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    rc = main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path), "--seed", "5",
               "--dump-trajectory", "traj.csv"])
    assert rc == 2  # runs, but dt sits outside the stepsize gate
    header = (tmp_path / "traj.csv").read_text().splitlines()[0]
    assert header == "k,t," + ",".join(f"coord_{i}" for i in range(1, 17))
    assert json.loads((tmp_path / "simulate.json").read_text())["seed"] == 5


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("EISPDE_SEED", "99")
    main(["simulate", "--config", str(CONFIGS / "laplacian_example.toml"), "--out-dir", str(tmp_path)])
    assert json.loads((tmp_path / "simulate.json").read_text())["seed"] == 99


def test_rate_refuses_when_tau_too_large(tmp_path, capsys):
    text = BASE + "\n[experiment]\ndt_ladder = [0.5, 0.25, 0.125, 0.0625]\nn_ladder = [1, 2, 3, 4]\n"
    rc = main(["rate", "--config", str(write(tmp_path, text)), "--out-dir", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 2 and "tau" in err and "alpha" in err


def test_rate_degenerate_ladder(tmp_path, capsys):
    text = BASE.replace("c = 1.0", "c = 0.5") + \
        "\n[experiment]\ndt_ladder = [0.0625, 0.0625]\nn_ladder = [1, 2, 3, 4]\n"
    assert main(["rate", "--config", str(write(tmp_path, text)), "--out-dir", str(tmp_path)]) == 3
    assert "at least 4 points" in capsys.readouterr().err
