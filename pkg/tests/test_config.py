import pytest
import yaml
from hypothesis import given, strategies as st

from ipmlab.config import (ConfigError, ExperimentConfig, apply_overrides, env_overrides,
                           load_config, normalize, parse_config)


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert (cfg.grid.n, cfg.grid.L, cfg.profile.gamma, cfg.besov.p, cfg.solver.kappa) == (512, 4.0, 1.0, 2.0, 0.1)
    assert cfg.seed.N == [16, 36, 64]
    assert cfg.horizon(36) == pytest.approx(0.1 / 6)


def test_unknown_keys_name_their_path():
    with pytest.raises(ConfigError, match="gamm"):
        parse_config("gamm: 1")
    with pytest.raises(ConfigError) as info:
        parse_config("profile:\n  gamm: 1\n")
    assert info.value.path == "profile.gamm"


@pytest.mark.parametrize("doc,path", [
    ("grid:\n  n: '64'\n", "grid.n"),
    ("grid:\n  n: 100\n", "grid.n"),
    ("grid:\n  L: true\n", "grid.L"),
    ("seed:\n  N: 5\n", "seed.N"),
    ("seed:\n  N: [4, -1]\n", "seed.N[1]"),
    ("seed:\n  x0: [2.0, 0.0]\n", "seed.x0"),
    ("solver:\n  cfl_number: 2\n", "solver.cfl_number"),
    ("besov:\n  p: 1\n", "besov.p"),
    ("grid: 3\n", "grid"),
])
def test_type_and_guard_errors(doc, path):
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert info.value.path == path


def test_strict_resolution_guard():
    with pytest.raises(ConfigError, match="n >= "):
        parse_config("seed:\n  strict_resolution: true\n")
    parse_config("grid:\n  n: 2048\nseed:\n  N: [4, 8, 12]\n  strict_resolution: true\n")


def test_malformed_document():
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("grid: [")


def test_round_trip():
    doc = "grid:\n  n: 256\nprofile:\n  gamma: -1\nsolver:\n  T: 0.5\n"
    cfg = parse_config(doc)
    assert parse_config(cfg.dump()) == cfg
    assert normalize(cfg.dump()) == normalize(doc)
    assert yaml.safe_load(cfg.dump())["profile"]["gamma"] == -1.0


def test_env_and_flag_overrides(tmp_path):
    env = {"IPMLAB_GRID__N": "128", "IPMLAB_PROFILE__GAMMA": "-1", "OTHER": "x", "IPMLAB_SEED__N": "[4, 5, 6]"}
    assert env_overrides(env) == {"grid.n": 128, "profile.gamma": -1, "seed.N": [4, 5, 6]}
    path = tmp_path / "c.yaml"
    path.write_text("grid:\n  n: 64\n")
    cfg = load_config(str(path), environ=env, overrides={"solver.kappa": 0.2})
    assert cfg.grid.n == 128 and cfg.profile.gamma == -1.0 and cfg.solver.kappa == 0.2
    with pytest.raises(ConfigError, match="unknown"):
        env_overrides({"IPMLAB_GRID__SIZE": "3"})
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.yaml"))
    with pytest.raises(ConfigError):
        apply_overrides(cfg, {"grid.n": 7})


@given(n=st.sampled_from([16, 32, 64, 128, 512]), gamma=st.floats(-5, 5, allow_nan=False),
       kappa=st.floats(0, 1), Ns=st.lists(st.integers(1, 80), min_size=1, max_size=5))
def test_round_trip_property(n, gamma, kappa, Ns):
    doc = yaml.safe_dump({"grid": {"n": n}, "profile": {"gamma": gamma}, "solver": {"kappa": kappa},
                          "seed": {"N": Ns}})
    cfg = parse_config(doc)
    assert parse_config(cfg.dump()) == cfg
