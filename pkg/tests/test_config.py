import json

import pytest

from polareuler import config as cfgmod


def test_defaults_load():
    cfg = cfgmod.load_config()
    assert cfg["construction"]["beta"] == 0.5
    assert cfg["schema_version"] == cfgmod.SCHEMA_VERSION


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"construcion": {"beta": 0.4}}))
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load_config(p)
    p.write_text(json.dumps({"construction": {"betta": 0.4}}))
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load_config(p)


def test_partial_file_merges_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"construction": {"lam": 8.0}}))
    cfg = cfgmod.load_config(p)
    assert cfg["construction"]["lam"] == 8.0
    assert cfg["construction"]["beta"] == 0.5


def test_overrides():
    cfg = cfgmod.load_config(overrides=["evolve.t_end=0.25", "seed=7"])
    assert cfg["evolve"]["t_end"] == 0.25
    assert cfg["seed"] == 7
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load_config(overrides=["evolve.no_such=1"])
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load_config(overrides=["no-equals-sign"])


def test_invalid_s_rejected():
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load_config(overrides=["sobolev.s_values=[1.5]"])


def test_bad_json_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load_config(p)


def test_roundtrip_and_hash_stability():
    cfg = cfgmod.load_config(overrides=["construction.lam=2.0"])
    blob = cfgmod.serialize(cfg)
    again = json.loads(blob)
    assert again == cfg
    assert cfgmod.config_hash(cfg) == cfgmod.config_hash(json.loads(blob))
    base = cfgmod.load_config()
    assert cfgmod.config_hash(base) != cfgmod.config_hash(cfg)
