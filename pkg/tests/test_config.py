"""Config loading, validation, resolution, and hashing."""

import json
import math

import pytest

from capflash.config import (
    SCHEMA,
    ConfigError,
    RunConfig,
    config_hash,
    load_config,
    resolve_config,
)


def minimal():
    return {
        "stimulus": {"waveform": "sine", "fs": 600e6, "n_samples": 4096,
                     "frequency": 51e6},
    }


def test_defaults_fill_in():
    cfg = resolve_config(minimal())
    assert cfg.seed == 1
    assert cfg.raw["schema"] == SCHEMA
    assert cfg.raw["topology"]["interp_factors"] == [8, 2, 2, 2, 1]
    assert cfg.raw["mismatch"]["tracking_bandwidth"] == math.inf
    assert cfg.raw["montecarlo"]["n_trials"] == 1000
    topo = cfg.topology()
    assert topo.n_codes == 64
    model = cfg.mismatch()
    assert model.sigma_comp_offset == 0.0


def test_unknown_keys_rejected_by_path():
    bad = minimal()
    bad["mismatch"] = {"sigma_comp": 0.05}
    with pytest.raises(ConfigError, match="mismatch.sigma_comp"):
        resolve_config(bad)
    with pytest.raises(ConfigError, match="unknown key: typo"):
        resolve_config({"typo": 1, **minimal()})


def test_section_type_checked():
    with pytest.raises(ConfigError, match="section expected"):
        resolve_config({"stimulus": 5})
    with pytest.raises(ConfigError, match="root must be a table"):
        resolve_config([1, 2])


def test_missing_required_key_named():
    cfg = resolve_config({"stimulus": {"waveform": "sine", "fs": 600e6,
                                       "frequency": 51e6}})
    with pytest.raises(ConfigError, match="stimulus.n_samples"):
        cfg.stimulus()
    # commands that never touch the stimulus still resolve and hash
    assert len(cfg.hash) == 16


def test_schema_mismatch_rejected():
    bad = {"schema": "capflash.config/9", **minimal()}
    with pytest.raises(ConfigError, match="unsupported config schema"):
        resolve_config(bad)


def test_seed_override():
    cfg = resolve_config(minimal(), seed_override=99)
    assert cfg.seed == 99
    user = dict(minimal(), run={"seed": 7})
    assert resolve_config(user).seed == 7
    assert resolve_config(user, seed_override=99).seed == 99


def test_decide_time_sentinel_resolves_from_fs():
    cfg = resolve_config(minimal())
    latch = cfg.latch(fs=600e6)
    assert latch.decide_time == pytest.approx(0.5 / 600e6)
    with pytest.raises(ConfigError, match="decide_time"):
        cfg.latch()
    explicit = resolve_config(dict(minimal(), latch={"decide_time": 2e-10}))
    assert explicit.latch().decide_time == 2e-10


def test_stimulus_overrides():
    cfg = resolve_config(minimal())
    spec = cfg.stimulus(fs=1.2e9, frequency=121e6, n_samples=8192,
                        n_fft=8192)
    assert spec.fs == 1.2e9
    assert spec.frequency == 121e6
    assert spec.n_samples == 8192
    assert spec.n_fft == 8192
    base = cfg.stimulus()
    assert base.fs == 600e6
    assert base.amplitude == 0.5


def test_model_value_errors_become_config_errors():
    bad = dict(minimal(), topology={"v_refn": 2.0})  # refn above refp
    with pytest.raises(ConfigError, match="topology"):
        resolve_config(bad).topology()
    bad2 = dict(minimal(), mismatch={"sigma_comp_offset": -0.1})
    with pytest.raises(ConfigError, match="mismatch"):
        resolve_config(bad2).mismatch()


def test_hash_stable_and_sensitive():
    a = resolve_config(minimal()).hash
    b = resolve_config(minimal()).hash
    assert a == b
    assert len(a) == 16
    c = resolve_config(dict(minimal(), run={"seed": 2})).hash
    assert c != a
    # key order in the source mapping must not matter
    reordered = {
        "stimulus": {"frequency": 51e6, "n_samples": 4096, "fs": 600e6,
                     "waveform": "sine"},
    }
    assert resolve_config(reordered).hash == a


def test_infinity_roundtrips_through_json():
    cfg = resolve_config(minimal())
    emb = cfg.embedded()
    assert emb["mismatch"]["tracking_bandwidth"] == "inf"
    text = json.dumps(emb)  # must be strict JSON
    back = resolve_config(json.loads(text))
    assert back.raw["mismatch"]["tracking_bandwidth"] == math.inf
    assert back.hash == cfg.hash


def test_load_toml_and_json(tmp_path):
    toml_file = tmp_path / "run.toml"
    toml_file.write_text(
        'schema = "capflash.config/1"\n'
        "[stimulus]\n"
        'waveform = "sine"\n'
        "fs = 600e6\n"
        "n_samples = 4096\n"
        "frequency = 51e6\n"
        "[run]\n"
        "seed = 3\n"
    )
    cfg = load_config(toml_file)
    assert cfg.seed == 3
    assert cfg.source == str(toml_file)

    json_file = tmp_path / "run.json"
    json_file.write_text(json.dumps(cfg.embedded()))
    cfg2 = load_config(json_file)
    assert cfg2.hash == cfg.hash
    assert cfg2.seed == 3


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[stimulus\nwaveform=")
    with pytest.raises(ConfigError, match="parse error"):
        load_config(bad)
    badj = tmp_path / "bad.json"
    badj.write_text("{not json")
    with pytest.raises(ConfigError, match="parse error"):
        load_config(badj)


def test_run_config_is_frozen():
    cfg = resolve_config(minimal())
    with pytest.raises(Exception):
        cfg.raw = {}
    assert isinstance(cfg, RunConfig)
    assert config_hash(cfg.raw) == cfg.hash
