import json
import math

import pytest

from talbotlab import ConfigError
from talbotlab.boxdim import near_rational
from talbotlab.config import (
    EXPERIMENTS,
    apply_overrides,
    default_thread_count,
    load_config,
    parse_config_dict,
    resolve_time,
    spec_from_config,
)

MINIMAL = {
    "experiment": "revival",
    "resolution": {"N": 64, "M": 256},
}


def write_toml(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_toml_round_trip(tmp_path):
    path = write_toml(
        tmp_path,
        """
        experiment = "dichotomy"
        seed = 7
        times = ["pi", "sqrt2"]
        [data]
        name = "step"
        [potential]
        name = "cos"
        amplitude = 0.5
        [resolution]
        N = 256
        M = 1024
        [options]
        resolutions = [1024, 4096]
        """,
    )
    cfg = load_config(path)
    assert cfg.experiment == "dichotomy"
    assert cfg.seed == 7
    assert cfg.time_labels == ("pi", "sqrt2")
    assert cfg.times[0] == pytest.approx(math.pi)
    assert cfg.N == 256 and cfg.M == 1024
    assert cfg.data.kind == "piecewise_constant"
    assert cfg.potential.params["modes"][0][1] == pytest.approx(0.25)
    assert cfg.options["resolutions"] == [1024, 4096]
    assert cfg.options["duhamel_trunc"] == 1024  # schema default fills in


def test_json_encoding_matches_toml(tmp_path):
    toml_path = write_toml(
        tmp_path,
        """
        experiment = "revival"
        seed = 3
        [resolution]
        N = 64
        M = 256
        """,
    )
    raw = {"experiment": "revival", "seed": 3, "resolution": {"N": 64, "M": 256}}
    json_path = tmp_path / "cfg.json"
    json_path.write_text(json.dumps(raw), encoding="utf-8")
    a = load_config(toml_path)
    b = load_config(str(json_path))
    assert a.config_hash == b.config_hash


def test_hash_excludes_output_and_threads():
    base = parse_config_dict(dict(MINIMAL))
    moved = parse_config_dict({**MINIMAL, "output": "elsewhere", "threads": 8})
    assert base.config_hash == moved.config_hash
    reseeded = parse_config_dict({**MINIMAL, "seed": 1})
    assert base.config_hash != reseeded.config_hash
    resized = parse_config_dict({**MINIMAL, "resolution": {"N": 64, "M": 512}})
    assert base.config_hash != resized.config_hash


def test_overrides_parse_values():
    raw = apply_overrides(
        dict(MINIMAL),
        [
            "seed=9",
            "resolution.N=128",
            "resolution.M=512",
            'potential={"name":"cos"}',
            "options.q_max=5",
        ],
    )
    cfg = parse_config_dict(raw)
    assert cfg.seed == 9
    assert cfg.N == 128
    assert cfg.potential.params["modes"]
    assert cfg.options["q_max"] == 5


def test_override_string_fallback():
    raw = apply_overrides({}, ["experiment=revival", "output=somewhere"])
    cfg = parse_config_dict(raw)
    assert cfg.output == "somewhere"


def test_override_errors():
    with pytest.raises(ConfigError):
        apply_overrides({}, ["no_equals_sign"])
    with pytest.raises(ConfigError):
        apply_overrides({"seed": 3}, ["seed.nested=1"])


def test_validation_rejections():
    with pytest.raises(ConfigError):
        parse_config_dict({**MINIMAL, "resolution": {"N": 64, "M": 128}})  # M < 4N
    with pytest.raises(ConfigError):
        parse_config_dict({**MINIMAL, "resolution": {"N": 64, "M": 300}})  # not pow2
    with pytest.raises(ConfigError):
        parse_config_dict({**MINIMAL, "typo_key": 1})
    with pytest.raises(ConfigError):
        parse_config_dict({**MINIMAL, "options": {"q_max": 5, "bogus": 1}})
    with pytest.raises(ConfigError):
        parse_config_dict({**MINIMAL, "experiment": "unknown"})
    with pytest.raises(ConfigError):
        parse_config_dict({**MINIMAL, "seed": -1})
    with pytest.raises(ConfigError):
        parse_config_dict(dict(MINIMAL), experiment="dimension")  # mismatch
    with pytest.raises(ConfigError):
        parse_config_dict({"resolution": {"N": 64, "M": 256}})  # no experiment


def test_subcommand_fills_experiment():
    cfg = parse_config_dict({"resolution": {"N": 64, "M": 256}}, experiment="revival")
    assert cfg.experiment == "revival"
    dashed = parse_config_dict({}, experiment="kernel-scan")
    assert dashed.experiment == "kernel_scan"


def test_resolve_time_forms():
    assert resolve_time("pi") == ("pi", pytest.approx(math.pi))
    assert resolve_time("pi/2")[1] == pytest.approx(math.pi / 2)
    assert resolve_time("pi*3/7")[1] == pytest.approx(3 * math.pi / 7)
    assert resolve_time("sqrt2")[1] == pytest.approx(math.sqrt(2))
    assert resolve_time(1.25) == ("1.25", 1.25)
    with pytest.raises(ConfigError):
        resolve_time("tau")
    with pytest.raises(ConfigError):
        resolve_time(-1.0)
    with pytest.raises(ConfigError):
        resolve_time(True)


def test_random_times_seeded_and_irrational():
    raw = {
        "experiment": "dimension",
        "times": {"named": ["sqrt2"], "random": 3},
        "resolution": {"N": 64, "M": 256},
    }
    a = parse_config_dict({**raw, "seed": 5})
    b = parse_config_dict({**raw, "seed": 5})
    c = parse_config_dict({**raw, "seed": 6})
    assert a.times == b.times
    assert a.times != c.times
    assert a.time_labels == ("sqrt2", "rand0", "rand1", "rand2")
    assert all(not near_rational(t) for t in a.times)


def test_times_required_or_defaulted():
    with pytest.raises(ConfigError):
        parse_config_dict({"experiment": "dichotomy"})
    with pytest.raises(ConfigError):
        parse_config_dict({"experiment": "dimension"})
    cfg = parse_config_dict({"experiment": "smoothing"})
    assert cfg.times == (1.0,)
    bare = parse_config_dict({"experiment": "kernel_scan"})
    assert bare.times == ()


def test_spec_shortcuts():
    assert spec_from_config({"name": "step"}).kind == "piecewise_constant"
    assert spec_from_config({"name": "zero"}).params["modes"] == []
    w = spec_from_config({"name": "weierstrass", "alpha": 0.4})
    assert w.params["alpha"] == 0.4
    saw = spec_from_config({"name": "sawtooth", "beta": 0.2})
    assert saw.claimed_sigma0 == pytest.approx(0.7)
    trig = spec_from_config({"name": "trig", "modes": [[1, 1.0, 0.0], [-1, 1.0, 0.0]]})
    assert len(trig.params["modes"]) == 2
    full = spec_from_config({"kind": "weierstrass", "params": {"alpha": 0.5}})
    assert full.kind == "weierstrass"
    with pytest.raises(ConfigError):
        spec_from_config({"name": "unknown_thing"})
    with pytest.raises(ConfigError):
        spec_from_config({"name": "weierstrass"})  # missing alpha
    with pytest.raises(ConfigError):
        spec_from_config({"neither": 1})


def test_thread_env_default(monkeypatch):
    monkeypatch.delenv("TALBOTLAB_THREADS", raising=False)
    assert default_thread_count() == 1
    monkeypatch.setenv("TALBOTLAB_THREADS", "4")
    assert default_thread_count() == 4
    assert parse_config_dict(dict(MINIMAL)).threads == 4
    monkeypatch.setenv("TALBOTLAB_THREADS", "zero")
    with pytest.raises(ConfigError):
        default_thread_count()


def test_shipped_configs_parse():
    import glob
    import os

    paths = sorted(glob.glob(os.path.join(os.path.dirname(__file__), "..", "configs", "*.toml")))
    assert len(paths) == 5
    seen = set()
    for p in paths:
        cfg = load_config(p)
        assert cfg.experiment in EXPERIMENTS
        seen.add(cfg.experiment)
    assert seen == set(EXPERIMENTS)
