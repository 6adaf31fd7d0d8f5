import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot_heat.config import ConfigError, ExperimentConfig, load_config
from carnot_heat.kv import dump_kv, parse_kv, parse_value

scalars = st.one_of(
    st.integers(-10**12, 10**12),
    st.floats(allow_nan=False, allow_infinity=False),
    st.booleans(),
    st.from_regex(r"[a-z][a-z0-9:\-]{0,12}", fullmatch=True).filter(lambda s: s not in ("true", "false", "yes", "no")),
)
keys = st.from_regex(r"[a-z][a-z0-9_]{0,10}", fullmatch=True)


@given(st.dictionaries(keys, st.one_of(scalars, st.lists(st.floats(allow_nan=False, allow_infinity=False),
                                                           min_size=2, max_size=5).map(tuple))))
def test_kv_roundtrip(d):
    assert parse_kv(dump_kv(d)) == d


def test_parse_details():
    assert parse_value("1e-2, 1e-5, 6") == (0.01, 1e-05, 6)
    assert parse_value('"a, b"') == "a, b"
    assert parse_value("h1-torus:2,0.5") == "h1-torus:2,0.5"
    assert parse_kv("a = 1  # note\n\nb-c = x\n") == {"a": 1, "b_c": "x"}
    assert parse_kv("r = 1\nr = 2\n", repeated=("r",)) == {"r": [1, 2]}
    with pytest.raises(ValueError):
        parse_kv("novalue\n")
    with pytest.raises(ValueError):
        parse_kv("a = 1\na = 2\n")


def write(tmp_path, text):
    p = tmp_path / "c.txt"
    p.write_text(text)
    return p


def test_config_load_and_grid(tmp_path):
    cfg = load_config(write(tmp_path, "kind = heat-content\ngroup = heisenberg:1\ndomain = h1-torus:2,0.5\n"
                                      "alpha = 2\nt_grid = 1e-2, 1e-4, 3\ntol = 0.05\n"))
    assert cfg.alpha == 2.0 and cfg.params == {"tol": 0.05}
    assert list(cfg.t_points()) == pytest.approx([1e-2, 1e-3, 1e-4])
    again = ExperimentConfig.from_dict(cfg.to_dict()).validate()
    assert again == cfg
    assert load_config(write(tmp_path, cfg.dumps())) == cfg


@pytest.mark.parametrize("text", [
    "kind = heat-content\ngroup = heisenberg:1\ndomain = h1-torus:2,0.5\nt_grid = 1e-4, 1e-2, 3\n",
    "kind = heat-content\ngroup = heisenberg:1\ndomain = h1-torus:2,0.5\nt_grid = 1e-2, 1e-4\n",
    "kind = heat-content\ngroup = heisenberg:1\ndomain = disk:1\n",
    "kind = heat-content\ngroup = lie:7\ndomain = disk:1\n",
    "kind = heat-content\ngroup = heisenberg:1\n",
    "kind = heat-content\ngroup = heisenberg:1\ndomain = h1-torus:2,0.5\nalpha = 2.5\n",
    "kind = heat-content\ngroup = heisenberg:1\ndomain = h1-torus:2,0.5\nsamples = 0\n",
    "kind = smooth-function\ngroup = heisenberg:1\nfunction = wavelet\n",
    "kind = teleport\n",
    "group = heisenberg:1\n",
    "kind = heat-content\ngroup = heisenberg:1\ndomain = h1-torus:2,0.5\nt_values = 1e-3, 1e-2\n",
])
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))


def test_kind_mismatch(tmp_path):
    p = write(tmp_path, "kind = taylor\ngroup = heisenberg:1\n")
    with pytest.raises(ConfigError):
        load_config(p, kind="perimeter")
    assert load_config(p, kind="taylor").kind == "taylor"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.txt")
