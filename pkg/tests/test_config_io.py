import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpcollapse.config import RunConfig, dump_config, load_config, parse_config_text
from vpcollapse.errors import ConfigError
from vpcollapse.io import (
    read_ensemble_csv,
    read_field_csv,
    read_series_csv,
    read_times,
    write_ensemble_csv,
    write_field_csv,
    write_series_csv,
    write_times,
)
from vpcollapse.runner import time_grid
from vpcollapse.simulation import ParticleEnsemble


def test_defaults_are_valid():
    cfg = RunConfig()
    assert cfg.hist_every == 10
    assert cfg.replace(dt=5e-4).hist_every == 20


@pytest.mark.parametrize("field,value", [
    ("epsilon", 0.0), ("epsilon", 1.5), ("N", 999), ("dt", 0.0), ("dt", 0.02),
    ("dt_hist", 1.5e-3), ("dt_hist", 5e-4), ("t_end_fraction", 1.0), ("t_end_fraction", -0.1),
    ("a0", -1.0), ("thread_count", 0), ("snapshot_dumps", "some"), ("a0", math.nan),
])
def test_invalid_values(field, value):
    with pytest.raises(ConfigError) as info:
        RunConfig(**{field: value})
    assert info.value.field == field


def test_parse_text():
    text = """
    # reference run
    a0 = 2.0
    eps = 0.1        # alias
    n_particles = 2e4
    threads = 3
    out = somewhere
    """
    vals = parse_config_text(text)
    assert vals == {"a0": 2.0, "epsilon": 0.1, "N": 20000, "thread_count": 3,
                    "output_dir": "somewhere"}
    with pytest.raises(ConfigError):
        parse_config_text("bogus = 1")
    with pytest.raises(ConfigError):
        parse_config_text("N = 1.5e3 5")
    with pytest.raises(ConfigError):
        parse_config_text("just words")


def test_load_config_layers(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("epsilon = 0.3\nN = 5000\n")
    cfg = load_config(p, {"N": "6000", "seed": 4})
    assert (cfg.epsilon, cfg.N, cfg.seed) == (0.3, 6000, 4)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_manifest_round_trip():
    cfg = RunConfig(a0=1.0 / 3.0, epsilon=0.1 + 0.2, dt=1e-3, dt_hist=3e-3, seed=17)
    text = dump_config(cfg, header=("note",))
    assert text.startswith("# note\n")
    assert RunConfig(**parse_config_text(text)) == cfg


def test_time_grid():
    assert time_grid(0.0, 1e-3) == []
    g = time_grid(0.0105, 1e-3)
    assert len(g) == 11 and g[-1] == 0.0105
    g = time_grid(0.01, 1e-3)
    assert len(g) == 10 and g[-1] == 0.01


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1,
                max_size=20))
def test_times_round_trip(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("t") / "times.txt"
    write_times(p, values)
    np.testing.assert_array_equal(read_times(p), np.array(values))


def test_csv_round_trips(tmp_path):
    rng = np.random.default_rng(0)
    ens = ParticleEnsemble(rng.normal(size=(50, 3)), rng.normal(size=(50, 3)) * 1e-7,
                           rng.random(50) / 3)
    write_ensemble_csv(tmp_path / "e.csv", ens)
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "id,x1,x2,x3,v1,v2,v3,weight"
    back = read_ensemble_csv(tmp_path / "e.csv")
    np.testing.assert_array_equal(back.positions, ens.positions)
    np.testing.assert_array_equal(back.velocities, ens.velocities)
    np.testing.assert_array_equal(back.weights, ens.weights)

    r, m = np.sort(rng.random(20)), np.cumsum(rng.random(20))
    write_field_csv(tmp_path / "f.csv", r, m)
    r2, m2 = read_field_csv(tmp_path / "f.csv")
    np.testing.assert_array_equal(r2, r)
    np.testing.assert_array_equal(m2, m)

    rows = rng.normal(size=(4, 3))
    write_series_csv(tmp_path / "s.csv", ("t", "a", "b"), rows)
    cols, data = read_series_csv(tmp_path / "s.csv")
    assert cols == ("t", "a", "b")
    np.testing.assert_array_equal(data, rows)


def test_wrong_header(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        read_field_csv(p)
