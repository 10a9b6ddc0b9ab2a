import json
import os

import pytest
from pytest import approx

from fbsir.config import *
from fbsir.errors import ConfigError

_install_dir = os.path.abspath(os.path.dirname(__file__))


def data(name):
    return os.path.join(_install_dir, "data", name)


def load_document(name):
    with open(data(name)) as f:
        return json.load(f)


def test_load_scenario():
    scenario = load_scenario(data("vanishing.json"))
    assert scenario.params.beta == 0.25
    assert scenario.params.n == 1
    assert scenario.init.h0 == 1.0
    assert scenario.init.compact
    assert scenario.init.i0.shape == "bump"
    assert scenario.init.i0.radius == 1.0
    assert scenario.init.r0.shape == "zero"
    assert (scenario.grid.L, scenario.grid.n_l, scenario.grid.n_h) == (8.0, 64, 32)
    assert scenario.time.save_stride == 20
    assert scenario.time.dt_safety == 0.5
    assert not scenario.time.stop_on_escape
    assert scenario.output.name == "vanishing"
    assert scenario.output.outdir == "."


def test_defaults_and_dimension():
    scenario = load_scenario(data("uniform.json"))
    assert scenario.params.n == 2
    assert scenario.grid.n == 2
    assert not scenario.init.compact
    assert scenario.time.save_profiles
    assert scenario.output.svg and scenario.output.h5


def test_dump_round_trip(tmp_path):
    scenario = load_scenario(data("uniform.json"))
    path = str(tmp_path / "dumped.json")
    scenario.dump(path)
    again = load_scenario(path)
    assert again == scenario
    with open(path) as f:
        document = json.load(f)
    assert document["time"]["positivity_tol"] == approx(1e-10)
    assert document["grid"] == {"L": 8.0, "N_L": 64, "N_h": 32}


def test_missing_file(tmp_path):
    with pytest.raises(IOError):
        load_scenario(str(tmp_path / "nothing.json"))


def test_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_scenario(str(path))


def test_invalid_model():
    with pytest.raises(ConfigError, match=r"^model\.mu1"):
        load_scenario(data("bad_mu1.json"))


def test_invalid_geometry():
    with pytest.raises(ConfigError, match=r"^grid\.L"):
        load_scenario(data("bad_geometry.json"))


@pytest.mark.parametrize(
    "section, key, value, prefix",
    [
        ("model", "beta", -1.0, "model.beta"),
        ("model", "beta", "high", "model.beta"),
        ("model", "n", 4, "model.n"),
        ("model", "n", 1.5, "model.n"),
        ("model", "gamma", 1.0, "model.gamma"),
        ("grid", "N_h", 2, "grid.N_h"),
        ("grid", "N_L", 10.5, "grid.N_L"),
        ("time", "dt", 0.0, "time.dt"),
        ("time", "save_stride", 0, "time.save_stride"),
        ("time", "save_profiles", "yes", "time.save_profiles"),
        ("time", "substeps", 2, "time.substeps"),
        ("output", "format", "csv", "output.format"),
        ("initial", "compact", 1, "initial.compact"),
    ],
)
def test_invalid_keys(section, key, value, prefix):
    document = load_document("vanishing.json")
    document.setdefault(section, {})[key] = value
    with pytest.raises(ConfigError) as e:
        ScenarioConfig.from_dict(document)
    assert str(e.value).startswith(prefix)


@pytest.mark.parametrize(
    "section, key, prefix",
    [
        ("model", "d2", "model.d2"),
        ("initial", "I0", "initial.I0"),
        ("grid", "L", "grid.L"),
        ("time", "t_end", "time.t_end"),
    ],
)
def test_missing_keys(section, key, prefix):
    document = load_document("vanishing.json")
    del document[section][key]
    with pytest.raises(ConfigError) as e:
        ScenarioConfig.from_dict(document)
    assert str(e.value).startswith(prefix)


def test_invalid_profiles():
    document = load_document("vanishing.json")
    document["initial"]["I0"] = {"shape": "triangle"}
    with pytest.raises(ConfigError, match=r"^initial\.I0"):
        ScenarioConfig.from_dict(document)

    document = load_document("vanishing.json")
    document["initial"]["I0"] = {"shape": "bump", "amplitude": 0.5, "width": 1.0}
    with pytest.raises(ConfigError, match=r"^initial\.I0\.width"):
        ScenarioConfig.from_dict(document)

    # infected profile should vanish at h0 when the support is compact
    document = load_document("vanishing.json")
    document["initial"]["I0"] = {"shape": "constant", "amplitude": 0.5}
    with pytest.raises(ConfigError, match=r"^initial\.I0"):
        ScenarioConfig.from_dict(document)

    document["initial"]["compact"] = False
    scenario = ScenarioConfig.from_dict(document)
    assert not scenario.init.compact


def test_missing_section():
    document = load_document("vanishing.json")
    del document["grid"]
    with pytest.raises(ConfigError, match="^grid"):
        ScenarioConfig.from_dict(document)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict([1, 2])
