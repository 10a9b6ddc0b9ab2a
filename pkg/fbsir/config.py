"""
Scenario files.

A scenario is a JSON document with the sections model, initial, grid, time and
output. Every key is documented in docs/scenarios.md. Parsing validates all model
invariants and reports errors prefixed by the flat key, e.g. ``model.mu1``.
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field

from fbsir.errors import ConfigError
from fbsir.frontfix import MIN_INTERVALS, GridSpec
from fbsir.model import InitialData, ModelParams, Profile
from fbsir.solver import TimeStepConfig
from fbsir.utils.misc import FbsirEncoder, check_file_exist

logger = logging.getLogger(__name__)

MODEL_KEYS = ("b", "beta", "mu1", "mu2", "mu3", "alpha", "d1", "d2", "d3", "mu", "n")
INITIAL_KEYS = ("h0", "compact", "S0", "I0", "R0")
GRID_KEYS = ("L", "N_L", "N_h")
TIME_DEFAULTS = {
    "save_stride": 1,
    "positivity_tol": 1e-10,
    "dt_safety": 0.5,
    "save_profiles": False,
    "stop_on_escape": False,
}
TIME_KEYS = ("dt", "t_end") + tuple(TIME_DEFAULTS)
OUTPUT_DEFAULTS = {"outdir": ".", "name": "fbsir_run", "svg": False, "h5": False}
SECTIONS = ("model", "initial", "grid", "time", "output")
PROFILE_KEYS = ("shape", "amplitude", "radius", "r", "values")


@dataclass(frozen=True)
class OutputConfig:
    """
    Where and what to write.

    Args:
        outdir (str): output directory
        name (str): prefix of every output file
        svg (bool): write SVG charts
        h5 (bool): write the HDF5 archive

    """

    outdir: str = "."
    name: str = "fbsir_run"
    svg: bool = False
    h5: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Parsed and validated scenario.

    Args:
        params (ModelParams): model constants
        init (InitialData): initial data
        grid (GridSpec): grids
        time (TimeStepConfig): time stepping controls
        output (OutputConfig): output controls

    """

    params: ModelParams
    init: InitialData
    grid: GridSpec
    time: TimeStepConfig
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, document):
        """
        Builds a scenario from a parsed document.

        Args:
            document (dict): scenario document

        Returns:
            ScenarioConfig

        Raises:
            ConfigError: missing, unknown or invalid key

        """
        if not isinstance(document, dict):
            raise ConfigError("scenario should be a JSON object")
        _check_keys("", document, SECTIONS, required=("model", "initial", "grid", "time"))

        model = _section(document, "model", MODEL_KEYS, required=MODEL_KEYS[:-1])
        values = {key: _number("model", key, model[key]) for key in MODEL_KEYS[:-1]}
        values["n"] = _integer("model", "n", model.get("n", 1))
        params = _build("model", ModelParams, **values)

        initial = _section(document, "initial", INITIAL_KEYS, required=("h0", "S0", "I0"))
        h0 = _number("initial", "h0", initial["h0"])
        profiles = {}
        for key in ("S0", "I0", "R0"):
            descriptor = initial.get(key, {"shape": "zero"})
            if not isinstance(descriptor, dict):
                raise ConfigError(f"initial.{key}: should be a profile object")
            _check_keys(f"initial.{key}.", descriptor, PROFILE_KEYS, required=("shape",))
            profiles[key] = _build(
                f"initial.{key}", Profile.from_dict, descriptor, default_radius=h0
            )
        compact = initial.get("compact", True)
        if not isinstance(compact, bool):
            raise ConfigError(f"initial.compact: should be true or false, got {compact!r}")
        init = _build(
            "initial",
            InitialData,
            h0=h0,
            s0=profiles["S0"],
            i0=profiles["I0"],
            r0=profiles["R0"],
            compact=compact,
        )

        grid_section = _section(document, "grid", GRID_KEYS, required=GRID_KEYS)
        length = _number("grid", "L", grid_section["L"])
        if not length > h0:
            raise ConfigError(f"grid.L: {length} should be larger than initial.h0 = {h0}")
        intervals = {}
        for key in ("N_L", "N_h"):
            intervals[key] = _integer("grid", key, grid_section[key])
            if intervals[key] < MIN_INTERVALS:
                raise ConfigError(
                    f"grid.{key}: should be at least {MIN_INTERVALS}, got {intervals[key]}"
                )
        grid = _build(
            "grid", GridSpec, L=length, n_l=intervals["N_L"], n_h=intervals["N_h"], n=params.n
        )

        time_section = _section(document, "time", TIME_KEYS, required=("dt", "t_end"))
        time_values = dict(TIME_DEFAULTS)
        time_values.update(time_section)
        for key in ("dt", "t_end", "positivity_tol", "dt_safety"):
            time_values[key] = _number("time", key, time_values[key])
        time_values["save_stride"] = _integer("time", "save_stride", time_values["save_stride"])
        for key in ("save_profiles", "stop_on_escape"):
            if not isinstance(time_values[key], bool):
                raise ConfigError(f"time.{key}: should be true or false")
        time = _build("time", TimeStepConfig, **time_values)

        output_section = _section(document, "output", tuple(OUTPUT_DEFAULTS), required=())
        output_values = dict(OUTPUT_DEFAULTS)
        output_values.update(output_section)
        output = OutputConfig(**output_values)
        return cls(params=params, init=init, grid=grid, time=time, output=output)

    def to_dict(self):
        """
        Document which parses back to the same scenario, defaults filled in.

        Returns:
            dict

        """
        return {
            "model": asdict(self.params),
            "initial": {
                "h0": self.init.h0,
                "compact": self.init.compact,
                "S0": self.init.s0.to_dict(),
                "I0": self.init.i0.to_dict(),
                "R0": self.init.r0.to_dict(),
            },
            "grid": {"L": self.grid.L, "N_L": self.grid.n_l, "N_h": self.grid.n_h},
            "time": asdict(self.time),
            "output": asdict(self.output),
        }

    def dump(self, path):
        """
        Writes the scenario as JSON.

        Args:
            path (str): output file

        """
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, cls=FbsirEncoder, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"Scenario written to {path}")


def load_scenario(path):
    """
    Reads and validates a scenario file.

    Args:
        path (str): JSON scenario

    Returns:
        ScenarioConfig

    Raises:
        IOError: the file does not exist
        ConfigError: the file is not valid JSON or the scenario is invalid

    """
    check_file_exist(path)
    with open(path) as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{os.path.basename(path)}: not valid JSON, {e}")
    scenario = ScenarioConfig.from_dict(document)
    logger.debug(f"Loaded scenario {path}: {scenario}")
    return scenario


def _check_keys(prefix, mapping, allowed, required):
    for key in required:
        if key not in mapping:
            raise ConfigError(f"{prefix}{key}: missing required key")
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"{prefix}{key}: unknown key")


def _section(document, name, allowed, required):
    section = document.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"{name}: should be an object")
    _check_keys(f"{name}.", section, allowed, required)
    return section


def _number(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: should be a number, got {value!r}")
    return float(value)


def _integer(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{section}.{key}: should be an integer, got {value!r}")
    return int(value)


def _build(section, factory, *args, **kwargs):
    """
    Calls a validating constructor and turns its ValueError, whose message
    starts with the field name, into a ConfigError on the flat key.
    """
    try:
        return factory(*args, **kwargs)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{section}.{e}")
