from fbsir.errors import *
from fbsir.model import (
    InitialData,
    ModelParams,
    Profile,
    ThresholdReport,
    build_supersolution,
    compute_r0,
    integrate_ode,
    thresholds,
)
from fbsir.eigen import EigenQuery, critical_radius, lambda1
from fbsir.frontfix import GridSpec, SimState
from fbsir.solver import TimeStepConfig, run, run_fixed_domain
from fbsir.analysis import classify, sweep_critical_h0, sweep_parameter
from fbsir.config import ScenarioConfig, load_scenario
from fbsir.writer import Writer

__version__ = "0.1.0"
