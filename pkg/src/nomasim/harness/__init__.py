from .experiments import ExperimentError, ResultTable, run
from .output import write_csv
from .scenario import Experiment, Scenario, ScenarioError, parse_scenario

__all__ = [
    "Experiment", "ExperimentError", "ResultTable", "Scenario", "ScenarioError",
    "parse_scenario", "run", "write_csv",
]
