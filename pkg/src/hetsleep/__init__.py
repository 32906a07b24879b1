"""Small-cell sleeping for minimum total power in a two-tier HetNet."""

from hetsleep.errors import (
    BracketError,
    ContractViolation,
    DegenerateLoad,
    InfeasibleScenario,
    ParseError,
    TooLarge,
    ValidationError,
)
from hetsleep.power_model import Evaluation, OperationMode, evaluate
from hetsleep.scenario import (
    ChannelParams,
    PowerParams,
    QosParams,
    Scenario,
    is_uniform,
    load_scenario,
    save_scenario,
    sbs_distances,
)

__version__ = "0.1.0"

__all__ = [
    "BracketError",
    "ChannelParams",
    "ContractViolation",
    "DegenerateLoad",
    "Evaluation",
    "InfeasibleScenario",
    "OperationMode",
    "ParseError",
    "PowerParams",
    "QosParams",
    "Scenario",
    "TooLarge",
    "ValidationError",
    "evaluate",
    "is_uniform",
    "load_scenario",
    "save_scenario",
    "sbs_distances",
]
