from .config import (
    ConfigError,
    ServiceConfig,
    SpeedFractions,
    config_from_dict,
    load_config,
    parse_action_table,
)
from .console import ConsoleServer
from .pipeline import AlignState, LogScenario, TeleopEngine, replay, world_hash
from .scenarios import (
    BUILTIN_SCENARIOS,
    ScenarioError,
    ScriptedScenario,
    load_scenario,
    run_scenario,
)
from .sessionlog import (
    GENESIS,
    LogError,
    SessionLog,
    TamperReport,
    audit_log,
    load_log,
    record_hash,
    verify_chain,
)
from .tasks import TaskError, TaskRun, TaskSpec, atom_holds, predicate_holds
from .textcmd import TextIntent, parse_text

__all__ = [
    "AlignState",
    "BUILTIN_SCENARIOS",
    "ConfigError",
    "ConsoleServer",
    "GENESIS",
    "LogError",
    "LogScenario",
    "ScenarioError",
    "ScriptedScenario",
    "ServiceConfig",
    "SessionLog",
    "SpeedFractions",
    "TamperReport",
    "TaskError",
    "TaskRun",
    "TaskSpec",
    "TeleopEngine",
    "TextIntent",
    "atom_holds",
    "audit_log",
    "config_from_dict",
    "load_config",
    "load_log",
    "load_scenario",
    "parse_action_table",
    "parse_text",
    "predicate_holds",
    "record_hash",
    "replay",
    "run_scenario",
    "verify_chain",
    "world_hash",
]
