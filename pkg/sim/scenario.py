"""
Scenario scripts
Loading, validating and running seeded scripted scenarios
"""

import logging
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Union

import orjson
from jsonschema import Draft7Validator
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from agents.base import ScriptLine
from arbiter.resolver import PriorityConfig
from authority.manifold import AuthoritySettings
from config import Config, Modes
from contracts.projections import ContractSettings
from errors import DomainError, InvalidInputError
from sim.environment import ScriptedEnvironment
from sim.faults import FaultInjector
from sim.report import ExperimentReport
from state.models import Event, Fault
from workflows.scheduler import TRIGGERS, RuntimeSettings
from workflows.step import CoordinationRuntime

logger = logging.getLogger(__name__)


class ScenarioScript(BaseModel):
    """A seeded run: layer scripts, scheduled faults and context events"""

    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    seed: int = Field(default_factory=lambda: Config.DEFAULT_SEED)
    horizon: int = Field(ge=1)
    n_layers: int = Field(default=4, ge=1)
    state_dim: int = Field(default=4, ge=1)
    policy_scripts: Dict[int, List[ScriptLine]] = Field(default_factory=dict)
    fault_plan: List[Fault] = Field(default_factory=list)
    events: List[Event] = Field(default_factory=list)

    @model_validator(mode="after")
    def _within_run(self):
        for layer, lines in self.policy_scripts.items():
            if not 1 <= layer <= self.n_layers:
                raise ValueError(f"script for layer {layer} outside 1..{self.n_layers}")
            for line in lines:
                if line.step > self.horizon:
                    raise ValueError(f"script line for layer {layer} at step {line.step} beyond horizon {self.horizon}")
        for fault in self.fault_plan:
            if fault.step > self.horizon:
                raise ValueError(f"fault at step {fault.step} beyond horizon {self.horizon}")
            if fault.layer > self.n_layers:
                raise ValueError(f"fault at layer {fault.layer} outside 1..{self.n_layers}")
        for event in self.events:
            if event.step > self.horizon:
                raise ValueError(f"event at step {event.step} beyond horizon {self.horizon}")
            if event.trigger not in TRIGGERS:
                raise ValueError(f"unknown trigger '{event.trigger}'")
        return self


@lru_cache(maxsize=1)
def scenario_validator() -> Draft7Validator:
    schema = Config.load_schema("scenario")
    Draft7Validator.check_schema(schema)
    return Draft7Validator(schema)


def parse_scenario(data: Union[bytes, str, dict]) -> ScenarioScript:
    """
    Decode and validate a scenario document.

    Raises:
        InvalidInputError: Malformed text, schema violations or inconsistent content
    """
    if not isinstance(data, dict):
        try:
            data = orjson.loads(data)
        except orjson.JSONDecodeError as e:
            raise InvalidInputError(f"Scenario is not valid JSON at offset {e.pos}: {e.msg}") from e

    errors = sorted(scenario_validator().iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        problems = "; ".join(f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors[:5])
        raise InvalidInputError(f"Scenario violates schema: {problems}")
    try:
        return ScenarioScript.model_validate(data)
    except ValidationError as e:
        raise InvalidInputError(f"Invalid scenario: {e.errors()[0]['msg']}") from e


def load_scenario(path: Union[str, Path]) -> ScenarioScript:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise InvalidInputError(f"Cannot read scenario {path}: {e}") from e
    script = parse_scenario(data)
    if script.name == "scenario":
        script = script.model_copy(update={"name": path.stem})
    return script


def normalize_mode(mode: str) -> str:
    """Accept the command-line spelling single-scale"""
    mode = mode.replace("-", "_")
    if mode not in Modes.ALL:
        raise DomainError(f"Unknown mode '{mode}', expected one of {Modes.ALL}")
    return mode


def run_scenario(script: ScenarioScript,
                 mode: str = Modes.CTHA,
                 settings: Optional[RuntimeSettings] = None,
                 *,
                 priority: Optional[PriorityConfig] = None,
                 authority: Optional[AuthoritySettings] = None,
                 contracts: Optional[ContractSettings] = None) -> ExperimentReport:
    """
    Execute a scenario for its full horizon.

    Identical (script, mode, settings) give byte-identical reports.
    """
    base = settings or Config.load_runtime()
    settings = base.model_copy(update={
        "mode": normalize_mode(mode),
        "n_layers": script.n_layers,
        "state_dim": script.state_dim,
    })
    runtime = CoordinationRuntime(
        settings,
        env=ScriptedEnvironment(seed=script.seed, dim=script.state_dim),
        scripts=script.policy_scripts,
        priority=priority or Config.load_priority(),
        authority=authority or Config.load_authority(),
        contracts=contracts or Config.load_contracts(),
        injector=FaultInjector(script.fault_plan),
        events=script.events,
    )
    logger.info(f"Running scenario '{script.name}' in {settings.mode} mode for {script.horizon} steps")
    traces = runtime.run(script.horizon)
    return ExperimentReport.from_traces(script.name, settings.mode, script.seed, traces)


__all__ = ["ScenarioScript", "load_scenario", "normalize_mode", "parse_scenario", "run_scenario"]
