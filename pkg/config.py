"""
Configuration module for the coordination runtime
Handles environment variables, logging and the structured JSON configs
"""

import os
import logging
from pathlib import Path
from dotenv import load_dotenv
from typing import Any, Dict, Optional

import orjson

# Load environment variables
env_path = Path(__file__).parent / '.env'
load_dotenv(env_path)

_handlers = [logging.StreamHandler()]
if os.getenv('CTHA_LOG_FILE'):
    _handlers.append(logging.FileHandler(os.getenv('CTHA_LOG_FILE')))

# Configure logging
logging.basicConfig(
    level=getattr(logging, os.getenv('CTHA_LOG_LEVEL', 'INFO').upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=_handlers
)

logger = logging.getLogger(__name__)


class Config:
    """Application configuration class"""

    # Application Settings
    APP_ENV: str = os.getenv('CTHA_ENV', 'development')
    APP_PORT: int = int(os.getenv('APP_PORT', '8000'))
    APP_HOST: str = os.getenv('APP_HOST', '0.0.0.0')

    # Numerics
    PROJECTION_TOL: float = float(os.getenv('CTHA_PROJECTION_TOL', '1e-9'))
    PROJECTION_MAX_ITER: int = int(os.getenv('CTHA_PROJECTION_MAX_ITER', '1000'))

    # Experiments
    DEFAULT_SEED: int = int(os.getenv('CTHA_DEFAULT_SEED', '42'))
    FUZZ_CASES: int = int(os.getenv('CTHA_FUZZ_CASES', '100000'))
    GAIN_CHUNK_ENTRIES: int = int(os.getenv('CTHA_GAIN_CHUNK_ENTRIES', '4000000'))
    GAIN_MAX_ENTRIES: int = int(os.getenv('CTHA_GAIN_MAX_ENTRIES', '50000000'))

    # Directory Paths
    BASE_DIR: Path = Path(__file__).parent
    CONFIG_DIR: Path = Path(os.getenv('CTHA_CONFIG_DIR', str(BASE_DIR / 'config')))
    SCHEMA_DIR: Path = Path(os.getenv('CTHA_SCHEMA_DIR', str(BASE_DIR / 'schemas')))
    SAMPLES_DIR: Path = BASE_DIR / 'samples'

    @classmethod
    def validate(cls) -> bool:
        """Validate that configuration and schema directories are usable"""
        missing = []
        for name, path in {'CONFIG_DIR': cls.CONFIG_DIR, 'SCHEMA_DIR': cls.SCHEMA_DIR}.items():
            if not path.is_dir():
                missing.append(f"{name}={path}")

        if missing:
            logger.error(f"Missing configuration directories: {', '.join(missing)}")
            return False

        for kind in MessageKinds.ALL:
            if not (cls.SCHEMA_DIR / f"{kind}.json").is_file():
                logger.error(f"Missing wire schema for {kind}")
                return False

        logger.info("Configuration validated successfully")
        return True

    @classmethod
    def read_json(cls, path: Path) -> Optional[Dict[str, Any]]:
        """Read a JSON document, returning None when the file is absent"""
        if not path.is_file():
            logger.warning(f"Config file {path} not found, using defaults")
            return None
        return orjson.loads(path.read_bytes())

    @classmethod
    def load_schema(cls, kind: str) -> Dict[str, Any]:
        """Load one of the shipped draft-07 schemas"""
        path = cls.SCHEMA_DIR / f"{kind}.json"
        data = cls.read_json(path)
        if data is None:
            raise FileNotFoundError(f"Schema {path} not found")
        return data

    @classmethod
    def load_authority(cls, path: Optional[Path] = None):
        """Load manifold tables and downgrade maps"""
        from authority.manifold import AuthoritySettings

        data = cls.read_json(path or cls.CONFIG_DIR / 'authority.json')
        return AuthoritySettings.model_validate(data) if data else AuthoritySettings()

    @classmethod
    def load_priority(cls, path: Optional[Path] = None):
        """Load the arbiter priority configuration"""
        from arbiter.resolver import PriorityConfig

        data = cls.read_json(path or cls.CONFIG_DIR / 'arbiter.json')
        return PriorityConfig.model_validate(data) if data else PriorityConfig()

    @classmethod
    def load_runtime(cls, path: Optional[Path] = None):
        """Load mode, activation and routing settings"""
        from workflows.scheduler import RuntimeSettings

        data = cls.read_json(path or cls.CONFIG_DIR / 'runtime.json')
        return RuntimeSettings.model_validate(data) if data else RuntimeSettings()

    @classmethod
    def load_contracts(cls, path: Optional[Path] = None):
        """Load forbidden patterns and per-layer field whitelists"""
        from contracts.projections import ContractSettings

        data = cls.read_json(path or cls.CONFIG_DIR / 'contracts.json')
        return ContractSettings.model_validate(data) if data else ContractSettings()


# Execution modes
class Modes:
    CTHA = "ctha"
    UNCONSTRAINED = "unconstrained"
    SINGLE_SCALE = "single_scale"
    ALL = (CTHA, UNCONSTRAINED, SINGLE_SCALE)


# Layer names, fastest first
class LayerNames:
    REFLEX = "reflex"
    TACTICAL = "tactical"
    STRATEGIC = "strategic"
    INSTITUTIONAL = "institutional"
    META = "meta"


# Message kinds
class MessageKinds:
    SUMMARY = "summary"
    PLAN = "plan"
    POLICY = "policy"
    ALL = (SUMMARY, PLAN, POLICY)


# Activation triggers
class TriggerNames:
    GOAL_COMPLETION = "goal_completion"
    ANOMALY = "anomaly"
    SESSION_BOUNDARY = "session_boundary"
    EMERGENCY = "emergency"


# Fault kinds injected by scenarios
class FaultKinds:
    PERTURB = "perturb"
    INVALID_MESSAGE = "invalid_message"
    AUTHORITY_OVERREACH = "authority_overreach"
    CONFLICT_PAIR = "conflict_pair"


# Initialize configuration
config = Config()

logger.debug(f"Configuration loaded in {config.APP_ENV} mode")
