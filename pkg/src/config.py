import os
import logging
from typing import Dict, Any
from dotenv import load_dotenv

load_dotenv()
logger = logging.getLogger(__name__)

DEFAULT_GAMMA_CONST = 0.05
DEFAULT_THREADS = 1
DEFAULT_LOG_LEVEL = 'INFO'
DEFAULT_EMBED_CM = 4.0


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == '':
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Ignoring non-numeric {name}={raw!r}, using {default}")
        return default


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == '':
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


def load_settings() -> Dict[str, Any]:
    """Defaults for the CLI, overridable through the environment or a .env file."""
    return {
        'gamma_const': _env_float('KZCORESET_GAMMA_CONST', DEFAULT_GAMMA_CONST),
        'threads': max(1, _env_int('KZCORESET_THREADS', DEFAULT_THREADS)),
        'log_level': os.getenv('KZCORESET_LOG_LEVEL', DEFAULT_LOG_LEVEL).upper(),
        'embed_cm': _env_float('KZCORESET_EMBED_CM', DEFAULT_EMBED_CM),
    }
