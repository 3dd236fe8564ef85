# common/config.py
"""Process settings read from the environment (and an optional ``.env`` file)."""

import os
from dataclasses import dataclass
from functools import lru_cache

from dotenv import load_dotenv

from services.errors import InvalidConfig
from services.hashing_service import HashMode
from services.merkle_service import TreeVariant

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class Settings:
    variant: TreeVariant = TreeVariant.TRIM
    mode: HashMode = HashMode.DOMAIN_SEPARATED
    log_level: str = "WARNING"
    bench_seed: int = 20240611
    bench_repetitions: int = 5
    bench_payload_bytes: int = 256


def _int_setting(name: str, default: int, minimum: int = 0) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise InvalidConfig(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        raise InvalidConfig(f"{name} must be >= {minimum}, got {value}")
    return value


def _choice_setting(name: str, default, parse):
    raw = os.getenv(name)
    if not raw:
        return default
    try:
        return parse(raw.strip().lower())
    except ValueError:
        raise InvalidConfig(f"{name} has an unsupported value {raw!r}")


def load_settings() -> Settings:
    load_dotenv()
    log_level = os.getenv("LOG_LEVEL", "WARNING").upper()
    if log_level not in LOG_LEVELS:
        raise InvalidConfig(f"LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {log_level!r}")
    return Settings(
        variant=_choice_setting("MERKLE_VARIANT", TreeVariant.TRIM, TreeVariant.parse),
        mode=_choice_setting("MERKLE_MODE", HashMode.DOMAIN_SEPARATED, HashMode.parse),
        log_level=log_level,
        bench_seed=_int_setting("BENCH_SEED", 20240611),
        bench_repetitions=_int_setting("BENCH_REPETITIONS", 5, minimum=3),
        bench_payload_bytes=_int_setting("BENCH_PAYLOAD_BYTES", 256),
    )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return load_settings()
