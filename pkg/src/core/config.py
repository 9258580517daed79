"""
Config - Caps and Defaults
Read from the environment (and .env via python-dotenv); CLI flags override
"""
import os
from dataclasses import dataclass, fields, replace
from typing import Any, Dict

from dotenv import load_dotenv


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


@dataclass(frozen=True)
class FAQConfig:
    linex_limit: int = 1_000_000
    brute_force_limit: int = 10_000_000
    fhtw_exact_cap: int = 14
    lp_variable_cap: int = 64
    independent_set_cap: int = 20
    sat_brute_cap: int = 24
    exact_linex_threshold: int = 5000
    log_level: str = "WARNING"

    # env var name per field (single source of truth)
    ENV_NAMES = {
        "linex_limit": "FAQ_LINEX_LIMIT",
        "brute_force_limit": "FAQ_BRUTE_FORCE_LIMIT",
        "fhtw_exact_cap": "FAQ_FHTW_EXACT_CAP",
        "lp_variable_cap": "FAQ_LP_VARIABLE_CAP",
        "independent_set_cap": "FAQ_INDEPENDENT_SET_CAP",
        "sat_brute_cap": "FAQ_SAT_BRUTE_CAP",
        "exact_linex_threshold": "FAQ_EXACT_LINEX_THRESHOLD",
    }

    @classmethod
    def from_env(cls, dotenv: bool = True) -> "FAQConfig":
        if dotenv:
            load_dotenv()
        values: Dict[str, Any] = {}
        for name, env_name in cls.ENV_NAMES.items():
            values[name] = _env_int(env_name, getattr(cls, name))
        values["log_level"] = os.getenv("FAQ_LOG_LEVEL", cls.log_level).upper()
        return cls(**values)

    def override(self, **kwargs) -> "FAQConfig":
        """Apply CLI flags; None means 'not given'."""
        known = {f.name for f in fields(self)}
        given = {k: v for k, v in kwargs.items() if v is not None and k in known}
        return replace(self, **given)


DEFAULT_CONFIG = FAQConfig()
