from __future__ import annotations

from dotenv import load_dotenv, find_dotenv
load_dotenv(find_dotenv(), override=False)  # load .env before any env access

import os
from typing import Any, Dict

import yaml


def _yaml_overrides() -> Dict[str, Any]:
    path = os.getenv("CPTP_CONFIG", "")
    if not path or not os.path.exists(path):
        return {}
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        return {}
    return {str(k).upper(): v for k, v in data.items()}


class Settings:
    """
    Runtime knobs for the oracles and the brute-force solvers.
    Environment variables win; an optional YAML file named by CPTP_CONFIG supplies defaults.
    """

    def __init__(self) -> None:
        y = _yaml_overrides()

        def pick(name: str, default: Any) -> str:
            return os.getenv(name, str(y.get(name, y.get(name[5:], default))))

        self.CPTP_THREADS: int = max(1, int(pick("CPTP_THREADS", os.cpu_count() or 1)))
        self.CPTP_TOL: float = float(pick("CPTP_TOL", 1e-8))
        self.CPTP_DEPTH: int = int(pick("CPTP_DEPTH", 4))
        self.CPTP_RESOLUTION: int = int(pick("CPTP_RESOLUTION", 32))
        self.CPTP_MAX_LATTICE: int = int(pick("CPTP_MAX_LATTICE", 2_000_000))
        self.CPTP_MAX_GRID: int = int(pick("CPTP_MAX_GRID", 2_000_000))
        self.CPTP_VERTEX_CAP: int = int(pick("CPTP_VERTEX_CAP", 12))
        self.CPTP_SEED: int = int(pick("CPTP_SEED", 0))
        self.CPTP_DEBUG: bool = pick("CPTP_DEBUG", "0") == "1"


settings = Settings()
