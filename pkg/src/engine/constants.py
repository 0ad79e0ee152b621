#!/usr/bin/env python3
from pathlib import Path
from functools import lru_cache
from typing import Any, Dict

import yaml

CONSTANTS_FILE = Path(__file__).resolve().parent.parent / "config" / "constants.yaml"


@lru_cache(maxsize=1)
def load_constants(path: str = str(CONSTANTS_FILE)) -> Dict[str, Any]:
    """Read the constants table once; callers must treat it as read-only."""
    with open(path, "r", encoding="utf-8") as file:
        return yaml.safe_load(file)


_table = load_constants()

# Sun (km, s, km^3/s^2) and calendar
MU_SUN: float = float(_table["sun"]["mu"])
G0: float = float(_table["sun"]["g0"])
AU: float = float(_table["sun"]["au"])
DAY: float = float(_table["sun"]["day"])
YEAR_DAYS: float = float(_table["sun"]["year"])

# Mission window and global limits
MISSION_START_MJD: float = float(_table["mission"]["start_mjd"])
MISSION_END_MJD: float = float(_table["mission"]["end_mjd"])
MIN_SUN_DISTANCE: float = float(_table["mission"]["min_sun_distance_au"]) * AU
MAX_VINF: float = float(_table["mission"]["max_vinf"])

TWO_PI: float = 6.283185307179586


def in_mission_window(mjd: float) -> bool:
    return MISSION_START_MJD <= mjd <= MISSION_END_MJD


def section(name: str) -> Dict[str, Any]:
    return _table[name]
