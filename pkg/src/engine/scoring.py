#!/usr/bin/env python3
from __future__ import annotations

import math
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from dataclasses import dataclass
from typing import Tuple

from .constants import section
from .ledger import MiningLedger
from .exceptions import InfeasibleStayError


class BonusMode(StrEnum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class MiningRule:
    rate_k: float = 10.0  # kg/yr
    min_stay: float = 1.0  # yr


@dataclass(frozen=True)
class BonusModel:
    mode: BonusMode = BonusMode.STATIC
    beta: float = 0.05
    gamma: float = -0.1
    b0: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", BonusMode(self.mode))


@dataclass(frozen=True)
class FleetRule:
    rho: float = 0.004  # 1/kg
    hard_cap: int = 100


MINING_RULE = MiningRule(**section("mining"))
BONUS_MODEL = BonusModel(**section("bonus"))
FLEET_RULE = FleetRule(**section("fleet"))


@dataclass(frozen=True)
class AsteroidScore:
    asteroid_id: int
    collected: float
    cap: float
    bonus: float
    contribution: float
    unloaded: bool


@dataclass(frozen=True)
class ScoreBreakdown:
    per_asteroid: Tuple[AsteroidScore, ...]
    total_j: float
    ship_count: int
    max_ships_allowed: int
    fleet_ok: bool
    average_mass: float
    cap_breaches: Tuple[AsteroidScore, ...] = ()


def mining_cap(stay: float, rule: MiningRule = MINING_RULE) -> float:
    """Largest mass (kg) a miner can collect in a stay of `stay` years."""
    if stay < 0.0:
        raise ValueError(f"stay must be non-negative, got {stay}")
    if stay < rule.min_stay:
        raise InfeasibleStayError(stay, rule.min_stay)
    return rule.rate_k * stay


def bonus(model: BonusModel, total_mined: float) -> float:
    if total_mined < 0.0:
        raise ValueError(f"total mined mass must be non-negative, got {total_mined}")
    if model.mode is BonusMode.STATIC:
        return model.b0
    return (1.0 + 2.0 * (1.0 + model.beta * total_mined) ** model.gamma) / 3.0


def max_ship_count(avg_mass: float, rule: FleetRule = FLEET_RULE) -> int:
    """floor(min(hard_cap, 2 exp(rho * avg_mass)))"""
    if avg_mass < 0.0:
        raise ValueError(f"average mass must be non-negative, got {avg_mass}")
    exponent = rule.rho * avg_mass
    if exponent >= math.log(rule.hard_cap / 2.0):
        return rule.hard_cap
    return math.floor(min(rule.hard_cap, 2.0 * math.exp(exponent)))


def score(
    ledger: MiningLedger,
    model: BonusModel = BONUS_MODEL,
    rule: FleetRule = FLEET_RULE,
    ship_count: int = 0,
    mining: MiningRule = MINING_RULE,
    cap_slack: float = 0.0,
) -> ScoreBreakdown:
    """
    Merit of a resolved ledger.

    Only asteroids whose collected mass was both retrieved and unloaded at
    Earth contribute. Masses above the mining cap are reported in
    cap_breaches and still counted.
    """
    retrieved = [record for record in ledger.records if record.retrieve is not None]
    raw_total = sum(record.collected_mass for record in retrieved if record.unloaded)
    factor = bonus(model, raw_total)

    per_asteroid = []
    for record in retrieved:
        stay = record.stay_years
        try:
            cap = mining_cap(stay, mining) if stay is not None else 0.0
        except (InfeasibleStayError, ValueError):
            cap = 0.0
        contribution = factor * record.collected_mass if record.unloaded else 0.0
        per_asteroid.append(
            AsteroidScore(record.asteroid_id, record.collected_mass, cap, factor, contribution, record.unloaded)
        )

    average = raw_total / ship_count if ship_count > 0 else 0.0
    max_ships = max_ship_count(average, rule)
    return ScoreBreakdown(
        per_asteroid=tuple(per_asteroid),
        total_j=sum(entry.contribution for entry in per_asteroid),
        ship_count=ship_count,
        max_ships_allowed=max_ships,
        fleet_ok=ship_count <= max_ships,
        average_mass=average,
        cap_breaches=tuple(entry for entry in per_asteroid if entry.collected > entry.cap + cap_slack),
    )
