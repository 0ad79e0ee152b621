#!/usr/bin/env python3
from dataclasses import asdict
from typing import List, Optional

from pydantic import BaseModel, Field

from src.engine.ledger import Violation
from src.engine.scoring import AsteroidScore, ScoreBreakdown


class ViolationModel(BaseModel):
    kind: str
    ship: Optional[int] = None
    epoch: Optional[float] = None
    measured: float
    limit: float
    message: str

    @classmethod
    def from_violation(cls, violation: Violation) -> "ViolationModel":
        return cls(
            kind=str(violation.kind),
            ship=violation.ship_id,
            epoch=violation.epoch,
            measured=float(violation.measured),
            limit=float(violation.limit),
            message=violation.message,
        )


class AsteroidScoreModel(BaseModel):
    asteroid_id: int
    collected: float
    cap: float
    bonus: float
    contribution: float
    unloaded: bool

    @classmethod
    def from_score(cls, entry: AsteroidScore) -> "AsteroidScoreModel":
        return cls(**asdict(entry))


class ScoreModel(BaseModel):
    total_j: float
    ship_count: int
    max_ships_allowed: int
    fleet_ok: bool
    average_mass: float
    per_asteroid: List[AsteroidScoreModel] = []

    @classmethod
    def from_breakdown(cls, breakdown: ScoreBreakdown) -> "ScoreModel":
        return cls(
            total_j=breakdown.total_j,
            ship_count=breakdown.ship_count,
            max_ships_allowed=breakdown.max_ships_allowed,
            fleet_ok=breakdown.fleet_ok,
            average_mass=breakdown.average_mass,
            per_asteroid=[AsteroidScoreModel.from_score(entry) for entry in breakdown.per_asteroid],
        )


class ValidateResponse(BaseModel):
    valid: bool
    score: float = 0.0
    ship_count: int = 0
    max_ships_allowed: int = 0
    violations: List[ViolationModel] = Field(default_factory=list)
    message: str


class ErrorResponse(BaseModel):
    valid: bool = False
    message: str
