#!/usr/bin/env python3
from __future__ import annotations

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

from .constants import YEAR_DAYS


class ViolationKind(StrEnum):
    WINDOW = "window"
    LAUNCH_VINF = "launch_vinf"
    RENDEZVOUS_POS = "rendezvous_pos"
    RENDEZVOUS_VEL = "rendezvous_vel"
    MASS_DISCONTINUITY = "mass_discontinuity"
    PROPAGATION_RESIDUAL = "propagation_residual"
    GA_MAGNITUDE = "ga_magnitude"
    GA_DEFLECTION = "ga_deflection"
    SOLAR_DISTANCE = "solar_distance"
    THRUST_MAGNITUDE = "thrust_magnitude"
    MINING_DURATION = "mining_duration"
    MINING_CAP = "mining_cap"
    MINER_COUNT = "miner_count"
    INITIAL_MASS = "initial_mass"
    DRY_MASS_FLOOR = "dry_mass_floor"
    FLEET_SIZE = "fleet_size"
    STRUCTURAL = "structural"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    ship_id: Optional[int]
    epoch: Optional[float]
    measured: float
    limit: float
    message: str

    def __str__(self) -> str:
        ship = f"ship {self.ship_id}" if self.ship_id is not None else "solution"
        epoch = f" @ {self.epoch:.6f}" if self.epoch is not None else ""
        return f"[{self.kind}] {ship}{epoch}: {self.message}"


# -----------------------------------------------------------------------------
# Mining ledger
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class Visit:
    epoch: float
    ship_id: int
    mass: float = 0.0
    line_no: int = field(default=0, compare=False)


@dataclass
class MiningRecord:
    asteroid_id: int
    deploys: List[Visit] = field(default_factory=list)
    retrieves: List[Visit] = field(default_factory=list)
    unloads: List[Visit] = field(default_factory=list)

    @property
    def deploy(self) -> Optional[Visit]:
        return self.deploys[0] if self.deploys else None

    @property
    def retrieve(self) -> Optional[Visit]:
        return self.retrieves[0] if self.retrieves else None

    @property
    def unloaded(self) -> bool:
        return bool(self.unloads)

    @property
    def collected_mass(self) -> float:
        return self.retrieve.mass if self.retrieve else 0.0

    @property
    def stay_years(self) -> Optional[float]:
        if self.deploy is None or self.retrieve is None:
            return None
        return (self.retrieve.epoch - self.deploy.epoch) / YEAR_DAYS


class MiningLedger:
    """Deploy, retrieve and unload visits per asteroid, across ships."""

    def __init__(self) -> None:
        self._records: Dict[int, MiningRecord] = {}

    def _record(self, asteroid_id: int) -> MiningRecord:
        if asteroid_id not in self._records:
            self._records[asteroid_id] = MiningRecord(asteroid_id)
        return self._records[asteroid_id]

    def record_deploy(self, asteroid_id: int, epoch: float, ship_id: int, line_no: int = 0) -> None:
        self._record(asteroid_id).deploys.append(Visit(epoch, ship_id, 0.0, line_no))

    def record_retrieve(self, asteroid_id: int, epoch: float, ship_id: int, mass: float, line_no: int = 0) -> None:
        self._record(asteroid_id).retrieves.append(Visit(epoch, ship_id, mass, line_no))

    def record_unload(self, asteroid_ids: Iterable[int], epoch: float, ship_id: int, line_no: int = 0) -> None:
        for asteroid_id in asteroid_ids:
            record = self._record(asteroid_id)
            record.unloads.append(Visit(epoch, ship_id, record.collected_mass, line_no))

    def merge(self, other: "MiningLedger") -> None:
        for asteroid_id, theirs in other._records.items():
            ours = self._record(asteroid_id)
            ours.deploys.extend(theirs.deploys)
            ours.retrieves.extend(theirs.retrieves)
            ours.unloads.extend(theirs.unloads)

    def get(self, asteroid_id: int) -> Optional[MiningRecord]:
        return self._records.get(asteroid_id)

    @property
    def records(self) -> List[MiningRecord]:
        return [self._records[key] for key in sorted(self._records)]

    @property
    def total_retrieved(self) -> float:
        return sum(record.collected_mass for record in self.records)

    @property
    def total_unloaded(self) -> float:
        return sum(record.collected_mass for record in self.records if record.unloaded)

    def __len__(self) -> int:
        return len(self._records)

    def resolve(self, min_stay_years: float) -> List[Violation]:
        """Single-mining and minimum-stay rules over the merged ledger."""
        violations = []
        for record in self.records:
            name = f"asteroid {record.asteroid_id}"
            if len(record.deploys) > 1:
                second = record.deploys[1]
                violations.append(
                    Violation(ViolationKind.STRUCTURAL, second.ship_id, second.epoch, len(record.deploys), 1,
                              f"{name} received {len(record.deploys)} miners, at most 1 allowed")
                )
            if len(record.retrieves) > 1:
                second = record.retrieves[1]
                violations.append(
                    Violation(ViolationKind.STRUCTURAL, second.ship_id, second.epoch, len(record.retrieves), 1,
                              f"{name} mined {len(record.retrieves)} times, at most 1 allowed")
                )

            retrieve, deploy = record.retrieve, record.deploy
            if retrieve is None:
                continue
            if deploy is None:
                violations.append(
                    Violation(ViolationKind.STRUCTURAL, retrieve.ship_id, retrieve.epoch, retrieve.mass, 0.0,
                              f"{name} retrieved without a deployed miner")
                )
            elif retrieve.epoch < deploy.epoch:
                violations.append(
                    Violation(ViolationKind.STRUCTURAL, retrieve.ship_id, retrieve.epoch, retrieve.epoch, deploy.epoch,
                              f"{name} retrieved before its miner was deployed")
                )
            elif record.stay_years < min_stay_years:
                violations.append(
                    Violation(ViolationKind.MINING_DURATION, retrieve.ship_id, retrieve.epoch, record.stay_years,
                              min_stay_years, f"{name} stay {record.stay_years:.6f} yr < {min_stay_years} yr")
                )
        return violations
