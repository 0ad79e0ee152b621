#!/usr/bin/env python3
"""
Valid-by-construction solution files.

Every line is written from the same propagation the verifier runs, so a
synthesized file replays with zero residuals. Mining ships fly ballistic
orbits with Earth's period; an asteroid on the ship's own orbit stays
co-located with it, and the ship is back at Earth two years after launch.
"""
from __future__ import annotations

import math
import logging
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.engine.state import StateVector
from src.engine.constants import DAY, MISSION_START_MJD, MU_SUN
from src.engine.exceptions import SolutionFormatError, SynthesisError
from src.engine.catalog import (
    MAX_ASTEROID_ID,
    PLANETS,
    AsteroidCatalog,
    Planet,
    body_state,
    reference_to_epoch,
    state_to_elements,
)
from src.engine.propagation import DEFAULT_INTEGRATOR, IntegratorConfig, ThrustProfile, fly, integrate_thrust_arc
from src.engine.scoring import FLEET_RULE, MINING_RULE, FleetRule, max_ship_count
from src.engine.solution import (
    BURN_EVENT,
    LAUNCH_EVENT,
    BurnRecord,
    EventLine,
    SolutionDocument,
    StateRecord,
    format_line,
    parse_solution,
)
from src.engine.verifier import MASS_MODEL, TOLERANCES, ToleranceSet

logger = logging.getLogger("gtoc12")

MATCH_FRACTION = 0.5  # of each tolerance, for rendezvous target search
LAUNCH_WINDOW_DAYS = 2000.0


class ThrustDirection(StrEnum):
    RANDOM = "random"
    TANGENTIAL = "tangential"


class PerturbationKind(StrEnum):
    POSITION = "position"
    VELOCITY = "velocity"
    MASS = "mass"


@dataclass(frozen=True)
class ThrustProgram:
    """Burn arcs held at a fixed magnitude; direction constant over each block of segment_days."""

    burn_days: float = 30.0
    coast_days: float = 20.0
    thrust: float = 0.5  # N
    segment_days: int = 10
    direction: ThrustDirection = ThrustDirection.RANDOM

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", ThrustDirection(self.direction))


@dataclass(frozen=True)
class SynthesisSpec:
    ships: int = 1
    burns_per_leg: int = 0
    seed: int = 0
    thrust_program: ThrustProgram = field(default_factory=ThrustProgram)
    mining: int = 0
    enforce_fleet_cap: bool = True
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR


@dataclass(frozen=True)
class _ShipPlan:
    ship_id: int
    kind: str
    launch_epoch: float
    initial_mass: float
    v_inf: np.ndarray
    directions: Tuple[np.ndarray, ...] = ()
    deploy_offset: float = 0.0
    stay_days: float = 0.0


# -----------------------------------------------------------------------------
# Planning
# -----------------------------------------------------------------------------
def _unit(rng: np.random.Generator) -> np.ndarray:
    vector = rng.normal(size=3)
    return vector / np.linalg.norm(vector)


def _same_energy_v_inf(earth: StateVector, speed: float, rng: np.random.Generator) -> np.ndarray:
    """v-infinity of the given size that keeps |v| equal to Earth's, hence Earth's period."""
    along = earth.v / np.linalg.norm(earth.v)
    normal = np.cross(earth.r, earth.v)
    normal /= np.linalg.norm(normal)
    radial = np.cross(along, normal)
    mix = rng.uniform(0.3, 1.0)
    perpendicular = mix * normal + math.sqrt(1.0 - mix * mix) * radial * rng.choice([-1.0, 1.0])
    ratio = speed / (2.0 * np.linalg.norm(earth.v))
    return speed * (-ratio * along + math.sqrt(1.0 - ratio * ratio) * perpendicular)


def _plan(spec: SynthesisSpec) -> List[_ShipPlan]:
    if spec.ships < 1:
        raise SynthesisError("Need at least one ship")
    if not 0 <= spec.mining <= spec.ships:
        raise SynthesisError(f"Mining ships ({spec.mining}) must be between 0 and the ship count ({spec.ships})")

    rng = np.random.default_rng(spec.seed)
    program = spec.thrust_program
    blocks = max(1, math.ceil(program.burn_days / program.segment_days))
    plans = []
    for index in range(spec.ships):
        ship_id = index + 1
        launch_epoch = MISSION_START_MJD + rng.uniform(0.0, LAUNCH_WINDOW_DAYS)
        if index < spec.mining:
            earth = body_state(Planet.EARTH, launch_epoch)
            plans.append(
                _ShipPlan(
                    ship_id,
                    "mining",
                    launch_epoch,
                    rng.uniform(800.0, 3000.0),
                    _same_energy_v_inf(earth, rng.uniform(2.0, 4.0), rng),
                    deploy_offset=rng.uniform(30.0, 60.0),
                    stay_days=rng.uniform(1.05, 1.5) * MINING_RULE.min_stay * 365.25,
                )
            )
        elif spec.burns_per_leg > 0:
            directions = tuple(_unit(rng) for _ in range(spec.burns_per_leg * blocks))
            plans.append(
                _ShipPlan(ship_id, "burn", launch_epoch, rng.uniform(1500.0, 3000.0), _unit(rng) * rng.uniform(1.0, 5.0), directions)
            )
        else:
            plans.append(
                _ShipPlan(ship_id, "launch", launch_epoch, rng.uniform(1500.0, 3000.0), _unit(rng) * rng.uniform(1.0, 5.0))
            )
    return plans


def _launch_lines(plan: _ShipPlan) -> Tuple[EventLine, EventLine, StateVector]:
    earth = body_state(Planet.EARTH, plan.launch_epoch)
    departed = StateVector(earth.r, earth.v + plan.v_inf, plan.launch_epoch, plan.initial_mass)
    pre = _state_line(plan.ship_id, LAUNCH_EVENT, earth.with_mass(plan.initial_mass))
    post = _state_line(plan.ship_id, LAUNCH_EVENT, departed)
    return pre, post, departed


def _earth_period_days() -> float:
    return PLANETS[Planet.EARTH].elements.period(MU_SUN) / DAY


def _deploy_state(plan: _ShipPlan, spec: SynthesisSpec) -> StateVector:
    _, _, departed = _launch_lines(plan)
    return fly(departed, [], plan.launch_epoch + plan.deploy_offset, spec.integrator).state


# -----------------------------------------------------------------------------
# Lines
# -----------------------------------------------------------------------------
def _state_line(ship_id: int, event_id: int, state: StateVector) -> EventLine:
    record = StateRecord(
        float(state.t),
        tuple(float(x) for x in state.r),
        tuple(float(x) for x in state.v),
        float(state.m),
    )
    return EventLine(ship_id, event_id, record)


def _burn_line(ship_id: int, t: float, thrust: Sequence[float]) -> EventLine:
    return EventLine(ship_id, BURN_EVENT, BurnRecord(float(t), tuple(float(x) for x in thrust)))


def _burn_profile(start: float, state: StateVector, program: ThrustProgram, directions: Sequence[np.ndarray]) -> ThrustProfile:
    offsets = list(np.arange(0.0, math.floor(program.burn_days) + 1.0))
    if program.burn_days - offsets[-1] > 1e-6:
        offsets.append(program.burn_days)
    if len(offsets) < 2:
        raise SynthesisError("Burn arcs need at least one day of thrust")

    samples = []
    for offset in offsets:
        if program.direction is ThrustDirection.TANGENTIAL:
            direction = state.v / np.linalg.norm(state.v)
        else:
            direction = directions[min(int(offset // program.segment_days), len(directions) - 1)]
        samples.append((start + offset, program.thrust * direction))
    return ThrustProfile.from_samples(samples)


# -----------------------------------------------------------------------------
# Rendezvous targets
# -----------------------------------------------------------------------------
def find_rendezvous(
    catalog: AsteroidCatalog,
    state: StateVector,
    tol: ToleranceSet = TOLERANCES,
    exclude: Sequence[int] = (),
) -> Optional[int]:
    """Closest asteroid within half of each tolerance of the ship, if any."""
    ids, r, v = catalog.states_at(state.t)
    if not len(ids):
        return None
    offsets = np.linalg.norm(r - state.r, axis=1)
    speeds = np.linalg.norm(v - state.v, axis=1)
    mask = (offsets <= MATCH_FRACTION * tol.pos) & (speeds <= MATCH_FRACTION * tol.vel)
    mask &= ~np.isin(ids, np.asarray(exclude, dtype=np.int64))
    if not np.any(mask):
        return None
    candidates = np.flatnonzero(mask)
    return int(ids[candidates[np.argmin(offsets[candidates])]])


def plant_asteroids(spec: SynthesisSpec, catalog: AsteroidCatalog) -> Tuple[AsteroidCatalog, Dict[int, int]]:
    """
    Put one asteroid on each mining ship's orbit.

    Unused IDs are taken from the top down; once none are left the highest
    existing entries are replaced. Returns the new catalog and ship ID ->
    planted asteroid ID.
    """
    miners = [plan for plan in _plan(spec) if plan.kind == "mining"]
    order = sorted(range(1, MAX_ASTEROID_ID + 1), key=lambda asteroid_id: (asteroid_id in catalog, -asteroid_id))
    if len(miners) > len(order):
        raise SynthesisError(f"{len(miners)} mining ships but only {len(order)} asteroid IDs")

    planted, assigned = {}, {}
    for plan, asteroid_id in zip(miners, order):
        if asteroid_id in catalog:
            logger.warning(f"No free asteroid ID, replacing asteroid {asteroid_id} for ship {plan.ship_id}")
        elements = state_to_elements(_deploy_state(plan, spec), MU_SUN)
        planted[asteroid_id] = reference_to_epoch(elements, MISSION_START_MJD)
        assigned[plan.ship_id] = asteroid_id
    logger.info(f"Planted {len(planted)} asteroid(s) for mining ships")
    return catalog.with_asteroids(planted), assigned


# -----------------------------------------------------------------------------
# Ships
# -----------------------------------------------------------------------------
def _launch_only(plan: _ShipPlan) -> List[EventLine]:
    pre, post, _ = _launch_lines(plan)
    return [pre, post]


def _burn_ship(plan: _ShipPlan, spec: SynthesisSpec) -> List[EventLine]:
    program = spec.thrust_program
    pre, post, state = _launch_lines(plan)
    lines = [pre, post]
    blocks = len(plan.directions) // spec.burns_per_leg
    for burn in range(spec.burns_per_leg):
        start = state.t + program.coast_days
        coasted = fly(state, [], start, spec.integrator).state
        profile = _burn_profile(start, coasted, program, plan.directions[burn * blocks : (burn + 1) * blocks])
        state = integrate_thrust_arc(coasted, profile, spec.integrator).state

        lines.append(_burn_line(plan.ship_id, profile.start, (0.0, 0.0, 0.0)))
        lines.extend(_burn_line(plan.ship_id, t, thrust) for t, thrust in zip(profile.epochs, profile.thrust))
        lines.append(_burn_line(plan.ship_id, profile.end, (0.0, 0.0, 0.0)))
    return lines


def _mining_ship(
    plan: _ShipPlan,
    spec: SynthesisSpec,
    catalog: AsteroidCatalog,
    tol: ToleranceSet,
    used: List[int],
) -> Tuple[List[EventLine], float]:
    pre, post, state = _launch_lines(plan)
    lines = [pre, post]
    ship_id = plan.ship_id

    arrival = fly(state, [], plan.launch_epoch + plan.deploy_offset, spec.integrator).state
    target = find_rendezvous(catalog, arrival, tol, exclude=used)
    if target is None:
        logger.warning(f"Ship {ship_id}: {len(catalog)} asteroids searched, none within half tolerance")
        raise SynthesisError(f"No asteroid within reach of ship {ship_id} at MJD {arrival.t:.6f}")
    used.append(target)
    deployed = arrival.with_mass(arrival.m - MASS_MODEL.miner_mass)
    lines += [_state_line(ship_id, target, arrival), _state_line(ship_id, target, deployed)]

    retrieve_epoch = arrival.t + plan.stay_days
    back = fly(deployed, [], retrieve_epoch, spec.integrator).state
    asteroid = catalog.state(target, retrieve_epoch)
    if np.linalg.norm(asteroid.r - back.r) > tol.pos or np.linalg.norm(asteroid.v - back.v) > tol.vel:
        raise SynthesisError(f"Asteroid {target} drifts away from ship {ship_id} before retrieval")
    collected = 0.9 * MINING_RULE.rate_k * plan.stay_days / 365.25
    loaded = back.with_mass(back.m + collected)
    lines += [_state_line(ship_id, target, back), _state_line(ship_id, target, loaded)]

    flyby_epoch = plan.launch_epoch + 2.0 * _earth_period_days()
    home = fly(loaded, [], flyby_epoch, spec.integrator).state
    unloaded = home.with_mass(home.m - collected)
    earth = int(Planet.EARTH)
    lines += [_state_line(ship_id, earth, home), _state_line(ship_id, earth, unloaded)]
    return lines, collected


def synthesize_solution(
    spec: SynthesisSpec,
    catalog: Optional[AsteroidCatalog] = None,
    fleet: FleetRule = FLEET_RULE,
    tol: ToleranceSet = TOLERANCES,
) -> SolutionDocument:
    """
    Forward-simulate every ship and emit its lines from the simulation.

    Raises SynthesisError instead of returning a partial document.
    """
    catalog = catalog if catalog is not None else AsteroidCatalog()
    lines: List[EventLine] = []
    used: List[int] = []
    total = 0.0
    for plan in _plan(spec):
        if plan.kind == "mining":
            ship_lines, collected = _mining_ship(plan, spec, catalog, tol, used)
            total += collected
        elif plan.kind == "burn":
            ship_lines = _burn_ship(plan, spec)
        else:
            ship_lines = _launch_only(plan)
        lines += ship_lines

    allowed = max_ship_count(total / spec.ships, fleet)
    if spec.enforce_fleet_cap and spec.ships > allowed:
        raise SynthesisError(f"{spec.ships} ships exceed the fleet cap of {allowed} at {total:.3f} kg collected")

    text = "\n".join(format_line(line) for line in lines) + "\n"
    try:
        doc = parse_solution(text)
    except SolutionFormatError as error:
        raise SynthesisError(f"Synthesized file does not parse: {error}") from error
    logger.info(f"Synthesized {spec.ships} ship(s), seed {spec.seed}, {total:.3f} kg unloaded")
    return doc


# -----------------------------------------------------------------------------
# Perturbation
# -----------------------------------------------------------------------------
def perturb_solution(
    doc: SolutionDocument,
    kind: PerturbationKind,
    magnitude: float,
    seed: int = 0,
) -> SolutionDocument:
    """
    Shift the launch pre-line of one ship.

    position (km) and velocity (km/s) move along a random direction; mass (kg)
    is added. Only the launch checks read that line.
    """
    kind = PerturbationKind(kind)
    rng = np.random.default_rng(seed)
    ship = doc.ships[int(rng.integers(len(doc.ships)))]
    launch = ship.launch
    record = launch.before
    offset = tuple(float(x) for x in _unit(rng) * magnitude)

    if kind is PerturbationKind.POSITION:
        record = replace(record, r=tuple(a + b for a, b in zip(record.r, offset)))
    elif kind is PerturbationKind.VELOCITY:
        record = replace(record, v=tuple(a + b for a, b in zip(record.v, offset)))
    else:
        record = replace(record, m=record.m + magnitude)

    moved = replace(launch, pre=replace(launch.pre, payload=record))
    ships = tuple(
        replace(section, events=(moved, *section.events[1:])) if section is ship else section
        for section in doc.ships
    )
    return replace(doc, ships=ships)


def shift_event_epoch(doc: SolutionDocument, ship_id: int, position: int, days: float) -> SolutionDocument:
    """Move one paired event in time without re-propagating anything."""
    ships = []
    for section in doc.ships:
        if section.ship_id == ship_id:
            event = section.events[position]
            shifted = replace(
                event,
                pre=replace(event.pre, payload=replace(event.before, t=event.before.t + days)),
                post=replace(event.post, payload=replace(event.after, t=event.after.t + days)),
            )
            section = replace(section, events=section.events[:position] + (shifted,) + section.events[position + 1 :])
        ships.append(section)
    return replace(doc, ships=tuple(ships))
