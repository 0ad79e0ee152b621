#!/usr/bin/env python3
from __future__ import annotations

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .state import StateVector
from .exceptions import GTOCError, HyperbolicStateError, MassDepletedError
from .catalog import PLANETS, AsteroidCatalog, Planet, PlanetConstants, body_state
from .constants import AU, MAX_VINF, MIN_SUN_DISTANCE, MISSION_END_MJD, MISSION_START_MJD, in_mission_window, section
from .propagation import (
    DEFAULT_INTEGRATOR,
    PROPULSION,
    IntegratorConfig,
    PropulsionConstants,
    ThrustProfile,
    fly,
)
from .ledger import MiningLedger, Violation, ViolationKind
from .scoring import (
    BONUS_MODEL,
    FLEET_RULE,
    MINING_RULE,
    BonusModel,
    FleetRule,
    MiningRule,
    ScoreBreakdown,
    score,
)
from .solution import BurnArc, Flyby, Launch, Rendezvous, ShipSection, SolutionDocument, StateRecord

logger = logging.getLogger("gtoc12")

THRUST_SLACK = 1e-9  # N


@dataclass(frozen=True)
class ToleranceSet:
    pos: float = 1000.0  # km
    vel: float = 0.001  # km/s
    mass: float = 0.001  # kg


@dataclass(frozen=True)
class MassModel:
    dry_mass: float = 500.0
    miner_mass: float = 40.0
    max_miners: int = 20
    max_initial_mass: float = 3000.0


TOLERANCES = ToleranceSet(**section("tolerances"))
MASS_MODEL = MassModel(**section("mass_model"))


@dataclass(frozen=True)
class ValidatorConfig:
    tolerances: ToleranceSet = TOLERANCES
    mass_model: MassModel = MASS_MODEL
    integrator: IntegratorConfig = DEFAULT_INTEGRATOR
    propulsion: PropulsionConstants = PROPULSION
    mining: MiningRule = MINING_RULE
    bonus: BonusModel = BONUS_MODEL
    fleet: FleetRule = FLEET_RULE
    workers: int = 1


@dataclass(frozen=True)
class Residual:
    """Worst terminal mismatch of a propagated leg (km, km/s, kg)."""

    position: float = 0.0
    velocity: float = 0.0
    mass: float = 0.0

    def worst(self, other: "Residual") -> "Residual":
        return Residual(
            max(self.position, other.position),
            max(self.velocity, other.velocity),
            max(self.mass, other.mass),
        )


@dataclass
class ValidationReport:
    violations: List[Violation]
    ledger: MiningLedger
    per_ship_residuals: Dict[int, Residual] = field(default_factory=dict)
    score: Optional[ScoreBreakdown] = None
    ship_count: int = 0

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> List[ViolationKind]:
        return [violation.kind for violation in self.violations]


# -----------------------------------------------------------------------------
# Helpers
# -----------------------------------------------------------------------------
def _distance(a: Sequence[float], b: Sequence[float]) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def _window(ship_id: int, t: float, what: str) -> List[Violation]:
    if in_mission_window(t):
        return []
    limit = MISSION_START_MJD if t < MISSION_START_MJD else MISSION_END_MJD
    return [Violation(ViolationKind.WINDOW, ship_id, t, t, limit, f"{what} at MJD {t:.6f} outside {MISSION_START_MJD}-{MISSION_END_MJD}")]


def _match_body(
    lines: Sequence[Tuple[int, StateRecord]],
    body: StateVector,
    tol: ToleranceSet,
    ship_id: int,
    name: str,
    check_velocity: bool = True,
) -> List[Violation]:
    violations = []
    for line_no, record in lines:
        offset = _distance(record.r, body.r)
        if offset > tol.pos:
            violations.append(
                Violation(ViolationKind.RENDEZVOUS_POS, ship_id, record.t, offset, tol.pos,
                          f"line {line_no}: position {offset:.3f} km from {name} (limit {tol.pos} km)")
            )
        if check_velocity:
            speed = _distance(record.v, body.v)
            if speed > tol.vel:
                violations.append(
                    Violation(ViolationKind.RENDEZVOUS_VEL, ship_id, record.t, speed, tol.vel,
                              f"line {line_no}: velocity {speed:.6f} km/s from {name} (limit {tol.vel} km/s)")
                )
    return violations


def classify_mass_step(step: float, model: MassModel, tol: ToleranceSet) -> Optional[str]:
    """'deploy', 'retrieve' or None for a rendezvous mass change (kg)."""
    if abs(step + model.miner_mass) <= tol.mass:
        return "deploy"
    if step > tol.mass:
        return "retrieve"
    return None


# -----------------------------------------------------------------------------
# Event checks
# -----------------------------------------------------------------------------
def check_launch(event: Launch, earth_state: StateVector, tol: ToleranceSet = TOLERANCES) -> List[Violation]:
    """Launch from Earth: position on both lines, Earth velocity on the first, v-infinity on the second."""
    ship_id = event.pre.ship_id
    pre, post = event.before, event.after

    violations = _match_body([(event.pre.line_no, pre)], earth_state, tol, ship_id, "Earth")
    violations += _match_body([(event.post.line_no, post)], earth_state, tol, ship_id, "Earth", check_velocity=False)

    v_inf = _distance(post.v, earth_state.v)
    if v_inf > MAX_VINF:
        violations.append(
            Violation(ViolationKind.LAUNCH_VINF, ship_id, event.t, v_inf, MAX_VINF,
                      f"launch v-infinity {v_inf:.6f} km/s exceeds {MAX_VINF} km/s")
        )
    step = post.m - pre.m
    if abs(step) > tol.mass:
        violations.append(
            Violation(ViolationKind.MASS_DISCONTINUITY, ship_id, event.t, abs(step), tol.mass,
                      f"launch mass changes by {step:.6f} kg across the event")
        )
    return violations + _window(ship_id, event.t, "launch")


def check_rendezvous(
    event: Rendezvous,
    asteroid_state: StateVector,
    tol: ToleranceSet = TOLERANCES,
    ledger: Optional[MiningLedger] = None,
    model: MassModel = MASS_MODEL,
) -> List[Violation]:
    ship_id, asteroid_id = event.pre.ship_id, event.asteroid_id
    pre, post = event.before, event.after
    name = f"asteroid {asteroid_id}"

    violations = _match_body(
        [(event.pre.line_no, pre), (event.post.line_no, post)], asteroid_state, tol, ship_id, name
    )
    if not violations:
        violations += _match_body([(event.post.line_no, post)], pre.state(), tol, ship_id, "the line before")

    step = post.m - pre.m
    kind = classify_mass_step(step, model, tol)
    if kind is None:
        violations.append(
            Violation(ViolationKind.MASS_DISCONTINUITY, ship_id, event.t, step, -model.miner_mass,
                      f"mass step {step:.6f} kg at {name} is neither a miner deploy (-{model.miner_mass} kg) nor a retrieve")
        )
    elif ledger is not None and kind == "deploy":
        ledger.record_deploy(asteroid_id, event.t, ship_id, event.pre.line_no)
    elif ledger is not None:
        ledger.record_retrieve(asteroid_id, event.t, ship_id, step, event.pre.line_no)
    return violations + _window(ship_id, event.t, f"rendezvous with {name}")


def max_turn_angle(planet: PlanetConstants, v_inf: float) -> float:
    """Largest v-infinity rotation (rad) allowed by the minimum pericenter radius."""
    ratio = planet.gravitational_parameter / planet.min_pericenter_radius
    return 2.0 * math.asin(ratio / (v_inf * v_inf + ratio))


def check_flyby(
    event: Flyby,
    planet_state: StateVector,
    planet: PlanetConstants,
    tol: ToleranceSet = TOLERANCES,
    carried: float = 0.0,
) -> Tuple[List[Violation], bool]:
    """
    Instantaneous gravity assist; returns (violations, unloaded).

    Earth flybys at or below the v-infinity limit unload everything the
    ship carries.
    """
    ship_id = event.pre.ship_id
    pre, post = event.before, event.after
    violations = _match_body(
        [(event.pre.line_no, pre), (event.post.line_no, post)], planet_state, tol, ship_id, planet.name,
        check_velocity=False,
    )

    v_in = np.asarray(pre.v) - planet_state.v
    v_out = np.asarray(post.v) - planet_state.v
    speed_in, speed_out = float(np.linalg.norm(v_in)), float(np.linalg.norm(v_out))
    if abs(speed_out - speed_in) > tol.vel:
        violations.append(
            Violation(ViolationKind.GA_MAGNITUDE, ship_id, event.t, abs(speed_out - speed_in), tol.vel,
                      f"v-infinity magnitude changes by {abs(speed_out - speed_in):.6f} km/s at {planet.name}")
        )

    turn = math.atan2(float(np.linalg.norm(np.cross(v_in, v_out))), float(v_in @ v_out))
    limit = max_turn_angle(planet, speed_in) + math.atan2(tol.vel, speed_in)
    if turn > limit:
        violations.append(
            Violation(ViolationKind.GA_DEFLECTION, ship_id, event.t, turn, limit,
                      f"turn angle {math.degrees(turn):.4f} deg exceeds {math.degrees(limit):.4f} deg at {planet.name} (rad)")
        )

    step = post.m - pre.m
    unloaded = False
    if planet.planet is Planet.EARTH and speed_in <= MAX_VINF:
        if abs(step + carried) > tol.mass:
            violations.append(
                Violation(ViolationKind.MASS_DISCONTINUITY, ship_id, event.t, step, -carried,
                          f"Earth flyby must unload the {carried:.6f} kg carried, mass changed by {step:.6f} kg")
            )
        else:
            unloaded = carried > tol.mass
    elif planet.planet is Planet.EARTH and step < -tol.mass:
        violations.append(
            Violation(ViolationKind.LAUNCH_VINF, ship_id, event.t, speed_in, MAX_VINF,
                      f"unloading at Earth with v-infinity {speed_in:.6f} km/s above {MAX_VINF} km/s")
        )
    elif abs(step) > tol.mass:
        violations.append(
            Violation(ViolationKind.MASS_DISCONTINUITY, ship_id, event.t, step, 0.0,
                      f"mass changes by {step:.6f} kg across the {planet.name} flyby")
        )
    return violations + _window(ship_id, event.t, f"{planet.name} flyby"), unloaded


# -----------------------------------------------------------------------------
# Legs
# -----------------------------------------------------------------------------
@dataclass
class LegResult:
    violations: List[Violation]
    residual: Residual = Residual()
    state: Optional[StateVector] = None


def propagate_leg(
    start: StateVector,
    target: Optional[StateRecord],
    arcs: Sequence[ThrustProfile],
    tol: ToleranceSet = TOLERANCES,
    config: ValidatorConfig = ValidatorConfig(),
    ship_id: int = 0,
) -> LegResult:
    """
    Fly from an event's exit state to the next event's entry line.

    With no target the leg ends at the last burn arc and only the
    in-flight constraints are checked.
    """
    violations = []
    t_max = config.propulsion.t_max
    for profile in arcs:
        magnitudes = profile.magnitudes
        worst = int(np.argmax(magnitudes))
        if magnitudes[worst] > t_max + THRUST_SLACK:
            violations.append(
                Violation(ViolationKind.THRUST_MAGNITUDE, ship_id, float(profile.epochs[worst]), float(magnitudes[worst]),
                          t_max, f"thrust {magnitudes[worst]:.9f} N exceeds {t_max} N")
            )

    end_epoch = target.t if target is not None else (arcs[-1].end if arcs else start.t)
    try:
        result = fly(start, arcs, end_epoch, config.integrator)
    except MassDepletedError as error:
        violations.append(
            Violation(ViolationKind.DRY_MASS_FLOOR, ship_id, error.epoch, 0.0, config.mass_model.dry_mass,
                      f"propellant exhausted: {error}")
        )
        return LegResult(violations)
    except HyperbolicStateError as error:
        violations.append(Violation(ViolationKind.STRUCTURAL, ship_id, error.epoch, 0.0, 0.0, f"unbound coast: {error}"))
        return LegResult(violations)
    except (GTOCError, ValueError, ArithmeticError) as error:
        violations.append(Violation(ViolationKind.STRUCTURAL, ship_id, start.t, 0.0, 0.0, f"propagation failed: {error}"))
        return LegResult(violations)

    if result.min_radius < MIN_SUN_DISTANCE:
        violations.append(
            Violation(ViolationKind.SOLAR_DISTANCE, ship_id, start.t, result.min_radius / AU, MIN_SUN_DISTANCE / AU,
                      f"leg from MJD {start.t:.6f} reaches {result.min_radius / AU:.6f} AU from the Sun (AU)")
        )
    if target is None:
        return LegResult(violations, state=result.state)

    residual = Residual(
        position=_distance(result.state.r, target.r),
        velocity=_distance(result.state.v, target.v),
        mass=abs(result.state.m - target.m),
    )
    logger.debug(
        f"Ship {ship_id} leg {start.t:.6f}->{target.t:.6f}: "
        f"dr={residual.position:.6e} km dv={residual.velocity:.6e} km/s dm={residual.mass:.6e} kg"
    )
    for kind_value, measured, limit, unit in (
        ("position", residual.position, tol.pos, "km"),
        ("velocity", residual.velocity, tol.vel, "km/s"),
        ("mass", residual.mass, tol.mass, "kg"),
    ):
        if measured > limit:
            violations.append(
                Violation(ViolationKind.PROPAGATION_RESIDUAL, ship_id, target.t, measured, limit,
                          f"{kind_value} residual {measured:.6f} {unit} arriving at MJD {target.t:.6f}")
            )
    return LegResult(violations, residual, result.state)


# -----------------------------------------------------------------------------
# Mass budget
# -----------------------------------------------------------------------------
def check_mass_budget(section: ShipSection, model: MassModel = MASS_MODEL, tol: ToleranceSet = TOLERANCES) -> List[Violation]:
    ship_id = section.ship_id
    launch = section.launch
    m0 = launch.after.m
    violations = []
    if m0 > model.max_initial_mass + tol.mass:
        violations.append(
            Violation(ViolationKind.INITIAL_MASS, ship_id, launch.t, m0, model.max_initial_mass,
                      f"initial mass {m0:.6f} kg exceeds {model.max_initial_mass} kg")
        )

    deploys = 0
    carried = 0.0
    for event in section.events:
        if isinstance(event, BurnArc):
            continue
        pre, post = event.before, event.after
        step = post.m - pre.m
        before = carried
        if isinstance(event, Rendezvous):
            kind = classify_mass_step(step, model, tol)
            if kind == "deploy":
                deploys += 1
            elif kind == "retrieve":
                carried += step
        elif isinstance(event, Flyby) and event.planet is Planet.EARTH and carried > tol.mass and abs(step + carried) <= tol.mass:
            carried = 0.0

        for line, record, aboard in ((event.pre, pre, before), (event.post, post, carried)):
            floor = model.dry_mass + aboard
            if record.m < floor - tol.mass:
                violations.append(
                    Violation(ViolationKind.DRY_MASS_FLOOR, ship_id, record.t, record.m, floor,
                              f"line {line.line_no}: mass {record.m:.6f} kg below dry mass plus cargo {floor:.6f} kg")
                )

    if deploys > model.max_miners:
        violations.append(
            Violation(ViolationKind.MINER_COUNT, ship_id, None, deploys, model.max_miners,
                      f"{deploys} miners deployed, at most {model.max_miners}")
        )
    propellant = m0 - model.dry_mass - model.miner_mass * deploys
    if propellant < -tol.mass:
        violations.append(
            Violation(ViolationKind.INITIAL_MASS, ship_id, launch.t, propellant, 0.0,
                      f"initial mass {m0:.6f} kg leaves {propellant:.6f} kg of propellant for {deploys} miners")
        )
    return violations


# -----------------------------------------------------------------------------
# Orchestration
# -----------------------------------------------------------------------------
@dataclass
class _ShipResult:
    violations: List[Violation]
    ledger: MiningLedger
    residual: Residual


def _validate_ship(ship: ShipSection, catalog: AsteroidCatalog, config: ValidatorConfig) -> _ShipResult:
    tol, model = config.tolerances, config.mass_model
    ship_id = ship.ship_id
    ledger = MiningLedger()
    violations: List[Violation] = []
    residual = Residual()

    launch = ship.launch
    violations += check_launch(launch, body_state(Planet.EARTH, launch.t), tol)
    state = launch.after.state()
    carried: Dict[int, float] = {}
    arcs: List[ThrustProfile] = []

    for event in ship.events[1:]:
        if isinstance(event, BurnArc):
            violations += _window(ship_id, event.start, "burn arc start") + _window(ship_id, event.end, "burn arc end")
            arcs.append(event.profile())
            continue

        leg = propagate_leg(state, event.before, arcs, tol, config, ship_id)
        violations += leg.violations
        residual = residual.worst(leg.residual)
        arcs = []

        if isinstance(event, Flyby):
            planet = PLANETS[event.planet]
            found, unloaded = check_flyby(event, body_state(event.planet, event.t), planet, tol, sum(carried.values()))
            violations += found
            if unloaded:
                ledger.record_unload(list(carried), event.t, ship_id, event.pre.line_no)
                carried.clear()
        elif isinstance(event, Rendezvous):
            if event.asteroid_id not in catalog:
                violations.append(
                    Violation(ViolationKind.STRUCTURAL, ship_id, event.t, event.asteroid_id, 0.0,
                              f"line {event.pre.line_no}: asteroid {event.asteroid_id} is not in the catalog")
                )
            else:
                violations += check_rendezvous(event, catalog.state(event.asteroid_id, event.t), tol, ledger, model)
                step = event.after.m - event.before.m
                if classify_mass_step(step, model, tol) == "retrieve":
                    carried[event.asteroid_id] = step
        state = event.after.state()

    if arcs:
        leg = propagate_leg(state, None, arcs, tol, config, ship_id)
        violations += leg.violations
        floor = model.dry_mass + sum(carried.values())
        if leg.state is not None and leg.state.m < floor - tol.mass:
            violations.append(
                Violation(ViolationKind.DRY_MASS_FLOOR, ship_id, leg.state.t, leg.state.m, floor,
                          f"mass {leg.state.m:.6f} kg after the last burn arc is below {floor:.6f} kg")
            )

    violations += check_mass_budget(ship, model, tol)
    return _ShipResult(violations, ledger, residual)


def _validate_ship_safely(ship: ShipSection, catalog: AsteroidCatalog, config: ValidatorConfig) -> _ShipResult:
    try:
        return _validate_ship(ship, catalog, config)
    except (GTOCError, ValueError, ArithmeticError) as error:
        logger.error(f"Ship {ship.ship_id} validation aborted: {error}")
        violation = Violation(ViolationKind.STRUCTURAL, ship.ship_id, None, 0.0, 0.0, f"validation aborted: {error}")
        return _ShipResult([violation], MiningLedger(), Residual())


def validate_solution(
    doc: SolutionDocument,
    catalog: AsteroidCatalog,
    config: ValidatorConfig = ValidatorConfig(),
) -> ValidationReport:
    """Every constraint on every ship; findings are collected, never raised."""
    if not doc.ships:
        violation = Violation(ViolationKind.STRUCTURAL, None, None, 0.0, 1.0, "no ships")
        return ValidationReport([violation], MiningLedger())

    with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
        results = list(pool.map(lambda ship: _validate_ship_safely(ship, catalog, config), doc.ships))

    ledger = MiningLedger()
    violations: List[Violation] = []
    residuals: Dict[int, Residual] = {}
    for ship, result in zip(doc.ships, results):
        ledger.merge(result.ledger)
        violations += result.violations
        residuals[ship.ship_id] = result.residual

    violations += ledger.resolve(config.mining.min_stay)
    breakdown = score(ledger, config.bonus, config.fleet, len(doc.ships), config.mining, cap_slack=config.tolerances.mass)
    for entry in breakdown.cap_breaches:
        record = ledger.get(entry.asteroid_id)
        if record.stay_years is None or record.stay_years < config.mining.min_stay:
            continue
        violations.append(
            Violation(ViolationKind.MINING_CAP, record.retrieve.ship_id, record.retrieve.epoch, entry.collected, entry.cap,
                      f"asteroid {entry.asteroid_id}: collected {entry.collected:.6f} kg exceeds cap {entry.cap:.6f} kg")
        )
    if not breakdown.fleet_ok:
        violations.append(
            Violation(ViolationKind.FLEET_SIZE, None, None, breakdown.ship_count, breakdown.max_ships_allowed,
                      f"{breakdown.ship_count} ships exceed the cap of {breakdown.max_ships_allowed} "
                      f"at {breakdown.average_mass:.3f} kg per ship")
        )

    report = ValidationReport(violations, ledger, residuals, breakdown, len(doc.ships))
    logger.info(
        f"Validated {len(doc.ships)} ship(s): {len(violations)} violation(s), J={breakdown.total_j:.6f}"
    )
    return report
