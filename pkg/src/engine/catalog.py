#!/usr/bin/env python3
from __future__ import annotations

import math
import logging
from enum import IntEnum
from pathlib import Path
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, TextIO, Tuple, Union

import numpy as np

from .state import StateVector
from .constants import (
    AU,
    DAY,
    MU_SUN,
    TWO_PI,
    MISSION_START_MJD,
    section,
)
from .exceptions import (
    CatalogError,
    HyperbolicStateError,
    KeplerConvergenceError,
    UnknownBodyError,
)

logger = logging.getLogger("gtoc12")

MAX_ASTEROID_ID = 60000
KEPLER_TOL = 1e-13
NEWTON_ITERATIONS = 50
BISECTION_ITERATIONS = 200
_BELOW_TWO_PI = math.nextafter(TWO_PI, 0.0)


class Planet(IntEnum):
    """Flyby bodies, valued by their event ID in the solution file."""

    VENUS = -2
    EARTH = -3
    MARS = -4


# -----------------------------------------------------------------------------
# Domain types
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class OrbitalElements:
    """Keplerian elements: km, rad, epoch in MJD."""

    semi_major_axis: float
    eccentricity: float
    inclination: float
    lan: float
    arg_peri: float
    mean_anomaly_at_epoch: float
    epoch: float = MISSION_START_MJD

    def __post_init__(self) -> None:
        if not self.semi_major_axis > 0.0:
            raise ValueError(f"semi-major axis must be positive, got {self.semi_major_axis}")
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError(f"eccentricity must be in [0, 1), got {self.eccentricity}")

    def mean_motion(self, mu: float = MU_SUN) -> float:
        """rad/s"""
        return math.sqrt(mu / self.semi_major_axis**3)

    def period(self, mu: float = MU_SUN) -> float:
        """Orbital period in seconds."""
        return TWO_PI / self.mean_motion(mu)

    def as_row(self) -> Tuple[float, float, float, float, float, float]:
        return (
            self.semi_major_axis,
            self.eccentricity,
            self.inclination,
            self.lan,
            self.arg_peri,
            self.mean_anomaly_at_epoch,
        )


@dataclass(frozen=True)
class PlanetConstants:
    planet: Planet
    gravitational_parameter: float
    min_pericenter_radius: float
    elements: OrbitalElements

    @property
    def name(self) -> str:
        return self.planet.name.capitalize()


def _load_planets() -> Dict[Planet, PlanetConstants]:
    planets = {}
    for name, row in section("planets").items():
        planet = Planet(int(row["event_id"]))
        if planet.name.lower() != name:
            raise ValueError(f"Planet table entry {name!r} has event ID {planet.value}")
        planets[planet] = PlanetConstants(
            planet=planet,
            gravitational_parameter=float(row["mu"]),
            min_pericenter_radius=float(row["min_pericenter_radius"]),
            elements=OrbitalElements(
                semi_major_axis=float(row["semi_major_axis"]),
                eccentricity=float(row["eccentricity"]),
                inclination=math.radians(float(row["inclination"])),
                lan=math.radians(float(row["lan"])),
                arg_peri=math.radians(float(row["arg_peri"])),
                mean_anomaly_at_epoch=math.radians(float(row["mean_anomaly"])),
                epoch=MISSION_START_MJD,
            ),
        )
    return planets


PLANETS: Dict[Planet, PlanetConstants] = _load_planets()


# -----------------------------------------------------------------------------
# Kepler's equation
# -----------------------------------------------------------------------------
def solve_kepler(mean_anomaly: float, eccentricity: float) -> float:
    """
    Eccentric anomaly E in [0, 2pi) with |E - e sin E - M| < 1e-13.

    Newton seeded at M + e sin M; bisection if Newton stalls.
    """
    e = float(eccentricity)
    if not 0.0 <= e < 1.0:
        raise ValueError(f"eccentricity must be in [0, 1), got {e}")
    if not math.isfinite(mean_anomaly):
        raise KeplerConvergenceError(mean_anomaly, e)

    M = math.fmod(mean_anomaly, TWO_PI)
    if M < 0.0:
        M += TWO_PI
    if M >= TWO_PI:
        M = 0.0

    E = M + e * math.sin(M)
    for _ in range(NEWTON_ITERATIONS):
        residual = E - e * math.sin(E) - M
        if abs(residual) < KEPLER_TOL:
            return min(max(E, 0.0), _BELOW_TWO_PI)
        E -= residual / (1.0 - e * math.cos(E))

    # f(E) = E - e sin E - M is increasing with f(0) <= 0 <= f(2pi)
    lo, hi = 0.0, TWO_PI
    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        residual = mid - e * math.sin(mid) - M
        if abs(residual) < KEPLER_TOL:
            return mid
        if residual > 0.0:
            hi = mid
        else:
            lo = mid
    raise KeplerConvergenceError(mean_anomaly, e)


def solve_kepler_array(mean_anomaly: np.ndarray, eccentricity: np.ndarray) -> np.ndarray:
    """Vectorized solve_kepler with the same tolerance and range."""
    M = np.mod(np.atleast_1d(np.asarray(mean_anomaly, dtype=float)), TWO_PI)
    e = np.broadcast_to(np.asarray(eccentricity, dtype=float), M.shape)
    if np.any((e < 0.0) | (e >= 1.0)):
        raise ValueError("eccentricity must be in [0, 1)")

    E = M + e * np.sin(M)
    for _ in range(NEWTON_ITERATIONS):
        residual = E - e * np.sin(E) - M
        if np.all(np.abs(residual) < KEPLER_TOL):
            break
        E = E - residual / (1.0 - e * np.cos(E))

    stalled = ~(np.abs(E - e * np.sin(E) - M) < KEPLER_TOL)
    if np.any(stalled):
        m_bad, e_bad = M[stalled], e[stalled]
        lo, hi = np.zeros_like(m_bad), np.full_like(m_bad, TWO_PI)
        for _ in range(BISECTION_ITERATIONS):
            mid = 0.5 * (lo + hi)
            positive = mid - e_bad * np.sin(mid) - m_bad > 0.0
            hi = np.where(positive, mid, hi)
            lo = np.where(positive, lo, mid)
        E[stalled] = 0.5 * (lo + hi)
        if np.any(~(np.abs(E - e * np.sin(E) - M) < KEPLER_TOL)):
            index = int(np.argmax(np.abs(E - e * np.sin(E) - M)))
            raise KeplerConvergenceError(float(M[index]), float(e[index]))

    E = np.clip(E, 0.0, _BELOW_TWO_PI)
    return E.reshape(np.shape(mean_anomaly))


# -----------------------------------------------------------------------------
# Elements <-> Cartesian
# -----------------------------------------------------------------------------
def _perifocal_axes(
    inclination: np.ndarray, lan: np.ndarray, arg_peri: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    ci, si = np.cos(inclination), np.sin(inclination)
    cO, sO = np.cos(lan), np.sin(lan)
    cw, sw = np.cos(arg_peri), np.sin(arg_peri)
    P = np.stack(
        [cw * cO - sw * sO * ci, cw * sO + sw * cO * ci, sw * si], axis=-1
    )
    Q = np.stack(
        [-sw * cO - cw * sO * ci, -sw * sO + cw * cO * ci, cw * si], axis=-1
    )
    return P, Q


def _kepler_states(
    a: np.ndarray,
    e: np.ndarray,
    inclination: np.ndarray,
    lan: np.ndarray,
    arg_peri: np.ndarray,
    mean_anomaly: np.ndarray,
    mu: float,
) -> Tuple[np.ndarray, np.ndarray]:
    E = solve_kepler_array(mean_anomaly, e)
    f = 2.0 * np.arctan2(np.sqrt(1.0 + e) * np.sin(0.5 * E), np.sqrt(1.0 - e) * np.cos(0.5 * E))
    radius = a * (1.0 - e * np.cos(E))
    p = a * (1.0 - e * e)

    P, Q = _perifocal_axes(inclination, lan, arg_peri)
    cf, sf = np.cos(f)[..., None], np.sin(f)[..., None]
    r = radius[..., None] * (P * cf + Q * sf)
    v = np.sqrt(mu / p)[..., None] * (-P * sf + Q * (e[..., None] + cf))
    return r, v


def elements_to_state(elements: OrbitalElements, mu: float, t: float) -> StateVector:
    """Two-body position/velocity of the orbit at MJD t; mass unset."""
    mean_anomaly = elements.mean_anomaly_at_epoch + elements.mean_motion(mu) * (
        t - elements.epoch
    ) * DAY
    r, v = _kepler_states(
        np.atleast_1d(elements.semi_major_axis),
        np.atleast_1d(elements.eccentricity),
        np.atleast_1d(elements.inclination),
        np.atleast_1d(elements.lan),
        np.atleast_1d(elements.arg_peri),
        np.atleast_1d(mean_anomaly),
        mu,
    )
    return StateVector(r[0], v[0], t)


def state_to_elements(state: StateVector, mu: float = MU_SUN) -> OrbitalElements:
    """Osculating elements of an elliptic state, referred to the state's epoch."""
    r, v = state.r, state.v
    rn = float(np.linalg.norm(r))
    h = np.cross(r, v)
    hn = float(np.linalg.norm(h))
    energy = 0.5 * float(v @ v) - mu / rn
    if hn == 0.0 or not energy < 0.0:
        raise HyperbolicStateError("State is not on a bound orbit", state.t)

    a = -mu / (2.0 * energy)
    e_vec = np.cross(v, h) / mu - r / rn
    e = float(np.linalg.norm(e_vec))
    w_hat = h / hn

    node_norm = math.hypot(h[0], h[1])
    if node_norm > 1e-15 * hn:
        lan = math.atan2(h[0], -h[1]) % TWO_PI
        node = np.array([-h[1], h[0], 0.0]) / node_norm
    else:
        lan = 0.0
        node = np.array([1.0, 0.0, 0.0])
    inclination = math.atan2(node_norm, h[2])

    P = e_vec / e if e > 1e-14 else node
    if e <= 1e-14:
        e = 0.0
    Q = np.cross(w_hat, P)
    arg_peri = math.atan2(float(P @ np.cross(w_hat, node)), float(P @ node)) % TWO_PI
    f = math.atan2(float(r @ Q), float(r @ P))
    E = 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(0.5 * f), math.sqrt(1.0 + e) * math.cos(0.5 * f))
    mean_anomaly = (E - e * math.sin(E)) % TWO_PI

    return OrbitalElements(a, e, inclination, lan, arg_peri, mean_anomaly, state.t)


def reference_to_epoch(elements: OrbitalElements, epoch: float, mu: float = MU_SUN) -> OrbitalElements:
    """Same orbit with the mean anomaly referred to another epoch."""
    mean_anomaly = (
        elements.mean_anomaly_at_epoch
        + elements.mean_motion(mu) * (epoch - elements.epoch) * DAY
    ) % TWO_PI
    return OrbitalElements(
        elements.semi_major_axis,
        elements.eccentricity,
        elements.inclination,
        elements.lan,
        elements.arg_peri,
        mean_anomaly,
        epoch,
    )


# -----------------------------------------------------------------------------
# Asteroid catalog
# -----------------------------------------------------------------------------
class AsteroidCatalog:
    """
    Immutable table of asteroid elements keyed by ID.

    Columns of the element matrix: a (km), e, i, LAN, argperi, M0 (rad).
    """

    def __init__(
        self,
        ids: Iterable[int] = (),
        elements: Optional[np.ndarray] = None,
        epochs: Optional[np.ndarray] = None,
    ) -> None:
        self._ids = np.asarray(list(ids), dtype=np.int64)
        count = len(self._ids)
        self._elements = (
            np.zeros((0, 6)) if elements is None else np.asarray(elements, dtype=float)
        ).reshape(count, 6)
        self._epochs = (
            np.full(count, MISSION_START_MJD)
            if epochs is None
            else np.asarray(epochs, dtype=float).reshape(count)
        )
        for array in (self._ids, self._elements, self._epochs):
            array.flags.writeable = False
        self._index = {int(asteroid_id): row for row, asteroid_id in enumerate(self._ids)}

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, asteroid_id: object) -> bool:
        return asteroid_id in self._index

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    @property
    def entries(self) -> List[Tuple[int, OrbitalElements]]:
        return [(int(asteroid_id), self.elements(int(asteroid_id))) for asteroid_id in self._ids]

    def elements(self, asteroid_id: int) -> OrbitalElements:
        row = self._index.get(int(asteroid_id))
        if row is None:
            raise UnknownBodyError(asteroid_id)
        return OrbitalElements(*map(float, self._elements[row]), epoch=float(self._epochs[row]))

    def state(self, asteroid_id: int, t: float) -> StateVector:
        return elements_to_state(self.elements(asteroid_id), MU_SUN, t)

    def states_at(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(ids, r[n, 3], v[n, 3]) of every asteroid at MJD t."""
        if not len(self):
            return self._ids, np.zeros((0, 3)), np.zeros((0, 3))
        a, e, inc, lan, argp, m0 = self._elements.T
        mean_anomaly = m0 + np.sqrt(MU_SUN / a**3) * (t - self._epochs) * DAY
        r, v = _kepler_states(a, e, inc, lan, argp, mean_anomaly, MU_SUN)
        return self._ids, r, v

    def with_asteroids(self, entries: Mapping[int, OrbitalElements]) -> "AsteroidCatalog":
        """A new catalog with the given entries added or replaced."""
        ids = [int(i) for i in self._ids]
        rows = [row for row in self._elements]
        epochs = list(self._epochs)
        for asteroid_id, elements in entries.items():
            _check_id(asteroid_id, line=0)
            row = (elements.as_row(), elements.epoch)
            if asteroid_id in self._index:
                position = self._index[asteroid_id]
                rows[position], epochs[position] = np.asarray(row[0]), row[1]
            else:
                ids.append(int(asteroid_id))
                rows.append(np.asarray(row[0]))
                epochs.append(row[1])
        return AsteroidCatalog(ids, np.array(rows).reshape(len(ids), 6), np.array(epochs))

    def __repr__(self) -> str:
        return f"AsteroidCatalog({len(self)} asteroids)"


def _check_id(asteroid_id: int, line: int) -> None:
    if not 1 <= asteroid_id <= MAX_ASTEROID_ID:
        raise CatalogError(line, f"asteroid ID {asteroid_id} outside 1..{MAX_ASTEROID_ID}")


def _parse_catalog_row(fields: List[str], line: int) -> Tuple[int, List[float]]:
    if len(fields) != 8:
        raise CatalogError(line, f"expected 8 columns, found {len(fields)}")
    try:
        asteroid_id = int(fields[0])
        values = [float(token) for token in fields[1:]]
    except ValueError:
        raise CatalogError(line, f"unparsable number in {' '.join(fields)!r}") from None
    if not all(math.isfinite(value) for value in values):
        raise CatalogError(line, "non-finite value")
    return asteroid_id, values


def load_asteroid_catalog(source: Union[TextIO, str, Path]) -> AsteroidCatalog:
    """
    Load the whitespace-delimited asteroid table.

    Columns: ID, epoch (MJD), a (AU), e, i (deg), LAN (deg), argperi (deg), M (deg).
    The first line is a header unless it already parses as a data row.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as file:
            catalog = load_asteroid_catalog(file)
        logger.info(f"Loaded {len(catalog)} asteroids from {source}")
        return catalog

    ids: List[int] = []
    rows: List[List[float]] = []
    epochs: List[float] = []
    seen: Dict[int, int] = {}

    for line, raw in enumerate(source, start=1):
        fields = raw.split()
        if not fields:
            continue
        if line == 1:
            try:
                _parse_catalog_row(fields, line)
            except CatalogError:
                continue  # header

        asteroid_id, values = _parse_catalog_row(fields, line)
        _check_id(asteroid_id, line)
        if asteroid_id in seen:
            raise CatalogError(line, f"duplicate asteroid ID {asteroid_id} (first on line {seen[asteroid_id]})")
        epoch, a_au, e, inc, lan, argp, mean_anomaly = values
        if not a_au > 0.0:
            raise CatalogError(line, f"semi-major axis must be positive, got {a_au}")
        if not 0.0 <= e < 1.0:
            raise CatalogError(line, f"eccentricity {e} outside [0, 1)")

        seen[asteroid_id] = line
        ids.append(asteroid_id)
        epochs.append(epoch)
        rows.append(
            [
                a_au * AU,
                e,
                math.radians(inc),
                math.radians(lan),
                math.radians(argp),
                math.radians(mean_anomaly),
            ]
        )

    catalog = AsteroidCatalog(ids, np.array(rows).reshape(len(ids), 6), np.array(epochs))
    logger.debug(f"Parsed {len(catalog)} catalog rows")
    return catalog


CATALOG_HEADER = "ID epoch(MJD) a(AU) e i(deg) LAN(deg) argperi(deg) M(deg)"


def write_asteroid_catalog(catalog: AsteroidCatalog, stream: TextIO) -> None:
    """Inverse of load_asteroid_catalog, in the same column units."""
    stream.write(CATALOG_HEADER + "\n")
    for asteroid_id, elements in catalog.entries:
        a, e, inc, lan, argp, mean_anomaly = elements.as_row()
        values = [
            elements.epoch,
            a / AU,
            e,
            math.degrees(inc),
            math.degrees(lan),
            math.degrees(argp),
            math.degrees(mean_anomaly),
        ]
        stream.write(" ".join([str(asteroid_id), *(f"{value:.16e}" for value in values)]) + "\n")


# -----------------------------------------------------------------------------
# Body dispatch
# -----------------------------------------------------------------------------
Body = Union[Planet, int]


def parse_body(text: str) -> Body:
    """'earth', 'Venus', '-4' or an asteroid ID."""
    name = text.strip()
    if name.upper() in Planet.__members__:
        return Planet[name.upper()]
    try:
        value = int(name)
    except ValueError:
        raise UnknownBodyError(text) from None
    if value <= 0:
        try:
            return Planet(value)
        except ValueError:
            raise UnknownBodyError(text) from None
    return value


def body_state(body: Body, t: float, catalog: Optional[AsteroidCatalog] = None) -> StateVector:
    if isinstance(body, Planet) or int(body) <= 0:
        try:
            planet = Planet(int(body))
        except ValueError:
            raise UnknownBodyError(body) from None
        return elements_to_state(PLANETS[planet].elements, MU_SUN, t)

    if catalog is None:
        raise UnknownBodyError(body)
    return catalog.state(int(body), t)
