#!/usr/bin/env python3
from __future__ import annotations

import math
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.polynomial import polyfit, polyval
from scipy.integrate import solve_ivp

from .state import StateVector
from .catalog import solve_kepler
from .constants import DAY, G0, MU_SUN, TWO_PI, section
from .exceptions import HyperbolicStateError, MassDepletedError, PropagationError

logger = logging.getLogger("gtoc12")

EPOCH_EPS = 1e-9  # days
DEPLETED_MASS = 1e-3  # kg


@dataclass(frozen=True)
class PropulsionConstants:
    isp: float = 4000.0
    t_max: float = 0.6
    g0: float = G0

    def mass_flow(self, thrust_norm: float) -> float:
        """Propellant use in kg/s for a thrust magnitude in N."""
        return thrust_norm / (self.isp * self.g0)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol_pos: float = 1e-6
    abs_tol_vel: float = 1e-9
    abs_tol_mass: float = 1e-9
    max_step: float = 86400.0

    def atol(self) -> np.ndarray:
        return np.array([self.abs_tol_pos] * 3 + [self.abs_tol_vel] * 3 + [self.abs_tol_mass])


PROPULSION = PropulsionConstants(**section("propulsion"))
DEFAULT_INTEGRATOR = IntegratorConfig(**section("integrator"))


@dataclass(frozen=True, eq=False)
class ThrustProfile:
    """
    Thrust samples of one burn arc.

    Epochs in MJD, strictly increasing; thrust vectors in N, one row per
    epoch. Thrust between samples is the cubic Lagrange interpolant.
    """

    epochs: np.ndarray
    thrust: np.ndarray

    def __post_init__(self) -> None:
        epochs = np.array(self.epochs, dtype=float).reshape(-1)
        thrust = np.array(self.thrust, dtype=float).reshape(len(epochs), 3)
        if len(epochs) == 0:
            raise ValueError("Thrust profile needs at least one sample")
        if not (np.all(np.isfinite(epochs)) and np.all(np.isfinite(thrust))):
            raise ValueError("Thrust profile contains non-finite values")
        if np.any(np.diff(epochs) <= 0.0):
            raise ValueError("Thrust sample epochs must be strictly increasing")
        epochs.flags.writeable = False
        thrust.flags.writeable = False
        object.__setattr__(self, "epochs", epochs)
        object.__setattr__(self, "thrust", thrust)

    @classmethod
    def from_samples(cls, samples: Iterable[Tuple[float, Sequence[float]]]) -> "ThrustProfile":
        samples = list(samples)
        return cls([t for t, _ in samples], [thrust for _, thrust in samples])

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def start(self) -> float:
        return float(self.epochs[0])

    @property
    def end(self) -> float:
        return float(self.epochs[-1])

    @property
    def magnitudes(self) -> np.ndarray:
        return np.linalg.norm(self.thrust, axis=1)


@dataclass(frozen=True)
class ArcResult:
    state: StateVector
    min_radius: float
    steps: int = field(default=0, compare=False)


# -----------------------------------------------------------------------------
# Coast arcs
# -----------------------------------------------------------------------------
def _coast(state: StateVector, dt: float, mu: float = MU_SUN) -> Tuple[np.ndarray, np.ndarray, float]:
    r0_vec, v0_vec = state.r, state.v
    if not (math.isfinite(dt) and np.all(np.isfinite(r0_vec)) and np.all(np.isfinite(v0_vec))):
        raise PropagationError("Non-finite state or duration", state.t)
    r0 = float(np.linalg.norm(r0_vec))
    if r0 == 0.0:
        raise PropagationError("State at the origin", state.t)
    if dt == 0.0:
        return r0_vec.copy(), v0_vec.copy(), r0

    energy = 0.5 * float(v0_vec @ v0_vec) - mu / r0
    if not energy < 0.0:
        raise HyperbolicStateError(f"Coast of an unbound state (energy {energy:.6e} km^2/s^2)", state.t)

    a = -mu / (2.0 * energy)
    sqrt_a = math.sqrt(a)
    sigma0 = float(r0_vec @ v0_vec) / math.sqrt(mu)
    e_cos_e0 = 1.0 - r0 / a
    e_sin_e0 = sigma0 / sqrt_a
    e = min(math.hypot(e_cos_e0, e_sin_e0), math.nextafter(1.0, 0.0))

    # Whole revolutions are split off so the Kepler solve sees (-pi, pi]
    mean_motion = math.sqrt(mu / a**3)
    delta_m = mean_motion * dt
    revolutions = round(delta_m / TWO_PI)
    delta_m_reduced = delta_m - TWO_PI * revolutions

    e0 = math.atan2(e_sin_e0, e_cos_e0)
    e1 = solve_kepler(e0 - e_sin_e0 + delta_m_reduced, e)
    delta_e = e1 - e0
    implied = delta_e - e * math.sin(e1) + e_sin_e0
    delta_e += TWO_PI * round((delta_m_reduced - implied) / TWO_PI)
    delta_e += TWO_PI * revolutions

    cos_de, sin_de = math.cos(delta_e), math.sin(delta_e)
    r1 = a + (r0 - a) * cos_de + sigma0 * sqrt_a * sin_de
    f = 1.0 - a / r0 * (1.0 - cos_de)
    g = a * sigma0 / math.sqrt(mu) * (1.0 - cos_de) + r0 * math.sqrt(a / mu) * sin_de
    f_dot = -math.sqrt(mu * a) / (r1 * r0) * sin_de
    g_dot = 1.0 - a / r1 * (1.0 - cos_de)

    r1_vec = f * r0_vec + g * v0_vec
    v1_vec = f_dot * r0_vec + g_dot * v0_vec

    # Perihelion is E = 0 mod 2pi
    lo, hi = sorted((e0, e0 + delta_e))
    if math.floor(hi / TWO_PI) >= math.ceil(lo / TWO_PI):
        min_radius = a * (1.0 - e)
    else:
        min_radius = min(r0, float(np.linalg.norm(r1_vec)))
    return r1_vec, v1_vec, min_radius


def coast_arc(state: StateVector, dt: float, end_epoch: Optional[float] = None) -> ArcResult:
    """Two-body coast by dt seconds with the smallest Sun distance reached on the way."""
    r1, v1, min_radius = _coast(state, dt)
    t1 = state.t + dt / DAY if end_epoch is None else end_epoch
    return ArcResult(StateVector(r1, v1, t1, state.m), min_radius)


def coast_propagate(state: StateVector, dt: float) -> StateVector:
    """Analytic two-body advance by dt seconds; mass unchanged."""
    return coast_arc(state, dt).state


# -----------------------------------------------------------------------------
# Thrust interpolation
# -----------------------------------------------------------------------------
def _segment(profile: ThrustProfile, t: float) -> int:
    n = len(profile)
    return int(min(max(np.searchsorted(profile.epochs, t, side="right") - 1, 0), max(n - 2, 0)))


def _segment_coefficients(profile: ThrustProfile, segment: int) -> np.ndarray:
    """
    Power-series coefficients of the thrust interpolant on one segment.

    Rows are ascending powers of days since the segment's first sample,
    columns are thrust axes. The four-sample window starts one sample
    before the segment, clamped to the ends of the arc.
    """
    n = len(profile)
    width = min(4, n)
    start = min(max(segment - 1, 0), n - width)
    nodes = profile.epochs[start : start + width] - profile.epochs[segment]
    return polyfit(nodes, profile.thrust[start : start + width], width - 1)


def interpolate_thrust(profile: ThrustProfile, t: float) -> np.ndarray:
    """Cubic Lagrange thrust (N) at MJD t through the four bracketing samples."""
    if t < profile.start - EPOCH_EPS or t > profile.end + EPOCH_EPS:
        raise ValueError(f"Epoch {t} outside thrust profile [{profile.start}, {profile.end}]")
    exact = np.flatnonzero(profile.epochs == t)
    if exact.size:
        return profile.thrust[exact[0]].copy()
    if len(profile) == 1:
        return profile.thrust[0].copy()
    segment = _segment(profile, t)
    return polyval(t - profile.epochs[segment], _segment_coefficients(profile, segment))


# -----------------------------------------------------------------------------
# Thrust arcs
# -----------------------------------------------------------------------------
def _thrusted_motion(coefficients: np.ndarray, origin: float, propulsion: PropulsionConstants):
    """Right-hand side on one segment; s in seconds since the arc start."""
    rows = [tuple(row) for row in coefficients.tolist()[::-1]]

    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        x = (s - origin) / DAY
        tx = ty = tz = 0.0
        for cx, cy, cz in rows:
            tx, ty, tz = tx * x + cx, ty * x + cy, tz * x + cz
        rx, ry, rz, vx, vy, vz, m = y.tolist()
        k = -MU_SUN / (rx * rx + ry * ry + rz * rz) ** 1.5
        scale = 1.0 / (m * 1000.0)
        mass_rate = -propulsion.mass_flow(math.sqrt(tx * tx + ty * ty + tz * tz))
        return np.array([vx, vy, vz, k * rx + tx * scale, k * ry + ty * scale, k * rz + tz * scale, mass_rate])

    return rhs


def _peak_thrust(coefficients: np.ndarray, days: float) -> float:
    """Upper bound on the interpolated thrust magnitude over [0, days]."""
    norms = np.linalg.norm(coefficients, axis=1)
    return float(np.sum(norms * days ** np.arange(len(norms))))


def _mass_depleted(_: float, y: np.ndarray) -> float:
    return y[6] - DEPLETED_MASS


_mass_depleted.terminal = True
_mass_depleted.direction = -1


def integrate_thrust_arc(
    state: StateVector,
    profile: ThrustProfile,
    config: IntegratorConfig = DEFAULT_INTEGRATOR,
    propulsion: PropulsionConstants = PROPULSION,
) -> ArcResult:
    """
    Integrate the thrusted equations of motion over a burn arc.

    One Dormand-Prince solve per pair of consecutive samples, so no step
    straddles a sample epoch. Time inside the solver is seconds from the
    arc start. Each solve starts from the last accepted step size of the
    previous one. Segments with no thrust at all are coasted analytically.
    """
    if state.m is None:
        raise ValueError("Thrust arcs need a state with mass")
    if state.m <= DEPLETED_MASS:
        raise MassDepletedError(f"Burn starts with mass {state.m} kg", state.t)
    if abs(state.t - profile.start) > EPOCH_EPS:
        raise PropagationError(
            f"State epoch {state.t} does not match burn start {profile.start}", state.t
        )

    t0 = profile.start
    y = state.vector()
    min_radius = state.radius
    steps = 0
    step = None
    atol = config.atol()
    nodes = (profile.epochs - t0) * DAY

    for segment, (s_start, s_end) in enumerate(zip(nodes[:-1], nodes[1:])):
        coefficients = _segment_coefficients(profile, segment)
        span = s_end - s_start
        if not coefficients.any():
            coast = coast_arc(StateVector.from_vector(y, t0 + s_start / DAY), span, end_epoch=t0 + s_end / DAY)
            y = coast.state.vector()
            min_radius = min(min_radius, coast.min_radius)
            continue
        burnt = propulsion.mass_flow(_peak_thrust(coefficients, span / DAY)) * span
        solution = solve_ivp(
            _thrusted_motion(coefficients, s_start, propulsion),
            (s_start, s_end),
            y,
            method="RK45",
            rtol=config.rel_tol,
            atol=atol,
            max_step=config.max_step,
            first_step=None if step is None else min(step, span),
            events=_mass_depleted if y[6] - burnt <= DEPLETED_MASS else None,
        )
        epoch = t0 + solution.t[-1] / DAY
        if solution.status == 1:
            raise MassDepletedError("Ship mass reached zero", epoch)
        if solution.status != 0:
            raise PropagationError(f"Integrator failed: {solution.message}", epoch)

        y = solution.y[:, -1]
        steps += len(solution.t) - 1
        if len(solution.t) > 2:
            step = float(solution.t[-2] - solution.t[-3])
        elif step is None:
            step = float(span)
        min_radius = min(min_radius, float(np.min(np.linalg.norm(solution.y[0:3], axis=0))))

    logger.debug(f"Burn arc {profile.start:.6f}-{profile.end:.6f}: {steps} steps")
    return ArcResult(StateVector.from_vector(y, profile.end), min_radius, steps)


def thrust_propagate(
    state: StateVector,
    profile: ThrustProfile,
    config: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> StateVector:
    return integrate_thrust_arc(state, profile, config).state


def fly(
    state: StateVector,
    arcs: Sequence[ThrustProfile],
    end_epoch: float,
    config: IntegratorConfig = DEFAULT_INTEGRATOR,
) -> ArcResult:
    """
    Coast, burn, coast... from state to end_epoch.

    Arcs must be time-ordered and lie inside [state.t, end_epoch].
    """
    current = state
    min_radius = state.radius
    steps = 0
    for profile in arcs:
        if profile.start < current.t - EPOCH_EPS:
            raise PropagationError(f"Burn arc at {profile.start} starts before {current.t}", current.t)
        coast = coast_arc(current, (profile.start - current.t) * DAY, end_epoch=profile.start)
        burn = integrate_thrust_arc(coast.state, profile, config)
        current = burn.state
        min_radius = min(min_radius, coast.min_radius, burn.min_radius)
        steps += burn.steps

    if end_epoch < current.t - EPOCH_EPS:
        raise PropagationError(f"Burn arc ends at {current.t}, after {end_epoch}", current.t)
    coast = coast_arc(current, (end_epoch - current.t) * DAY, end_epoch=end_epoch)
    return ArcResult(coast.state, min(min_radius, coast.min_radius), steps)
