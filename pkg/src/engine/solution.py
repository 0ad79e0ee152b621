#!/usr/bin/env python3
"""
GTOC 12 solution file: parser, serializer and linter.

One line per record, "ship event t ..." with single spaces. Event 0 is a
launch, -1 a burn-arc sample, -2/-3/-4 a Venus/Earth/Mars flyby and a
positive event an asteroid rendezvous. Every event other than a burn is
written as two lines, the state just before and just after it.
"""
from __future__ import annotations

import re
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .state import StateVector
from .catalog import MAX_ASTEROID_ID, Planet
from .propagation import ThrustProfile
from .constants import in_mission_window
from .exceptions import Diagnostic, SolutionFormatError

LAUNCH_EVENT = 0
BURN_EVENT = -1

EPOCH_MATCH = 1e-9  # days
SAMPLE_SPACING = 1.0  # days
SPACING_TOL = 1e-6  # days
MIN_PRECISION = 10  # significant digits

_INT = re.compile(r"^[+-]?\d{1,9}$")
_REAL = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


# -----------------------------------------------------------------------------
# Records
# -----------------------------------------------------------------------------
Vector3 = Tuple[float, float, float]


@dataclass(frozen=True)
class StateRecord:
    t: float
    r: Vector3
    v: Vector3
    m: float

    def state(self) -> StateVector:
        return StateVector(self.r, self.v, self.t, self.m)

    def values(self) -> Tuple[float, ...]:
        return (self.t, *self.r, *self.v, self.m)


@dataclass(frozen=True)
class BurnRecord:
    t: float
    thrust: Vector3

    @property
    def is_zero(self) -> bool:
        return not any(self.thrust)

    def values(self) -> Tuple[float, ...]:
        return (self.t, *self.thrust)


@dataclass(frozen=True)
class EventLine:
    ship_id: int
    event_id: int
    payload: Union[StateRecord, BurnRecord]
    line_no: int = field(default=0, compare=False)

    @property
    def t(self) -> float:
        return self.payload.t


# -----------------------------------------------------------------------------
# Events
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class PairedEvent:
    pre: EventLine
    post: EventLine

    @property
    def t(self) -> float:
        return self.pre.t

    @property
    def lines(self) -> Tuple[EventLine, ...]:
        return (self.pre, self.post)

    @property
    def before(self) -> StateRecord:
        return self.pre.payload

    @property
    def after(self) -> StateRecord:
        return self.post.payload


@dataclass(frozen=True)
class Launch(PairedEvent):
    pass


@dataclass(frozen=True)
class Flyby(PairedEvent):
    @property
    def planet(self) -> Planet:
        return Planet(self.pre.event_id)


@dataclass(frozen=True)
class Rendezvous(PairedEvent):
    @property
    def asteroid_id(self) -> int:
        return self.pre.event_id


@dataclass(frozen=True)
class BurnArc:
    """Zero-thrust line, interior samples, zero-thrust line."""

    lines: Tuple[EventLine, ...]

    @property
    def start(self) -> float:
        return self.lines[0].t

    @property
    def end(self) -> float:
        return self.lines[-1].t

    @property
    def t(self) -> float:
        return self.start

    def profile(self) -> ThrustProfile:
        return ThrustProfile.from_samples(
            (line.payload.t, line.payload.thrust) for line in self.lines[1:-1]
        )


Event = Union[Launch, BurnArc, Flyby, Rendezvous]


@dataclass(frozen=True)
class ShipSection:
    ship_id: int
    events: Tuple[Event, ...]

    @property
    def launch(self) -> Launch:
        return self.events[0]

    @property
    def lines(self) -> List[EventLine]:
        return [line for event in self.events for line in event.lines]


@dataclass(frozen=True)
class SolutionDocument:
    ships: Tuple[ShipSection, ...]

    @property
    def line_index(self) -> Dict[Tuple[int, int], int]:
        """(ship_id, event position) -> first source line of the event."""
        return {
            (ship.ship_id, position): event.lines[0].line_no
            for ship in self.ships
            for position, event in enumerate(ship.events)
        }

    @property
    def lines(self) -> List[EventLine]:
        return [line for ship in self.ships for line in ship.lines]


# -----------------------------------------------------------------------------
# Parsing
# -----------------------------------------------------------------------------
def _parse_line(line_no: int, text: str, diagnostics: List[Diagnostic]) -> Optional[EventLine]:
    tokens = text.split()
    if len(tokens) < 2 or not (_INT.match(tokens[0]) and _INT.match(tokens[1])):
        diagnostics.append(Diagnostic(line_no, "non-numeric token", "line must start with ship ID and event ID integers"))
        return None

    ship_id, event_id = int(tokens[0]), int(tokens[1])
    if ship_id < 1:
        diagnostics.append(Diagnostic(line_no, "ship id", f"ship ID {ship_id} must be positive"))
        return None
    if not -4 <= event_id <= MAX_ASTEROID_ID:
        diagnostics.append(Diagnostic(line_no, "event id", f"event ID {event_id} outside -4..{MAX_ASTEROID_ID}"))
        return None

    expected = 6 if event_id == BURN_EVENT else 10
    if len(tokens) != expected:
        diagnostics.append(
            Diagnostic(line_no, "field count", f"event {event_id} needs {expected} fields, found {len(tokens)}")
        )
        return None

    values = []
    for token in tokens[2:]:
        value = float(token) if _REAL.match(token) else math.nan
        if not math.isfinite(value):
            diagnostics.append(Diagnostic(line_no, "non-numeric token", f"{token!r} is not a finite real number"))
            return None
        values.append(value)

    if event_id == BURN_EVENT:
        payload = BurnRecord(values[0], tuple(values[1:4]))
    else:
        payload = StateRecord(values[0], tuple(values[1:4]), tuple(values[4:7]), values[7])
    return EventLine(ship_id, event_id, payload, line_no)


class _SectionParser:
    """Groups the lines of one ship into events."""

    def __init__(self, lines: List[EventLine], diagnostics: List[Diagnostic]) -> None:
        self.lines = lines
        self.diagnostics = diagnostics
        self.position = 0

    def report(self, line: EventLine, code: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(line.line_no, code, message))

    def parse(self) -> ShipSection:
        first = self.lines[0]
        if first.event_id != LAUNCH_EVENT:
            self.report(first, "section start", f"ship {first.ship_id} must start with event 0")

        for previous, line in zip(self.lines, self.lines[1:]):
            if line.t < previous.t - EPOCH_MATCH:
                self.report(line, "epoch order", f"epoch {line.t} earlier than {previous.t} on line {previous.line_no}")

        events: List[Event] = []
        while self.position < len(self.lines):
            line = self.lines[self.position]
            event = self._burn_arc() if line.event_id == BURN_EVENT else self._paired()
            if event is None:
                continue
            if isinstance(event, Launch) and events:
                self.report(line, "duplicate launch", "event 0 is only allowed as the first event")
            events.append(event)
        return ShipSection(first.ship_id, tuple(events))

    def _paired(self) -> Optional[Event]:
        pre = self.lines[self.position]
        post = self.lines[self.position + 1] if self.position + 1 < len(self.lines) else None
        if post is None or post.event_id != pre.event_id or abs(post.t - pre.t) > EPOCH_MATCH:
            self.report(pre, "unpaired event", f"event {pre.event_id} needs a second line with the same epoch")
            self.position += 1
            return None
        self.position += 2
        if pre.event_id == LAUNCH_EVENT:
            return Launch(pre, post)
        if pre.event_id < 0:
            return Flyby(pre, post)
        return Rendezvous(pre, post)

    def _burn_arc(self) -> Optional[BurnArc]:
        start = self.position
        first = self.lines[start]
        if not first.payload.is_zero:
            self.report(first, "burn boundary", "burn arc must open with a zero-thrust line")

        end = None
        index = start + 1
        while index < len(self.lines) and self.lines[index].event_id == BURN_EVENT:
            line, previous = self.lines[index], self.lines[index - 1]
            if index >= start + 2 and line.payload.is_zero and abs(line.t - previous.t) <= EPOCH_MATCH:
                end = index
                break
            index += 1

        if end is None:
            self.report(first, "burn boundary", "burn arc has no closing zero-thrust line")
            self.position = index
            return None
        self.position = end + 1

        arc = BurnArc(tuple(self.lines[start : end + 1]))
        if len(arc.lines) < 4:
            self.report(first, "burn arc", "burn arc needs at least two thrust samples")
            return None
        if abs(arc.lines[1].t - first.t) > EPOCH_MATCH:
            self.report(arc.lines[1], "burn boundary", "first thrust sample must share the opening epoch")
            return None

        interior = arc.lines[1:-1]
        for index, (previous, line) in enumerate(zip(interior, interior[1:]), start=1):
            gap = line.t - previous.t
            last = index == len(interior) - 1
            if abs(gap - SAMPLE_SPACING) <= SPACING_TOL:
                continue
            if last and 0.0 < gap <= SAMPLE_SPACING + SPACING_TOL:
                continue
            self.report(line, "burn spacing", f"thrust samples {gap:.9f} days apart, expected 1 day")
            return None
        return arc


def _split_text(text: str) -> Tuple[List[str], List[Diagnostic]]:
    lines = [raw[:-1] if raw.endswith("\r") else raw for raw in text.split("\n")]
    if lines and lines[-1] == "":
        lines.pop()

    diagnostics = []
    last_data = max((i for i, line in enumerate(lines) if line.strip()), default=-1)
    if 0 <= last_data < len(lines) - 1:
        blank = last_data + 2
        diagnostics.append(
            Diagnostic(blank, "trailing newline", f"blank line {blank} after the last data line")
        )
    for index, line in enumerate(lines[: last_data + 1]):
        if not line.strip():
            diagnostics.append(Diagnostic(index + 1, "blank line", "blank line inside the solution"))
    return lines[: last_data + 1], diagnostics


def parse_solution(text: str) -> SolutionDocument:
    """
    Parse a solution file, collecting every diagnostic before failing.

    Raises SolutionFormatError and nothing else.
    """
    raw_lines, diagnostics = _split_text(text)

    parsed: List[EventLine] = []
    for index, raw in enumerate(raw_lines):
        if raw.strip():
            line = _parse_line(index + 1, raw, diagnostics)
            if line is not None:
                parsed.append(line)

    if not raw_lines:
        raise SolutionFormatError([Diagnostic(1, "no ship sections", "no ship sections")] + diagnostics)

    sections: List[List[EventLine]] = []
    for line in parsed:
        if sections and sections[-1][0].ship_id == line.ship_id:
            sections[-1].append(line)
            continue
        expected = len(sections) + 1
        if line.ship_id != expected:
            diagnostics.append(
                Diagnostic(line.line_no, "ship order", f"ship ID {line.ship_id} found where ship {expected} was expected")
            )
        sections.append([line])

    ships = tuple(_SectionParser(lines, diagnostics).parse() for lines in sections)
    if diagnostics:
        raise SolutionFormatError(sorted(diagnostics, key=lambda d: d.line))
    return SolutionDocument(ships)


# -----------------------------------------------------------------------------
# Serialization
# -----------------------------------------------------------------------------
def format_real(value: float) -> str:
    text = f"{value:.15e}"
    return text if float(text) == value else f"{value:.16e}"


def format_line(line: EventLine) -> str:
    return " ".join([str(line.ship_id), str(line.event_id), *map(format_real, line.payload.values())])


def serialize_solution(doc: SolutionDocument) -> str:
    """Canonical text: single spaces, exponent reals, one final newline."""
    text = "\n".join(format_line(line) for line in doc.lines) + "\n"
    parse_solution(text)
    return text


# -----------------------------------------------------------------------------
# Lint
# -----------------------------------------------------------------------------
def significant_digits(token: str) -> int:
    mantissa = re.split(r"[eE]", token.lstrip("+-"))[0].replace(".", "")
    return len(mantissa.lstrip("0"))


def lint_solution(text: str) -> List[Diagnostic]:
    """Non-fatal hygiene warnings; never raises."""
    warnings: List[Diagnostic] = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        if raw.endswith("\r"):
            warnings.append(Diagnostic(line_no, "line ending", "CRLF line ending"))
            raw = raw[:-1]
        if not raw.strip():
            continue
        if "\t" in raw:
            warnings.append(Diagnostic(line_no, "spacing", "tab separator"))
        elif raw != raw.strip() or "  " in raw:
            warnings.append(Diagnostic(line_no, "spacing", "fields not separated by single spaces"))

        tokens = raw.split()
        if len(tokens) < 3 or not all(_REAL.match(token) for token in tokens[2:]):
            continue
        if not in_mission_window(float(tokens[2])):
            warnings.append(Diagnostic(line_no, "window", f"epoch {tokens[2]} outside the mission window"))

        for token in tokens[3:]:
            if float(token) != 0.0 and significant_digits(token) < MIN_PRECISION:
                warnings.append(
                    Diagnostic(line_no, "precision", f"{token} has fewer than {MIN_PRECISION} significant digits")
                )
                break
    return warnings
