#!/usr/bin/env python3
from dataclasses import dataclass
from typing import List, Optional, Sequence


class GTOCError(Exception):
    """Base class for every error raised by the engine."""


class CatalogError(GTOCError):

    def __init__(self, line: int, message: str) -> None:
        self.line = line
        self.message = message
        super().__init__(f"catalog line {line}: {message}")


class UnknownBodyError(GTOCError, KeyError):

    def __init__(self, body: object) -> None:
        self.body = body
        super().__init__(f"Unknown body: {body!r}")

    def __str__(self) -> str:
        return self.args[0]


class KeplerConvergenceError(GTOCError, ArithmeticError):

    def __init__(self, mean_anomaly: float, eccentricity: float) -> None:
        self.mean_anomaly = mean_anomaly
        self.eccentricity = eccentricity
        super().__init__(
            f"Kepler solver did not converge for M={mean_anomaly!r}, e={eccentricity!r}"
        )


class PropagationError(GTOCError):

    def __init__(self, message: str, epoch: Optional[float] = None) -> None:
        self.message = message
        self.epoch = epoch
        where = f" at MJD {epoch:.6f}" if epoch is not None else ""
        super().__init__(f"{message}{where}")


class HyperbolicStateError(PropagationError):
    """Coast requested for a state that is not bound to the Sun."""


class MassDepletedError(PropagationError):
    """Propellant use would drive the ship mass through zero."""


@dataclass(frozen=True)
class Diagnostic:
    line: int
    code: str
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: [{self.code}] {self.message}"


class SolutionFormatError(GTOCError):

    def __init__(self, diagnostics: Sequence[Diagnostic]) -> None:
        self.diagnostics: List[Diagnostic] = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class InfeasibleStayError(GTOCError, ValueError):

    def __init__(self, stay_years: float, minimum: float) -> None:
        self.stay_years = stay_years
        self.minimum = minimum
        super().__init__(
            f"Stay of {stay_years:.6f} yr is shorter than the {minimum} yr minimum"
        )


class SynthesisError(GTOCError):
    """The requested synthesis cannot be met within the search limits."""
