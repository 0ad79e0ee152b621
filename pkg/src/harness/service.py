#!/usr/bin/env python3
import logging
from typing import Optional, Tuple

from src.models import ValidateResponse, ViolationModel
from src.engine.catalog import AsteroidCatalog
from src.engine.exceptions import SolutionFormatError
from src.engine.ledger import Violation, ViolationKind
from src.engine.solution import parse_solution
from src.engine.verifier import ValidationReport, ValidatorConfig, validate_solution

logger = logging.getLogger("gtoc12")


class ValidationService:
    """Shared text -> ValidateResponse path behind the CLI and the HTTP server."""

    def __init__(self, catalog: AsteroidCatalog, config: ValidatorConfig = ValidatorConfig()) -> None:
        self.catalog = catalog
        self.config = config

    # -------------------------------------------------------------------------
    # Entry points
    # -------------------------------------------------------------------------
    def validate_bytes(self, data: bytes) -> ValidateResponse:
        return self.validate_text(data.decode("ascii", errors="replace"))

    def validate_text(self, text: str) -> ValidateResponse:
        return self.run(text)[1]

    def run(self, text: str) -> Tuple[Optional[ValidationReport], ValidateResponse]:
        """Report (None when the file does not parse) and its response envelope."""
        try:
            doc = parse_solution(text)
        except SolutionFormatError as error:
            violations = [
                Violation(ViolationKind.STRUCTURAL, None, None, 0.0, 0.0, str(diagnostic))
                for diagnostic in error.diagnostics
            ]
            logger.info(f"Rejected unparsable solution: {len(violations)} diagnostic(s)")
            return None, self._response(violations, 0.0, 0, 0)

        report = validate_solution(doc, self.catalog, self.config)
        breakdown = report.score
        return report, self._response(
            report.violations,
            breakdown.total_j if breakdown else 0.0,
            report.ship_count,
            breakdown.max_ships_allowed if breakdown else 0,
        )

    # -------------------------------------------------------------------------
    # Envelope
    # -------------------------------------------------------------------------
    @staticmethod
    def _response(violations, score: float, ship_count: int, max_ships: int) -> ValidateResponse:
        valid = not violations
        if valid:
            message = f"VALID J={score:.6f}"
        else:
            message = f"INVALID: {len(violations)} violation(s); first: {violations[0]}"
        return ValidateResponse(
            valid=valid,
            score=score if valid else 0.0,
            ship_count=ship_count,
            max_ships_allowed=max_ships,
            violations=[ViolationModel.from_violation(violation) for violation in violations],
            message=message,
        )
