#!/usr/bin/env python3
import os
import sys
import json
import argparse
from dataclasses import replace
from typing import List, Optional

from src.logger import setup_logger
from src.models import ScoreModel
from src.settings import BIND, CATALOG_PATH, WORKERS
from src.harness.service import ValidationService
from src.harness.server import serve_validate
from src.harness.synthesis import SynthesisSpec, ThrustProgram, plant_asteroids, synthesize_solution
from src.engine.exceptions import CatalogError, SynthesisError, UnknownBodyError
from src.engine.catalog import AsteroidCatalog, Planet, body_state, load_asteroid_catalog, parse_body, write_asteroid_catalog
from src.engine.scoring import BONUS_MODEL, BonusMode
from src.engine.solution import lint_solution, serialize_solution
from src.engine.verifier import TOLERANCES, ToleranceSet, ValidatorConfig

EXIT_VALID = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_CATALOG = 3
EXIT_UNKNOWN_BODY = 4
EXIT_SYNTHESIS = 5


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        self.code = code
        super().__init__(message)


# -----------------------------------------------------------------------------
# Shared plumbing
# -----------------------------------------------------------------------------
def _read(path: str) -> str:
    try:
        with open(path, "rb") as file:
            return file.read().decode("ascii", errors="replace")
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot read {path}: {e.strerror or e}") from e


def _catalog(path: str) -> AsteroidCatalog:
    try:
        return load_asteroid_catalog(path)
    except OSError as e:
        raise CliError(EXIT_CATALOG, f"catalog error: cannot read {path}: {e.strerror or e}") from e
    except CatalogError as e:
        raise CliError(EXIT_CATALOG, f"catalog error: {e}") from e


def _config(args: argparse.Namespace) -> ValidatorConfig:
    return ValidatorConfig(
        tolerances=ToleranceSet(pos=args.pos_tol, vel=args.vel_tol, mass=args.mass_tol),
        bonus=replace(BONUS_MODEL, mode=BonusMode(args.mode)),
        workers=args.workers,
    )


def _add_validation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("path", help="Solution file")
    parser.add_argument("--catalog", default=CATALOG_PATH, help="Asteroid data file")
    parser.add_argument("--json", action="store_true", help="Print the JSON response")
    parser.add_argument("--mode", choices=[mode.value for mode in BonusMode], default=str(BONUS_MODEL.mode))
    parser.add_argument("--pos-tol", type=float, default=TOLERANCES.pos, help="Position tolerance (km)")
    parser.add_argument("--vel-tol", type=float, default=TOLERANCES.vel, help="Velocity tolerance (km/s)")
    parser.add_argument("--mass-tol", type=float, default=TOLERANCES.mass, help="Mass tolerance (kg)")
    parser.add_argument("--workers", type=int, default=WORKERS, help="Ships validated in parallel")


# -----------------------------------------------------------------------------
# Commands
# -----------------------------------------------------------------------------
def cli_validate(args: argparse.Namespace) -> int:
    text = _read(args.path)
    service = ValidationService(_catalog(args.catalog), _config(args))
    response = service.validate_text(text)
    if args.json:
        print(response.model_dump_json(indent=2))
    else:
        print(response.message)
        for violation in response.violations:
            print(f"  {violation.kind}: {violation.message}")
    return EXIT_VALID if response.valid else EXIT_INVALID


def cli_score(args: argparse.Namespace) -> int:
    text = _read(args.path)
    service = ValidationService(_catalog(args.catalog), _config(args))
    report, response = service.run(text)
    if report is None:
        print(response.message)
        return EXIT_INVALID

    breakdown = ScoreModel.from_breakdown(report.score)
    if args.json:
        print(breakdown.model_dump_json(indent=2))
    else:
        print(f"{'asteroid':>8} {'collected':>12} {'cap':>12} {'bonus':>8} {'J':>12}  unloaded")
        for entry in breakdown.per_asteroid:
            print(
                f"{entry.asteroid_id:>8} {entry.collected:>12.6f} {entry.cap:>12.6f} "
                f"{entry.bonus:>8.5f} {entry.contribution:>12.6f}  {'yes' if entry.unloaded else 'no'}"
            )
        print(f"J = {breakdown.total_j:.6f} kg")
        print(f"ships {breakdown.ship_count} / {breakdown.max_ships_allowed} allowed (mean {breakdown.average_mass:.3f} kg)")
        print(response.message)
    return EXIT_VALID if response.valid else EXIT_INVALID


def cli_serve(args: argparse.Namespace) -> int:
    serve_validate(args.bind, _catalog(args.catalog), ValidatorConfig(workers=args.workers))
    return EXIT_VALID


def cli_ephem(args: argparse.Namespace) -> int:
    try:
        body = parse_body(args.body)
        catalog = None if isinstance(body, Planet) else _catalog(args.catalog)
        state = body_state(body, args.epoch, catalog)
    except UnknownBodyError as e:
        raise CliError(EXIT_UNKNOWN_BODY, str(e)) from e

    name = body.name.capitalize() if isinstance(body, Planet) else f"asteroid {body}"
    if args.json:
        print(json.dumps({"body": name, "epoch": args.epoch, "r": state.r.tolist(), "v": state.v.tolist()}))
    else:
        print(f"{name} at MJD {args.epoch}")
        print("r = " + " ".join(f"{x:.9e}" for x in state.r) + " km")
        print("v = " + " ".join(f"{x:.9e}" for x in state.v) + " km/s")
    return EXIT_VALID


def cli_synth(args: argparse.Namespace) -> int:
    spec = SynthesisSpec(
        ships=args.ships,
        burns_per_leg=args.burns,
        seed=args.seed,
        thrust_program=ThrustProgram(burn_days=args.burn_days, direction=args.direction),
        mining=args.mining,
        enforce_fleet_cap=not args.no_fleet_cap,
    )
    catalog = AsteroidCatalog()
    if args.mining and (not args.planted_catalog or os.path.exists(args.catalog)):
        catalog = _catalog(args.catalog)
    try:
        if args.planted_catalog:
            catalog, _ = plant_asteroids(spec, catalog)
            with open(args.planted_catalog, "w", encoding="utf-8") as file:
                write_asteroid_catalog(catalog, file)
        text = serialize_solution(synthesize_solution(spec, catalog))
    except SynthesisError as e:
        raise CliError(EXIT_SYNTHESIS, f"synthesis failed: {e}") from e
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot write: {e.strerror or e}") from e

    if args.output == "-":
        sys.stdout.write(text)
        return EXIT_VALID
    try:
        with open(args.output, "w", encoding="ascii", newline="\n") as file:
            file.write(text)
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot write {args.output}: {e.strerror or e}") from e
    print(f"wrote {args.output}")
    return EXIT_VALID


def cli_lint(args: argparse.Namespace) -> int:
    for warning in lint_solution(_read(args.path)):
        print(warning)
    return EXIT_VALID


# -----------------------------------------------------------------------------
# Parser
# -----------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtoc12", description="GTOC 12 solution validator and scorer")
    parser.add_argument("--log-level", default="WARNING", help="Console log level")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="Check a solution file")
    _add_validation_flags(validate)
    validate.set_defaults(handler=cli_validate)

    score = commands.add_parser("score", help="Per-asteroid score breakdown")
    _add_validation_flags(score)
    score.set_defaults(handler=cli_score)

    serve = commands.add_parser("serve", help="Run the HTTP validation service")
    serve.add_argument("--bind", default=BIND, help="host:port")
    serve.add_argument("--catalog", default=CATALOG_PATH, help="Asteroid data file")
    serve.add_argument("--workers", type=int, default=WORKERS)
    serve.set_defaults(handler=cli_serve)

    ephem = commands.add_parser("ephem", help="State of a planet or asteroid")
    ephem.add_argument("body", help="venus, earth, mars, -2..-4 or an asteroid ID")
    ephem.add_argument("epoch", type=float, help="MJD")
    ephem.add_argument("--catalog", default=CATALOG_PATH, help="Asteroid data file")
    ephem.add_argument("--json", action="store_true")
    ephem.set_defaults(handler=cli_ephem)

    synth = commands.add_parser("synth", help="Write a valid-by-construction solution")
    synth.add_argument("output", help="Output file, - for stdout")
    synth.add_argument("--ships", type=int, default=1)
    synth.add_argument("--burns", type=int, default=0, help="Burn arcs per ship")
    synth.add_argument("--burn-days", type=float, default=30.0)
    synth.add_argument("--direction", choices=["random", "tangential"], default="random")
    synth.add_argument("--mining", type=int, default=0, help="Ships that deploy, retrieve and unload")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--catalog", default=CATALOG_PATH, help="Asteroid data file")
    synth.add_argument("--planted-catalog", help="Plant asteroids for the mining ships and write the catalog here")
    synth.add_argument("--no-fleet-cap", action="store_true", help="Allow more ships than the fleet rule permits")
    synth.set_defaults(handler=cli_synth)

    lint = commands.add_parser("lint", help="Formatting warnings")
    lint.add_argument("path")
    lint.set_defaults(handler=cli_lint)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logger(args.log_level)
    try:
        return args.handler(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
