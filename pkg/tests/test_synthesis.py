import pytest

from src.engine.catalog import MAX_ASTEROID_ID, AsteroidCatalog
from src.engine.exceptions import SynthesisError
from src.engine.ledger import ViolationKind
from src.engine.scoring import BonusMode, BonusModel, MiningRule, bonus
from src.engine.solution import Flyby, Rendezvous, parse_solution, serialize_solution
from src.engine.verifier import TOLERANCES, ValidatorConfig, validate_solution
from src.harness.synthesis import (
    PerturbationKind,
    SynthesisSpec,
    ThrustDirection,
    ThrustProgram,
    find_rendezvous,
    perturb_solution,
    plant_asteroids,
    shift_event_epoch,
    synthesize_solution,
)


def mining_case(spec: SynthesisSpec):
    catalog, assigned = plant_asteroids(spec, AsteroidCatalog())
    return catalog, assigned, synthesize_solution(spec, catalog)


@pytest.fixture(scope="module")
def miner():
    return mining_case(SynthesisSpec(ships=1, mining=1, seed=3))


class TestSynthesizeSolution:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_launch_only_ships_validate(self, seed):
        doc = synthesize_solution(SynthesisSpec(ships=2, seed=seed))
        report = validate_solution(doc, AsteroidCatalog())
        assert report.valid, [str(v) for v in report.violations]
        assert report.score.total_j == 0.0
        assert report.ship_count == 2

    def test_burn_ship_validates(self):
        doc = synthesize_solution(SynthesisSpec(ships=1, burns_per_leg=1, seed=5))
        assert len(doc.ships[0].events) == 2
        report = validate_solution(doc, AsteroidCatalog())
        assert report.valid, [str(v) for v in report.violations]

    def test_tangential_burns_validate(self):
        program = ThrustProgram(burn_days=12.5, coast_days=15.0, thrust=0.4, direction=ThrustDirection.TANGENTIAL)
        doc = synthesize_solution(SynthesisSpec(ships=1, burns_per_leg=2, seed=9, thrust_program=program))
        arcs = doc.ships[0].events[1:]
        assert len(arcs) == 2
        assert arcs[0].end == pytest.approx(arcs[0].start + 12.5)
        assert validate_solution(doc, AsteroidCatalog()).valid

    def test_mining_ship_scores(self, miner):
        catalog, assigned, doc = miner
        events = doc.ships[0].events
        assert [type(event) for event in events[1:]] == [Rendezvous, Rendezvous, Flyby]
        assert events[1].asteroid_id == assigned[1] == 60000
        report = validate_solution(doc, catalog)
        assert report.valid, [str(v) for v in report.violations]
        assert report.score.total_j > 0.0
        assert report.score.total_j == pytest.approx(report.ledger.total_unloaded)
        record = report.ledger.get(assigned[1])
        assert 1.05 <= record.stay_years <= 1.5
        assert record.collected_mass == pytest.approx(9.0 * record.stay_years, rel=1e-9)
        residual = report.per_ship_residuals[1]
        assert residual.position < 1e-6 and residual.velocity < 1e-9 and residual.mass < 1e-9

    def test_two_miners_in_parallel(self):
        spec = SynthesisSpec(ships=2, mining=2, seed=11)
        catalog, assigned, doc = mining_case(spec)
        assert sorted(assigned.values()) == [59999, 60000]
        serial = validate_solution(doc, catalog)
        parallel = validate_solution(doc, catalog, ValidatorConfig(workers=4))
        assert serial.valid and parallel.valid
        assert serial.score.total_j == parallel.score.total_j
        assert serial.kinds() == parallel.kinds()

    def test_dynamic_bonus(self, miner):
        catalog, _, doc = miner
        model = BonusModel(mode=BonusMode.DYNAMIC)
        report = validate_solution(doc, catalog, ValidatorConfig(bonus=model))
        mined = report.ledger.total_unloaded
        assert report.score.total_j == pytest.approx(bonus(model, mined) * mined)

    def test_lower_mining_rate_breaks_cap(self, miner):
        catalog, _, doc = miner
        report = validate_solution(doc, catalog, ValidatorConfig(mining=MiningRule(rate_k=5.0)))
        assert report.kinds() == [ViolationKind.MINING_CAP]

    def test_without_planted_asteroid(self, small_catalog):
        with pytest.raises(SynthesisError):
            synthesize_solution(SynthesisSpec(ships=1, mining=1), small_catalog)

    def test_full_catalog_replaces_highest_ids(self, full_catalog):
        spec = SynthesisSpec(ships=2, mining=2, seed=11)
        catalog, assigned = plant_asteroids(spec, full_catalog)
        assert len(catalog) == len(full_catalog) == MAX_ASTEROID_ID
        assert sorted(assigned.values()) == [59999, 60000]
        assert catalog.elements(60000) != full_catalog.elements(60000)
        assert catalog.elements(1) == full_catalog.elements(1)
        report = validate_solution(synthesize_solution(spec, catalog), catalog)
        assert report.valid, [str(v) for v in report.violations]

    def test_free_ids_used_before_replacing(self, small_catalog):
        catalog, assigned = plant_asteroids(SynthesisSpec(ships=1, mining=1, seed=3), small_catalog)
        assert assigned == {1: 60000}
        assert len(catalog) == len(small_catalog) + 1

    def test_fleet_cap(self):
        with pytest.raises(SynthesisError):
            synthesize_solution(SynthesisSpec(ships=3))
        doc = synthesize_solution(SynthesisSpec(ships=3, enforce_fleet_cap=False))
        assert validate_solution(doc, AsteroidCatalog()).kinds() == [ViolationKind.FLEET_SIZE]

    @pytest.mark.parametrize("spec", [SynthesisSpec(ships=0), SynthesisSpec(ships=1, mining=2)])
    def test_bad_spec(self, spec):
        with pytest.raises(SynthesisError):
            synthesize_solution(spec)

    def test_deterministic(self):
        spec = SynthesisSpec(ships=2, burns_per_leg=1, seed=21)
        assert serialize_solution(synthesize_solution(spec)) == serialize_solution(synthesize_solution(spec))

    def test_serialized_text_parses_back(self, miner):
        _, _, doc = miner
        assert parse_solution(serialize_solution(doc)) == doc


class TestFindRendezvous:
    def test_finds_planted_asteroid(self, miner):
        catalog, assigned, doc = miner
        arrival = doc.ships[0].events[1].before.state()
        assert find_rendezvous(catalog, arrival) == assigned[1]
        assert find_rendezvous(catalog, arrival, exclude=[assigned[1]]) is None

    def test_empty_catalog(self, circular_state):
        assert find_rendezvous(AsteroidCatalog(), circular_state) is None


class TestPerturbSolution:
    @pytest.mark.parametrize(
        "kind, magnitude, expected",
        [
            (PerturbationKind.POSITION, 1500.0, ViolationKind.RENDEZVOUS_POS),
            (PerturbationKind.VELOCITY, 0.002, ViolationKind.RENDEZVOUS_VEL),
            (PerturbationKind.MASS, 0.01, ViolationKind.MASS_DISCONTINUITY),
        ],
    )
    def test_one_violation_of_the_matching_kind(self, miner, kind, magnitude, expected):
        catalog, _, doc = miner
        report = validate_solution(perturb_solution(doc, kind, magnitude, seed=4), catalog)
        assert report.kinds() == [expected]

    @pytest.mark.parametrize(
        "kind, magnitude",
        [(PerturbationKind.POSITION, 500.0), (PerturbationKind.VELOCITY, 0.0005), (PerturbationKind.MASS, 0.0005)],
    )
    def test_half_tolerance_stays_valid(self, miner, kind, magnitude):
        catalog, _, doc = miner
        assert validate_solution(perturb_solution(doc, kind, magnitude, seed=4), catalog).valid

    @pytest.mark.parametrize("seed", range(50))
    def test_seeded_oracle(self, full_catalog, seed):
        spec = SynthesisSpec(ships=2, mining=1, burns_per_leg=1, seed=seed)
        catalog, _ = plant_asteroids(spec, full_catalog)
        doc = synthesize_solution(spec, catalog)
        assert validate_solution(doc, catalog).valid
        for kind, magnitude, expected in (
            (PerturbationKind.POSITION, 2000.0, ViolationKind.RENDEZVOUS_POS),
            (PerturbationKind.VELOCITY, 0.002, ViolationKind.RENDEZVOUS_VEL),
            (PerturbationKind.MASS, 0.002, ViolationKind.MASS_DISCONTINUITY),
        ):
            assert validate_solution(perturb_solution(doc, kind, magnitude, seed), catalog).kinds() == [expected]
            half_tolerance = perturb_solution(doc, kind, magnitude / 4.0, seed)
            assert validate_solution(half_tolerance, catalog).valid

    def test_original_untouched(self, miner):
        _, _, doc = miner
        before = serialize_solution(doc)
        perturb_solution(doc, "position", 2000.0)
        assert serialize_solution(doc) == before

    def test_shifted_deploy_breaks_the_leg(self, miner):
        catalog, _, doc = miner
        shifted = shift_event_epoch(doc, 1, 1, 2.0)
        assert shifted.ships[0].events[1].t == pytest.approx(doc.ships[0].events[1].t + 2.0)
        report = validate_solution(shifted, catalog)
        assert ViolationKind.PROPAGATION_RESIDUAL in report.kinds()
        assert report.per_ship_residuals[1].position > TOLERANCES.pos
