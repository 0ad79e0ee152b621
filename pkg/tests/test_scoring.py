import math

import pytest
from hypothesis import given, settings, strategies as st

from src.engine.constants import YEAR_DAYS
from src.engine.exceptions import InfeasibleStayError
from src.engine.ledger import MiningLedger, ViolationKind
from src.engine.scoring import (
    BONUS_MODEL,
    BonusMode,
    BonusModel,
    FleetRule,
    MiningRule,
    bonus,
    max_ship_count,
    mining_cap,
    score,
)

T = 65000.0


def mined(ledger: MiningLedger, asteroid_id: int, years: float, mass: float, ship_id: int = 1, unload: bool = True) -> None:
    ledger.record_deploy(asteroid_id, T, ship_id)
    ledger.record_retrieve(asteroid_id, T + years * YEAR_DAYS, ship_id, mass)
    if unload:
        ledger.record_unload([asteroid_id], T + years * YEAR_DAYS + 200.0, ship_id)


class TestMiningCap:
    @pytest.mark.parametrize("stay, cap", [(1.0, 10.0), (2.5, 25.0), (12.0, 120.0)])
    def test_linear_in_stay(self, stay, cap):
        assert mining_cap(stay) == pytest.approx(cap)

    def test_short_stay_is_infeasible(self):
        with pytest.raises(InfeasibleStayError):
            mining_cap(0.9)

    def test_negative_stay(self):
        with pytest.raises(ValueError):
            mining_cap(-1.0)

    def test_custom_rule(self):
        assert mining_cap(0.5, MiningRule(rate_k=4.0, min_stay=0.5)) == pytest.approx(2.0)


class TestBonus:
    dynamic = BonusModel(mode=BonusMode.DYNAMIC)

    def test_static_is_constant(self):
        assert BONUS_MODEL.mode is BonusMode.STATIC
        assert bonus(BONUS_MODEL, 0.0) == bonus(BONUS_MODEL, 5000.0) == 1.0

    def test_dynamic_starts_at_one(self):
        assert bonus(self.dynamic, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_dynamic_value(self):
        expected = (1.0 + 2.0 * (1.0 + 0.05 * 1000.0) ** -0.1) / 3.0
        assert bonus(self.dynamic, 1000.0) == pytest.approx(expected, abs=1e-12)
        assert bonus(self.dynamic, 1000.0) == pytest.approx(0.7833, abs=1e-4)

    def test_mode_accepts_text(self):
        assert BonusModel(mode="dynamic").mode is BonusMode.DYNAMIC

    def test_negative_total(self):
        with pytest.raises(ValueError):
            bonus(self.dynamic, -1.0)

    @given(low=st.floats(min_value=0.0, max_value=1e5), extra=st.floats(min_value=0.0, max_value=1e5))
    @settings(max_examples=200, deadline=None)
    def test_dynamic_decreases_towards_a_third(self, low, extra):
        a, b = bonus(self.dynamic, low), bonus(self.dynamic, low + extra)
        assert b <= a + 1e-15
        assert 1.0 / 3.0 < b <= 1.0


class TestMaxShipCount:
    @pytest.mark.parametrize(
        "average, ships",
        [(0.0, 2), (100.0, 2), (300.0, 6), (500.0, 14), (700.0, 32), (900.0, 73), (1000.0, 100), (1e6, 100)],
    )
    def test_table(self, average, ships):
        assert max_ship_count(average) == ships

    def test_custom_rule(self):
        assert max_ship_count(250.0, FleetRule(rho=0.002, hard_cap=10)) == math.floor(2.0 * math.exp(0.5))

    def test_negative_average(self):
        with pytest.raises(ValueError):
            max_ship_count(-5.0)

    @given(low=st.floats(min_value=0.0, max_value=5000.0), extra=st.floats(min_value=0.0, max_value=5000.0))
    @settings(max_examples=200, deadline=None)
    def test_monotonic_and_bounded(self, low, extra):
        small, large = max_ship_count(low), max_ship_count(low + extra)
        assert 2 <= small <= large <= 100


class TestScore:
    def test_unloaded_mass_counts(self):
        ledger = MiningLedger()
        mined(ledger, 11, 10.0, 100.0)
        mined(ledger, 12, 5.0, 50.0)
        breakdown = score(ledger, ship_count=1)
        assert breakdown.total_j == pytest.approx(150.0)
        assert breakdown.average_mass == pytest.approx(150.0)
        assert breakdown.max_ships_allowed == 3
        assert breakdown.fleet_ok
        assert breakdown.cap_breaches == ()
        assert [entry.asteroid_id for entry in breakdown.per_asteroid] == [11, 12]

    def test_mass_still_aboard_scores_nothing(self):
        ledger = MiningLedger()
        mined(ledger, 11, 3.0, 25.0, unload=False)
        breakdown = score(ledger, ship_count=1)
        assert breakdown.total_j == 0.0
        (entry,) = breakdown.per_asteroid
        assert entry.collected == 25.0 and not entry.unloaded

    def test_empty_ledger(self):
        breakdown = score(MiningLedger(), ship_count=2)
        assert breakdown.total_j == 0.0
        assert breakdown.max_ships_allowed == 2
        assert breakdown.fleet_ok

    def test_too_many_ships(self):
        assert not score(MiningLedger(), ship_count=3).fleet_ok

    def test_cap_breach_reported(self):
        ledger = MiningLedger()
        mined(ledger, 7, 2.0, 25.0)
        breakdown = score(ledger, ship_count=1)
        (breach,) = breakdown.cap_breaches
        assert breach.collected == 25.0
        assert breach.cap == pytest.approx(20.0)
        assert breakdown.total_j == pytest.approx(25.0)

    def test_cap_slack(self):
        ledger = MiningLedger()
        mined(ledger, 7, 2.0, 20.0005)
        assert score(ledger, ship_count=1, cap_slack=0.001).cap_breaches == ()

    def test_dynamic_bonus_scales_every_asteroid(self):
        ledger = MiningLedger()
        mined(ledger, 1, 4.0, 40.0)
        mined(ledger, 2, 6.0, 60.0, ship_id=2)
        model = BonusModel(mode=BonusMode.DYNAMIC)
        breakdown = score(ledger, model, ship_count=2)
        factor = bonus(model, 100.0)
        assert breakdown.total_j == pytest.approx(100.0 * factor)
        assert all(entry.bonus == factor for entry in breakdown.per_asteroid)


class TestMiningLedger:
    def test_clean_campaign_resolves(self):
        ledger = MiningLedger()
        mined(ledger, 5, 1.5, 13.5)
        assert ledger.resolve(1.0) == []
        record = ledger.get(5)
        assert record.stay_years == pytest.approx(1.5)
        assert ledger.total_retrieved == ledger.total_unloaded == 13.5

    def test_merge_joins_ships(self):
        first, second = MiningLedger(), MiningLedger()
        first.record_deploy(9, T, 1)
        second.record_retrieve(9, T + 2.0 * YEAR_DAYS, 2, 18.0)
        first.merge(second)
        assert first.resolve(1.0) == []
        assert first.get(9).collected_mass == 18.0
        assert first.total_unloaded == 0.0

    def test_second_miner_on_same_asteroid(self):
        ledger = MiningLedger()
        ledger.record_deploy(9, T, 1)
        ledger.record_deploy(9, T + 10.0, 2)
        (violation,) = ledger.resolve(1.0)
        assert violation.kind is ViolationKind.STRUCTURAL
        assert violation.ship_id == 2

    def test_mined_twice(self):
        ledger = MiningLedger()
        ledger.record_deploy(9, T, 1)
        ledger.record_retrieve(9, T + 400.0, 1, 10.0)
        ledger.record_retrieve(9, T + 800.0, 2, 5.0)
        assert ViolationKind.STRUCTURAL in [violation.kind for violation in ledger.resolve(1.0)]

    def test_retrieve_without_deploy(self):
        ledger = MiningLedger()
        ledger.record_retrieve(9, T, 1, 10.0)
        (violation,) = ledger.resolve(1.0)
        assert violation.kind is ViolationKind.STRUCTURAL

    def test_retrieve_before_deploy(self):
        ledger = MiningLedger()
        ledger.record_retrieve(9, T, 1, 10.0)
        ledger.record_deploy(9, T + 500.0, 2)
        (violation,) = ledger.resolve(1.0)
        assert violation.kind is ViolationKind.STRUCTURAL

    def test_short_stay(self):
        ledger = MiningLedger()
        mined(ledger, 3, 0.5, 4.0)
        (violation,) = ledger.resolve(1.0)
        assert violation.kind is ViolationKind.MINING_DURATION
        assert violation.measured == pytest.approx(0.5)
        assert violation.limit == 1.0

    @pytest.mark.parametrize("factor, found", [(0.99, [ViolationKind.MINING_DURATION]), (1.01, [])])
    def test_stay_tolerance_edge(self, factor, found):
        ledger = MiningLedger()
        mined(ledger, 3, factor, 9.0)
        assert [violation.kind for violation in ledger.resolve(1.0)] == found

    def test_deploy_only_is_fine(self):
        ledger = MiningLedger()
        ledger.record_deploy(3, T, 1)
        assert ledger.resolve(1.0) == []
        assert score(ledger, ship_count=1).per_asteroid == ()
