from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fleetq.errors import InvalidInputError
from fleetq.finance import (
    EV_FLEET,
    NISSAN_LEAF_IE,
    PRESETS,
    FLEET_MIX_IE_2013,
    EV_SUBSIDIES_2013,
    FleetComposition,
    Money,
    depreciation_schedule,
    fleet_cost_report,
    format_pct,
    preset_report,
    subsidy_table,
    weighted_fleet_price,
    zero_residual_cost_pct,
)

GOLF = Money.of(19995)
POLO = Money.of(14195)
PASSAT_ESTATE = Money.of(28870)


def eur(*units):
    return [Money.of(u) for u in units]


def report(m, price, rounding="truncate"):
    return fleet_cost_report(m, depreciation_schedule(price), EV_FLEET, NISSAN_LEAF_IE, rounding)


class TestMoney:
    def test_exact_cents(self):
        assert Money.of("0.10") + Money.of("0.20") == Money.of("0.30")
        assert str(Money.of(-1234.5)) == "-EUR 1,234.50"

    def test_sub_cent_rejected(self):
        with pytest.raises(InvalidInputError):
            Money.of("1.001")

    def test_currency_mismatch(self):
        with pytest.raises(InvalidInputError, match="currency mismatch"):
            Money.of(1) + Money.of(1, "GBP")

    def test_float_multiply_refused(self):
        with pytest.raises(TypeError):
            Money.of(1) * 0.5

    def test_millions(self):
        assert (NISSAN_LEAF_IE * EV_FLEET).millions() == "519.8"

    @pytest.mark.parametrize("value,mode,expected", [
        (Fraction(158, 100), "truncate", 1.5),
        (Fraction(158, 100), "half_up", 1.6),
        (Fraction(15, 10), "truncate", 1.5),
    ])
    def test_format_pct(self, value, mode, expected):
        assert format_pct(value, mode) == expected

    def test_unknown_rounding(self):
        with pytest.raises(InvalidInputError):
            format_pct(Fraction(1), "banker")


class TestDepreciation:
    def test_golf(self):
        s = depreciation_schedule(GOLF)
        assert s.yearly_values == eur(11997, 9598, 7678)
        assert s.yearly_depreciation == eur(7998, 2399, 1920)
        assert s.total_depreciation == Money.of(12317)

    def test_weighted(self):
        s = depreciation_schedule(Money.of(23308))
        assert s.yearly_values == eur(13985, 11188, 8950)
        assert s.total_depreciation == Money.of(14358)

    def test_residual_below_gmfv(self):
        s = depreciation_schedule(GOLF)
        assert s.residual_fraction == Fraction(384, 1000)
        assert not s.residual_meets_gmfv()
        assert round(float(s.value_vs_start_pct[-1])) == 38

    @pytest.mark.parametrize("rates", [(), ("1.0",), ("0.4", "0"), ("-0.1",)])
    def test_bad_rates(self, rates):
        with pytest.raises(InvalidInputError):
            depreciation_schedule(Money.of(10000), rates)

    @given(st.integers(1, 10**9), st.lists(st.fractions(Fraction(1, 100), Fraction(99, 100)), min_size=1, max_size=6))
    def test_telescoping(self, cents, rates):
        s = depreciation_schedule(Money(cents), rates)
        total = Money(0)
        for d in s.yearly_depreciation:
            total = total + d
        assert s.start_value - s.final_value == total == s.total_depreciation


class TestWeightedPrice:
    def test_table2(self):
        assert weighted_fleet_price(FLEET_MIX_IE_2013) == Money.of(23308)

    def test_single_and_symmetric(self):
        assert weighted_fleet_price(FleetComposition.from_rows([("a", 1, GOLF)])) == GOLF
        assert weighted_fleet_price(FleetComposition.from_rows([("a", "0.5", GOLF), ("b", "0.5", GOLF)])) == GOLF

    def test_reorder_invariant(self):
        rows = [(e.label, e.weight, e.price) for e in FLEET_MIX_IE_2013.entries]
        assert weighted_fleet_price(FleetComposition.from_rows(rows[::-1])) == Money.of(23308)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(InvalidInputError):
            weighted_fleet_price(FleetComposition.from_rows([("a", "0.5", GOLF), ("b", "0.4", POLO)]))

    def test_mixed_currency(self):
        with pytest.raises(InvalidInputError):
            weighted_fleet_price(FleetComposition.from_rows([("a", "0.5", GOLF), ("b", "0.5", Money.of(1, "GBP"))]))


class TestFleetCostReport:
    def test_golf_100km(self):
        r = report(2000, GOLF)
        assert r.ev_revenue == Money.of(519_800_000)
        assert r.once_off_cost == Money.of(39_990_000)
        assert r.once_off_display == 7.7
        assert r.fleet_cost.millions() == "24.6"
        assert round(float(r.annual_cost) / 1e8, 1) == 8.2
        assert float(r.annual_overhead_pct) == pytest.approx(1.5798, abs=1e-4)
        assert r.annual_overhead_display == 1.5
        assert r.term_overhead_display == 4.5

    def test_half_up_mode(self):
        assert report(2000, GOLF, "half_up").annual_overhead_display == 1.6

    def test_golf_75km(self):
        r = report(3500, GOLF)
        assert r.annual_overhead_display == 2.7
        assert r.term_overhead_display == 8.1

    def test_weighted_100km(self):
        r = report(2000, Money.of(23308))
        assert r.once_off_display == 9.0
        assert r.fleet_cost.millions() == "28.7"
        assert round(float(r.annual_cost) / 1e8, 1) == 9.6
        assert r.annual_overhead_display == 1.8
        assert r.term_overhead_display == 5.4

    def test_weighted_75km_computed_not_printed(self):
        r = report(3500, Money.of(23308))
        assert float(r.annual_overhead_pct) == pytest.approx(3.2226, abs=1e-4)
        assert r.annual_overhead_display == 3.2

    @pytest.mark.parametrize("m,price,expected", [(2000, POLO, 3.3), (3500, PASSAT_ESTATE, 11.7)])
    def test_boundary_scenarios(self, m, price, expected):
        assert report(m, price).term_overhead_display == expected

    def test_linear_in_m(self):
        a, b = report(1000, GOLF), report(2000, GOLF)
        assert b.fleet_cost == a.fleet_cost * 2
        assert b.once_off_cost == a.once_off_cost * 2
        assert b.annual_cost == 2 * a.annual_cost

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            report(0, GOLF)
        with pytest.raises(InvalidInputError):
            report(1, GOLF, "nearest")

    def test_serialisation(self):
        r = preset_report("golf-100km")
        d = r.to_dict()
        assert d["annual_overhead_pct_display"] == 1.5 and d["currency"] == "EUR"
        assert "519.8m" in r.to_text()

    def test_presets(self):
        assert set(PRESETS) == {"golf-100km", "golf-75km", "weighted-100km", "weighted-75km"}
        with pytest.raises(InvalidInputError):
            preset_report("tesla")


class TestZeroResidual:
    @pytest.mark.parametrize("m,price,expected", [
        (2000, GOLF, 7.7),
        (3500, Money.of(23308), 15.7),
        (3500, PASSAT_ESTATE, 19.4),
    ])
    def test_values(self, m, price, expected):
        assert format_pct(zero_residual_cost_pct(m, price, EV_FLEET, NISSAN_LEAF_IE), "half_up") == expected


class TestSubsidies:
    def test_table5(self):
        rows = subsidy_table(EV_SUBSIDIES_2013)
        assert [r.pct_display for r in rows] == [19, 30, 23, 16, 24, 26]
        uk = rows[4]
        assert uk.printed_pct == 25 and float(uk.pct) == pytest.approx(23.82, abs=0.01)

    def test_zero_subsidy(self):
        assert subsidy_table([("X", Money.of(0), Money.of(100))])[0].pct_display == 0

    def test_cost_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            subsidy_table([("X", Money.of(1), Money.of(0))])
