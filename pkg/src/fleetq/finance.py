"""Cost of the shared fleet relative to EV sales revenue.

Money is held in integer cents.  Rates and weights are exact fractions
(``Fraction("0.4")``) so no floating point enters a stored amount; rounding
happens in exactly two places, both half-up: yearly depreciated values are
rounded to whole currency units, and the weighted fleet price is rounded to
whole units.  Percentages stay exact and are only cut to one decimal for
display.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Sequence, Union

from .errors import InvalidInputError

Rate = Union[Fraction, int, str, float]
Rounding = Literal["truncate", "half_up"]

DEFAULT_RATES = ("0.40", "0.20", "0.20")
DEFAULT_GMFV = "0.40"
TERM_YEARS = 3


def as_fraction(x: Rate) -> Fraction:
    # str() first so 0.4 becomes 2/5 rather than its binary expansion
    return x if isinstance(x, Fraction) else Fraction(str(x))


def _half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


@dataclass(frozen=True, order=True)
class Money:
    cents: int
    currency: str = "EUR"

    @classmethod
    def of(cls, units: Union[int, str, Fraction], currency: str = "EUR") -> "Money":
        amount = Fraction(str(units)) if isinstance(units, str) else Fraction(units)
        cents = amount * 100
        if cents.denominator != 1:
            raise InvalidInputError(f"{units} has sub-cent precision")
        return cls(int(cents), currency)

    def _check(self, other: "Money") -> None:
        if self.currency != other.currency:
            raise InvalidInputError(f"currency mismatch: {self.currency} vs {other.currency}")

    def __add__(self, other: "Money") -> "Money":
        self._check(other)
        return Money(self.cents + other.cents, self.currency)

    def __sub__(self, other: "Money") -> "Money":
        self._check(other)
        return Money(self.cents - other.cents, self.currency)

    def __mul__(self, k: int) -> "Money":
        if not isinstance(k, int):
            raise TypeError("Money can only be multiplied by an integer; use scaled()")
        return Money(self.cents * k, self.currency)

    __rmul__ = __mul__

    def scaled(self, factor: Fraction) -> Fraction:
        """Exact cents times a fraction, not yet rounded."""
        return self.cents * as_fraction(factor)

    @property
    def units(self) -> Fraction:
        return Fraction(self.cents, 100)

    def rounded_units(self) -> int:
        return _half_up(self.units)

    def millions(self, places: int = 1) -> str:
        q = Fraction(self.cents, 100 * 10**6)
        return f"{_half_up(q * 10**places) / 10**places:.{places}f}"

    def __str__(self) -> str:
        whole, cents = divmod(abs(self.cents), 100)
        sign = "-" if self.cents < 0 else ""
        return f"{sign}{self.currency} {whole:,}.{cents:02d}"


def round_units(amount_cents: Fraction, currency: str = "EUR") -> Money:
    """Round an exact cent amount half-up to whole currency units."""
    return Money(_half_up(Fraction(amount_cents) / 100) * 100, currency)


def format_pct(value: Fraction, mode: Rounding = "truncate", places: int = 1) -> float:
    scaled = Fraction(value) * 10**places
    if mode == "truncate":
        q = math.floor(scaled)
    elif mode == "half_up":
        q = _half_up(scaled)
    else:
        raise InvalidInputError(f"unknown rounding mode {mode!r}")
    return q / 10**places


def percent(part: Fraction, whole: Fraction) -> Fraction:
    if whole == 0:
        raise InvalidInputError("percentage of zero")
    return Fraction(part) * 100 / Fraction(whole)


@dataclass
class DepreciationSchedule:
    start_value: Money
    yearly_rates: list[Fraction]
    yearly_values: list[Money]
    yearly_depreciation: list[Money]
    residual_fraction: Fraction
    gmfv_fraction: Fraction

    @property
    def final_value(self) -> Money:
        return self.yearly_values[-1]

    @property
    def total_depreciation(self) -> Money:
        return self.start_value - self.final_value

    @property
    def value_vs_start_pct(self) -> list[Fraction]:
        return [percent(v.cents, self.start_value.cents) for v in self.yearly_values]

    def residual_meets_gmfv(self) -> bool:
        return self.residual_fraction >= self.gmfv_fraction


def depreciation_schedule(
    price: Money,
    rates: Sequence[Rate] = DEFAULT_RATES,
    gmfv: Rate = DEFAULT_GMFV,
) -> DepreciationSchedule:
    """Declining-balance schedule, each year's value rounded to whole units.

    With the default 40/20/20 rates a car keeps 0.6 * 0.8 * 0.8 = 38.4% of its
    price after three years, against a 40% guaranteed minimum future value.
    """
    fr = [as_fraction(r) for r in rates]
    if not fr:
        raise InvalidInputError("at least one yearly rate is required")
    if any(not (0 < r < 1) for r in fr):
        raise InvalidInputError("depreciation rates must lie strictly between 0 and 1")
    if price.cents <= 0:
        raise InvalidInputError("price must be positive")
    values, deps = [], []
    prev = price
    for r in fr:
        cur = round_units(prev.scaled(1 - r), price.currency)
        values.append(cur)
        deps.append(prev - cur)
        prev = cur
    residual = math.prod((1 - r for r in fr), start=Fraction(1))
    return DepreciationSchedule(price, fr, values, deps, residual, as_fraction(gmfv))


@dataclass(frozen=True)
class FleetEntry:
    label: str
    weight: Fraction
    price: Money


@dataclass
class FleetComposition:
    entries: list[FleetEntry] = field(default_factory=list)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, Rate, Money]]) -> "FleetComposition":
        return cls([FleetEntry(label, as_fraction(w), price) for label, w, price in rows])


def weighted_fleet_price(composition: FleetComposition) -> Money:
    if not composition.entries:
        raise InvalidInputError("empty fleet composition")
    total_w = sum((e.weight for e in composition.entries), Fraction(0))
    if abs(total_w - 1) > Fraction(1, 10**9):
        raise InvalidInputError(f"fleet weights sum to {float(total_w)}, not 1")
    currencies = {e.price.currency for e in composition.entries}
    if len(currencies) != 1:
        raise InvalidInputError("fleet prices use more than one currency")
    exact = sum((e.price.scaled(e.weight) for e in composition.entries), Fraction(0))
    return round_units(exact, currencies.pop())


@dataclass
class FleetCostReport:
    m_fleet: int
    n_ev: int
    unit_price: Money
    ev_price: Money
    ev_revenue: Money
    once_off_cost: Money
    once_off_pct: Fraction
    fleet_cost: Money  # depreciation over the whole term
    annual_cost: Fraction  # cents, exact
    annual_overhead_pct: Fraction
    term_overhead_pct: Fraction
    years: int
    overhead_rounding: Rounding = "truncate"

    @property
    def annual_overhead_display(self) -> float:
        return format_pct(self.annual_overhead_pct, self.overhead_rounding)

    @property
    def term_overhead_display(self) -> float:
        # quoted as years x the one-decimal annual figure
        return round(self.years * self.annual_overhead_display, 1)

    @property
    def once_off_display(self) -> float:
        return format_pct(self.once_off_pct, "half_up")

    def to_dict(self) -> dict:
        cur = self.ev_revenue.currency
        return {
            "m_fleet": self.m_fleet,
            "n_ev": self.n_ev,
            "currency": cur,
            "unit_price": float(self.unit_price.units),
            "ev_price": float(self.ev_price.units),
            "ev_revenue": float(self.ev_revenue.units),
            "once_off_cost": float(self.once_off_cost.units),
            "once_off_pct": float(self.once_off_pct),
            "once_off_pct_display": self.once_off_display,
            "fleet_cost": float(self.fleet_cost.units),
            "annual_cost": float(self.annual_cost / 100),
            "annual_overhead_pct": float(self.annual_overhead_pct),
            "annual_overhead_pct_display": self.annual_overhead_display,
            "term_overhead_pct": float(self.term_overhead_pct),
            "term_overhead_pct_display": self.term_overhead_display,
            "years": self.years,
            "overhead_rounding": self.overhead_rounding,
        }

    def to_text(self) -> str:
        cur = self.ev_revenue.currency
        annual_m = _half_up(self.annual_cost / 10**7) / 10
        lines = [
            f"Shared fleet: {self.m_fleet} vehicles at {self.unit_price}",
            f"EV revenue ({self.n_ev} x {self.ev_price}): {cur} {self.ev_revenue.millions()}m",
            f"Once-off fleet purchase: {cur} {self.once_off_cost.millions()}m "
            f"= {self.once_off_display:.1f}% of revenue",
            f"{self.years}-year depreciation cost: {cur} {self.fleet_cost.millions()}m "
            f"(annual {cur} {annual_m:.1f}m)",
            f"Annual overhead: {self.annual_overhead_display:.1f}%  "
            f"({self.years}-year: {self.term_overhead_display:.1f}%)",
        ]
        return "\n".join(lines)


def fleet_cost_report(
    m: int,
    schedule: DepreciationSchedule,
    n_ev: int,
    ev_price: Money,
    overhead_rounding: Rounding = "truncate",
) -> FleetCostReport:
    """Fleet purchase and depreciation cost as a share of EV revenue.

    The vehicles are assumed sold at their depreciated value at the end of the
    term, so the fleet's cost is ``m`` times the per-vehicle depreciation.
    """
    if m < 1 or n_ev < 1:
        raise InvalidInputError("fleet size and EV count must be positive")
    if overhead_rounding not in ("truncate", "half_up"):
        raise InvalidInputError(f"unknown rounding mode {overhead_rounding!r}")
    years = len(schedule.yearly_rates)
    revenue = ev_price * n_ev
    once_off = schedule.start_value * m
    fleet_cost = schedule.total_depreciation * m
    annual = Fraction(fleet_cost.cents, years)
    return FleetCostReport(
        m_fleet=m,
        n_ev=n_ev,
        unit_price=schedule.start_value,
        ev_price=ev_price,
        ev_revenue=revenue,
        once_off_cost=once_off,
        once_off_pct=percent(once_off.cents, revenue.cents),
        fleet_cost=fleet_cost,
        annual_cost=annual,
        annual_overhead_pct=percent(annual, revenue.cents),
        term_overhead_pct=percent(fleet_cost.cents, revenue.cents),
        years=years,
        overhead_rounding=overhead_rounding,
    )


def zero_residual_cost_pct(m: int, unit_price: Money, n_ev: int, ev_price: Money) -> Fraction:
    """Fleet written off entirely over the term: purchase cost over revenue, in percent."""
    return percent((unit_price * m).cents, (ev_price * n_ev).cents)


@dataclass(frozen=True)
class SubsidyRow:
    country: str
    subsidy: Money
    vehicle_cost: Money
    pct: Fraction
    printed_pct: Union[int, None] = None

    @property
    def pct_display(self) -> int:
        return _half_up(self.pct)


def subsidy_table(entries: Iterable[tuple]) -> list[SubsidyRow]:
    """Subsidy as a percentage of vehicle cost, per country.

    Entries are ``(country, subsidy, cost)`` or ``(country, subsidy, cost, printed_pct)``.
    """
    rows = []
    for entry in entries:
        country, subsidy, cost, *rest = entry
        if cost.cents <= 0:
            raise InvalidInputError(f"{country}: vehicle cost must be positive")
        subsidy._check(cost)
        rows.append(SubsidyRow(country, subsidy, cost, percent(subsidy.cents, cost.cents), *rest))
    return rows


# Reference data: Volkswagen Ireland list prices, 23 Sep 2013.
FLEET_MIX_IE_2013 = FleetComposition.from_rows([
    ("VW Polo", "0.20", Money.of(14195)),
    ("VW Golf", "0.20", Money.of(19995)),
    ("VW Passat", "0.50", Money.of(27165)),
    ("VW Passat Estate", "0.10", Money.of(28870)),
])
NISSAN_LEAF_IE = Money.of(25990)
EV_FLEET = 20000

# Nissan figures, Sep 2013; last column is the percentage as printed.
EV_SUBSIDIES_2013 = [
    ("Ireland", Money.of(5000), Money.of(25990), 19),
    ("Belgium", Money.of(9000), Money.of(29890), 30),
    ("France", Money.of(7000), Money.of(30190), 23),
    ("Portugal", Money.of(5000), Money.of(31100), 16),
    ("United Kingdom", Money.of(5000, "GBP"), Money.of(20990, "GBP"), 25),
    ("United States", Money.of(7500, "USD"), Money.of(28800, "USD"), 26),
]


def _entry_price(label: str) -> Money:
    return next(e.price for e in FLEET_MIX_IE_2013.entries if e.label == label)


# Scenario presets: 2,000 vehicles cover 100 km trips, 3,500 cover 75 km trips,
# for 20,000 EVs served within 3 days.
PRESETS: dict[str, dict] = {
    "golf-100km": {"m": 2000, "unit_price": _entry_price("VW Golf")},
    "golf-75km": {"m": 3500, "unit_price": _entry_price("VW Golf")},
    "weighted-100km": {"m": 2000, "unit_price": weighted_fleet_price(FLEET_MIX_IE_2013)},
    "weighted-75km": {"m": 3500, "unit_price": weighted_fleet_price(FLEET_MIX_IE_2013)},
}


def preset_report(name: str, overhead_rounding: Rounding = "truncate") -> FleetCostReport:
    try:
        preset = PRESETS[name]
    except KeyError:
        raise InvalidInputError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    schedule = depreciation_schedule(preset["unit_price"])
    return fleet_cost_report(preset["m"], schedule, EV_FLEET, NISSAN_LEAF_IE, overhead_rounding)
