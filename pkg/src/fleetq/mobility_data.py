"""Travel-survey trip records: exceedance tables, usage profiles, p estimates.

Input is a CSV file with header
``respondent_id,day_of_week,distance_km,start_hour,duration_min,mode``.
Each respondent reports one day, so (respondent_id, day_of_week) identifies a
respondent-day.  Only ``private_car`` trips count towards driven distance.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import InsufficientDataError, InvalidTargetError, TripFormatError, UndefinedRatioError

CSV_COLUMNS = ("respondent_id", "day_of_week", "distance_km", "start_hour", "duration_min", "mode")
DEFAULT_THRESHOLDS = (50.0, 75.0, 100.0)


class Day(str, Enum):
    MON = "Mon"
    TUE = "Tue"
    WED = "Wed"
    THU = "Thu"
    FRI = "Fri"
    SAT = "Sat"
    SUN = "Sun"


class Mode(str, Enum):
    PRIVATE_CAR = "private_car"
    OTHER = "other"


# Percent of drivers whose cumulative daily distance exceeded 50/75/100 km,
# 2009 Irish National Travel Survey.
SURVEY_EXCEEDANCE_2009: dict[Day, tuple[int, int, int]] = {
    Day.MON: (23, 12, 7),
    Day.TUE: (23, 14, 8),
    Day.WED: (23, 14, 7),
    Day.THU: (26, 18, 11),
    Day.FRI: (26, 17, 9),
    Day.SAT: (24, 15, 9),
    Day.SUN: (24, 17, 11),
}

_DAY_ALIASES = {d.value.lower(): d for d in Day}
_DAY_ALIASES.update({
    "monday": Day.MON, "tuesday": Day.TUE, "wednesday": Day.WED, "thursday": Day.THU,
    "friday": Day.FRI, "saturday": Day.SAT, "sunday": Day.SUN,
})


@dataclass(frozen=True)
class TripRecord:
    respondent_id: str
    day_of_week: Day
    distance_km: float
    start_hour: int
    duration_min: float
    mode: Mode

    def as_row(self) -> list[str]:
        return [
            self.respondent_id, self.day_of_week.value, repr(self.distance_km),
            str(self.start_hour), repr(self.duration_min), self.mode.value,
        ]


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str


@dataclass
class TripTable:
    records: list[TripRecord] = field(default_factory=list)
    rejects: list[Reject] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class DayAggregate:
    respondent_id: str
    day_of_week: Day
    cumulative_km: float = 0.0
    total_in_use_min: float = 0.0
    hours_in_use: set[int] = field(default_factory=set)
    car_trips: int = 0


def _parse_row(row: list[str]) -> TripRecord:
    if len(row) != len(CSV_COLUMNS):
        raise ValueError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}")
    rid, day, dist, hour, dur, mode = (c.strip() for c in row)
    if not rid:
        raise ValueError("empty respondent_id")
    try:
        day_v = _DAY_ALIASES[day.lower()]
    except KeyError:
        raise ValueError(f"unknown day_of_week {day!r}") from None
    dist_v = float(dist.replace("−", "-"))
    if not math.isfinite(dist_v):
        raise ValueError("non-finite distance")
    if dist_v < 0:
        raise ValueError("negative distance")
    hour_v = int(hour)
    if not 0 <= hour_v <= 23:
        raise ValueError("start_hour outside 0..23")
    dur_v = float(dur.replace("−", "-"))
    if not math.isfinite(dur_v) or dur_v < 0:
        raise ValueError("negative duration")
    try:
        mode_v = Mode(mode)
    except ValueError:
        raise ValueError(f"unknown mode {mode!r}") from None
    return TripRecord(rid, day_v, dist_v, hour_v, dur_v, mode_v)


def parse_trips(source: Union[str, os.PathLike, IO], delimiter: str = ",") -> TripTable:
    """Read and validate trip records.

    ``source`` is a path or an open text/binary stream.  Bad rows are kept as
    rejects with their line numbers; more than half rejected means the file
    is in the wrong format altogether.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return parse_trips(fh, delimiter)
    if isinstance(source, (io.BufferedIOBase, io.RawIOBase)) or "b" in getattr(source, "mode", ""):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="")
    reader = csv.reader(source, delimiter=delimiter)
    header = next(reader, None)
    if header is None:
        raise TripFormatError("missing header row")
    if tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise TripFormatError(f"header must be {','.join(CSV_COLUMNS)}")
    table = TripTable()
    rows = 0
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        rows += 1
        try:
            table.records.append(_parse_row(row))
        except ValueError as exc:
            table.rejects.append(Reject(reader.line_num, str(exc)))
    if rows and len(table.rejects) * 2 > rows:
        raise TripFormatError(f"{len(table.rejects)} of {rows} rows rejected")
    return table


def write_trips(table: TripTable, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in table.records:
        writer.writerow(rec.as_row())


def _interval_minutes(rec: TripRecord) -> tuple[float, float]:
    start = rec.start_hour * 60.0
    return start, min(start + rec.duration_min, 24 * 60.0)


def aggregate_days(table: TripTable) -> dict[tuple[str, Day], DayAggregate]:
    """Fold trips into respondent-days.

    In-use time is the length of the union of the car-trip intervals; an hour
    counts as in use when any car trip overlaps it.  Trips are cut at
    midnight.
    """
    days: dict[tuple[str, Day], DayAggregate] = {}
    intervals: dict[tuple[str, Day], list[tuple[float, float]]] = {}
    for rec in table.records:
        key = (rec.respondent_id, rec.day_of_week)
        agg = days.setdefault(key, DayAggregate(*key))
        if rec.mode is not Mode.PRIVATE_CAR:
            continue
        agg.car_trips += 1
        agg.cumulative_km += rec.distance_km
        lo, hi = _interval_minutes(rec)
        intervals.setdefault(key, []).append((lo, hi))
        if hi > lo:
            agg.hours_in_use.update(range(int(lo // 60), int(math.ceil(hi / 60.0))))
        else:
            agg.hours_in_use.add(rec.start_hour)
    for key, ivs in intervals.items():
        ivs.sort()
        total, cur_lo, cur_hi = 0.0, None, None
        for lo, hi in ivs:
            if cur_hi is None or lo > cur_hi:
                if cur_hi is not None:
                    total += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        total += cur_hi - cur_lo
        days[key].total_in_use_min = total
    return days


def _eligible(days: Iterable[DayAggregate], drivers_only: bool) -> list[DayAggregate]:
    return [d for d in days if d.car_trips > 0 or not drivers_only]


@dataclass
class ExceedanceTable:
    thresholds: tuple[float, ...]
    # day -> percentages per threshold; None marks a day with no respondents
    percent: dict[Day, Optional[list[float]]]
    counts: dict[Day, int]

    def rounded(self) -> dict[Day, Optional[list[int]]]:
        return {
            d: None if v is None else [int(math.floor(x + 0.5)) for x in v]
            for d, v in self.percent.items()
        }


def exceedance_table(
    table: TripTable,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    drivers_only: bool = True,
) -> ExceedanceTable:
    """Percent of respondent-days per weekday driving more than each threshold.

    The denominator is respondent-days with at least one private-car trip;
    pass ``drivers_only=False`` to include everyone surveyed.
    """
    ths = tuple(float(t) for t in thresholds)
    if any(t <= 0 for t in ths) or any(b <= a for a, b in zip(ths, ths[1:])):
        raise ValueError("thresholds must be positive and strictly ascending")
    by_day: dict[Day, list[float]] = {d: [] for d in Day}
    for agg in _eligible(aggregate_days(table).values(), drivers_only):
        by_day[agg.day_of_week].append(agg.cumulative_km)
    percent: dict[Day, Optional[list[float]]] = {}
    for d, kms in by_day.items():
        if not kms:
            percent[d] = None
            continue
        arr = np.asarray(kms)
        percent[d] = [100.0 * float(np.count_nonzero(arr > t)) / arr.size for t in ths]
    return ExceedanceTable(ths, percent, {d: len(v) for d, v in by_day.items()})


@dataclass(frozen=True)
class PEstimate:
    threshold_km: float
    pooled: float  # share of all respondent-days above the threshold
    day_mean: float  # unweighted mean of the per-weekday shares
    respondent_days: int


def estimate_p(table: TripTable, threshold_km: float, drivers_only: bool = True) -> PEstimate:
    """Daily probability that a member needs a long-range vehicle.

    Both the pooled share and the mean of per-weekday shares are returned;
    they coincide when every weekday has the same number of respondents.
    """
    days = _eligible(aggregate_days(table).values(), drivers_only)
    if not days:
        raise InsufficientDataError("no respondent-days to estimate p from")
    above = [d.cumulative_km > threshold_km for d in days]
    per_day: dict[Day, list[bool]] = {}
    for d, a in zip(days, above):
        per_day.setdefault(d.day_of_week, []).append(a)
    day_shares = [sum(v) / len(v) for v in per_day.values()]
    return PEstimate(float(threshold_km), sum(above) / len(above), sum(day_shares) / len(day_shares), len(days))


@dataclass
class UsageProfiles:
    distance_bin_km: float
    distance_hist: dict[float, int]  # bin lower edge -> respondent-days
    hour_counts: list[int]  # respondents with the vehicle in use during each hour
    in_use_bin_min: float
    in_use_hist: dict[float, int]


def _histogram(values: Iterable[float], width: float) -> dict[float, int]:
    out: dict[float, int] = {}
    for v in values:
        edge = math.floor(v / width) * width
        out[edge] = out.get(edge, 0) + 1
    return dict(sorted(out.items()))


def usage_profiles(
    table: TripTable,
    threshold_km: float = 75.0,
    distance_bin_km: float = 10.0,
    in_use_bin_min: float = 30.0,
    drivers_only: bool = True,
) -> UsageProfiles:
    """Distance histogram over all respondent-days, plus hour-of-day usage and
    in-use-time histogram for the days above ``threshold_km``."""
    days = _eligible(aggregate_days(table).values(), drivers_only)
    long_days = [d for d in days if d.cumulative_km > threshold_km]
    hours = [0] * 24
    for d in long_days:
        for h in d.hours_in_use:
            hours[h] += 1
    return UsageProfiles(
        distance_bin_km,
        _histogram((d.cumulative_km for d in days), distance_bin_km),
        hours,
        in_use_bin_min,
        _histogram((d.total_in_use_min for d in long_days), in_use_bin_min),
    )


def carbon_savings(table: TripTable, threshold_km: float = 100.0) -> float:
    """Share of driven km that an EV can cover when days above the threshold
    are driven entirely in a combustion vehicle (one vehicle type, constant
    speed, so emissions scale with km)."""
    days = [d for d in aggregate_days(table).values() if d.car_trips]
    if not days:
        raise InsufficientDataError("no driving recorded")
    total = sum(d.cumulative_km for d in days)
    if total <= 0:
        raise UndefinedRatioError("total driven distance is zero")
    electric = sum(d.cumulative_km for d in days if d.cumulative_km <= threshold_km)
    return electric / total


# --- synthetic corpus -------------------------------------------------------


def _band_sample(rng: np.random.Generator, lo: float, hi: Optional[float], n: int, tail_scale: float) -> np.ndarray:
    """Distances in the half-open band (lo, hi]; exponential above the top threshold."""
    u = rng.random(n)
    if hi is None:
        return lo + tail_scale * -np.log1p(-u) + 1e-9
    return hi - (hi - lo) * u  # (lo, hi]


def synthesize_trips(
    targets: Mapping[Day, Sequence[float]] = SURVEY_EXCEEDANCE_2009,
    population: int = 1000,
    seed: int = 0,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    tail_scale_km: float = 10.0,
) -> TripTable:
    """Generate a trip table whose exceedance table reproduces ``targets``.

    For each weekday, ``population`` drivers are split into distance bands
    with counts fixed by the target percentages, so the exceedance table
    round-trips to within rounding of one respondent.  Distances are uniform
    inside each finite band (the lowest band starts at a tenth of the first
    threshold) and exponential beyond the last threshold, which gives
    per-km frequencies that fall from band to band.  Days over 75 km are
    given 4 to 11 hours of vehicle use starting between 7:00 and 10:00.
    """
    ths = [float(t) for t in thresholds]
    rng = np.random.default_rng(seed)
    table = TripTable()
    for day in Day:
        if day not in targets:
            continue
        pct = [float(x) for x in targets[day]]
        if len(pct) != len(ths):
            raise InvalidTargetError(f"{day.value}: expected {len(ths)} targets")
        if any(not 0 <= x <= 100 for x in pct) or any(b > a for a, b in zip(pct, pct[1:])):
            raise InvalidTargetError(f"{day.value}: targets must be percentages non-increasing in threshold")
        above = [int(math.floor(population * x / 100.0 + 0.5)) for x in pct]
        edges = [ths[0] / 10.0] + ths + [None]
        counts = [population - above[0]] + [a - b for a, b in zip(above, above[1:])] + [above[-1]]
        dists = np.concatenate([
            _band_sample(rng, edges[i], edges[i + 1], c, tail_scale_km) for i, c in enumerate(counts)
        ])
        rng.shuffle(dists)
        for idx, km in enumerate(dists):
            rid = f"{day.value.lower()}-{idx:05d}"
            table.records.extend(_day_trips(rng, rid, day, float(km)))
    return table


def _day_trips(rng: np.random.Generator, rid: str, day: Day, km: float) -> list[TripRecord]:
    if km > 75.0:
        start = int(rng.integers(7, 11))
        span = float(rng.uniform(240.0, 660.0))
    else:
        start = int(rng.integers(6, 19))
        span = max(5.0, km / float(rng.uniform(20.0, 45.0)) * 60.0)
    span = min(span, (24 - start) * 60.0)
    n_trips = 1 if span < 120 else int(rng.integers(1, 3))
    if n_trips == 1:
        return [TripRecord(rid, day, km, start, round(span, 1), Mode.PRIVATE_CAR)]
    # out and back: the second leg starts on a later hour, same day
    first = km / 2.0
    second_start = start + int(span // 60) - 1
    first_dur = (second_start - start) * 60.0
    second_dur = span - first_dur
    return [
        TripRecord(rid, day, first, start, round(first_dur, 1), Mode.PRIVATE_CAR),
        TripRecord(rid, day, km - first, second_start, round(second_dur, 1), Mode.PRIVATE_CAR),
    ]
