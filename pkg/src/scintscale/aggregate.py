"""Occurrence statistics of above-threshold S4: counts per band and histograms.

Histograms are :class:`OccurrenceTable` values over local-time hour, month,
year or 30-degree azimuth sector.  Tables with the same dimension, band and
threshold merge by bin-wise addition, so record sets can be sharded freely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from datetime import date
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import MissingAzimuth, ZeroReference
from .ingest import ParseReport, _data_rows
from .scintcore import (
    DEFAULT_CEILING,
    DNA,
    STRONG_LOWER,
    ExponentModel,
    FrequencyBand,
    ScintRecord,
    Source,
    scale_s4_array,
)

SECTOR_WIDTH_DEG = 30
SECTORS = tuple(range(0, 360, SECTOR_WIDTH_DEG))
NORTH_SECTORS = frozenset(k for k in SECTORS if k >= 270 or k < 90)


class Dimension(enum.Enum):
    HOUR_LT = "hour"
    MONTH = "month"
    YEAR = "year"
    AZIMUTH_SECTOR = "azimuth"


def canonical_keys(dimension: Dimension, years: Iterable[int] = ()) -> list[int]:
    if dimension is Dimension.HOUR_LT:
        return list(range(24))
    if dimension is Dimension.MONTH:
        return list(range(1, 13))
    if dimension is Dimension.AZIMUTH_SECTOR:
        return list(SECTORS)
    years = list(years)
    return list(range(min(years), max(years) + 1)) if years else []


@dataclass(frozen=True)
class OccurrenceTable:
    dimension: Dimension
    bins: tuple[tuple[int, int], ...]
    threshold: float = STRONG_LOWER
    band: FrequencyBand | None = None

    @classmethod
    def from_counts(cls, dimension, counts: Mapping[int, int], threshold=STRONG_LOWER, band=None, years=()):
        years = set(years)
        if dimension is Dimension.YEAR:
            years |= set(counts)
        keys = canonical_keys(dimension, years)
        extra = set(counts) - set(keys)
        if extra:
            raise ValueError(f"non-canonical {dimension.value} bins: {sorted(extra)}")
        return cls(dimension, tuple((k, int(counts.get(k, 0))) for k in keys), threshold, band)

    @property
    def counts(self) -> dict[int, int]:
        return dict(self.bins)

    @property
    def total(self) -> int:
        return sum(c for _, c in self.bins)

    def merge(self, other: "OccurrenceTable") -> "OccurrenceTable":
        if (self.dimension, self.threshold, self.band) != (other.dimension, other.threshold, other.band):
            raise ValueError("can only merge tables with equal dimension, threshold and band")
        summed = self.counts
        for k, c in other.bins:
            summed[k] = summed.get(k, 0) + c
        return OccurrenceTable.from_counts(self.dimension, summed, self.threshold, self.band)

    __add__ = merge


# ----------------------------------------------------------- record columns

@dataclass
class RecordColumns:
    """Column view of a record list used by the vectorized binning."""

    epoch_s: np.ndarray
    offset_s: np.ndarray  # local-time offset per record
    s4: np.ndarray
    freq_mhz: np.ndarray
    azimuth_deg: np.ndarray  # NaN where absent

    @classmethod
    def from_records(cls, records: Sequence[ScintRecord], station_lon: float | None = None,
                     fixed_offset_h: float | None = None) -> "RecordColumns":
        n = len(records)
        epoch = np.fromiter((r.timestamp_utc.timestamp() for r in records), float, n)
        if fixed_offset_h is not None:
            offset_h = np.full(n, float(fixed_offset_h))
        else:
            # solar local time: ground links use the station, RO the tangent point
            offset_h = np.fromiter(
                ((station_lon if station_lon is not None and r.source is Source.GROUND else r.lon_deg) / 15.0
                 for r in records), float, n)
        s4 = np.fromiter((r.s4 for r in records), float, n)
        freq = np.fromiter((r.freq_mhz for r in records), float, n)
        az = np.fromiter((np.nan if r.azimuth_deg is None else r.azimuth_deg for r in records), float, n)
        return cls(epoch, offset_h * 3600.0, s4, freq, az)

    def __len__(self):
        return self.s4.size

    def local_seconds(self) -> np.ndarray:
        return np.floor(self.epoch_s + self.offset_s).astype(np.int64)

    def keys(self, dimension: Dimension) -> np.ndarray:
        if dimension is Dimension.AZIMUTH_SECTOR:
            if np.any(np.isnan(self.azimuth_deg)):
                raise MissingAzimuth("azimuth statistics need ground records with azimuth")
            return (np.floor(self.azimuth_deg / SECTOR_WIDTH_DEG).astype(np.int64) * SECTOR_WIDTH_DEG)
        lt = self.local_seconds()
        if dimension is Dimension.HOUR_LT:
            return (lt % 86400) // 3600
        months = lt.astype("datetime64[s]").astype("datetime64[M]").astype(np.int64)
        if dimension is Dimension.MONTH:
            return months % 12 + 1
        return months // 12 + 1970

    def scaled_s4(self, band: FrequencyBand | None, model: ExponentModel = DNA,
                  ceiling: float | None = DEFAULT_CEILING) -> np.ndarray:
        if band is None:
            return self.s4
        return scale_s4_array(self.s4, self.freq_mhz, band, model, ceiling)


def table_from_columns(cols: RecordColumns, dimension: Dimension, threshold: float = STRONG_LOWER,
                       band: FrequencyBand | None = None, model: ExponentModel = DNA,
                       ceiling: float | None = DEFAULT_CEILING, keys: np.ndarray | None = None) -> OccurrenceTable:
    """Bin records of ``cols`` whose (scaled) S4 exceeds ``threshold``."""
    if keys is None:
        keys = cols.keys(dimension)
    hits = keys[cols.scaled_s4(band, model, ceiling) > threshold]
    uniq, counts = np.unique(hits, return_counts=True)
    years = np.unique(keys).tolist() if dimension is Dimension.YEAR else ()
    return OccurrenceTable.from_counts(dimension, dict(zip(uniq.tolist(), counts.tolist())), threshold, band, years)


# --------------------------------------------------------------- operations

def count_strong(records: Sequence[ScintRecord], band_targets: Sequence[FrequencyBand],
                 model: ExponentModel = DNA, threshold: float = STRONG_LOWER,
                 ceiling: float | None = DEFAULT_CEILING) -> dict[str, int]:
    """Number of records whose S4, scaled to each target band, exceeds ``threshold``."""
    cols = RecordColumns.from_records(records, fixed_offset_h=0.0)
    return {band.name: int(np.count_nonzero(cols.scaled_s4(band, model, ceiling) > threshold))
            for band in band_targets}


def ratio_summary(counts: Mapping[str, int], reference: str, ndigits: int = 2) -> dict[str, float]:
    """Count of every other band relative to the reference band, rounded."""
    ref = counts.get(reference, 0)
    if ref <= 0:
        raise ZeroReference(f"reference band {reference!r} has no occurrences")
    return {band: round(c / ref, ndigits) for band, c in counts.items() if band != reference}


def bin_temporal(records: Sequence[ScintRecord], dimension: Dimension, station_lon: float | None = None,
                 threshold: float = STRONG_LOWER, band: FrequencyBand | None = None,
                 fixed_offset_h: float | None = None) -> OccurrenceTable:
    """Histogram of above-threshold records by local-time hour, month or year.

    Local time is solar time, UTC + lon/15 h, using ``station_lon`` for
    ground records (their own longitude if not given) and the tangent-point
    longitude for RO records.  ``fixed_offset_h`` replaces it with a fixed
    civil offset.  The S4 values are used as they are (already scaled).
    """
    if dimension is Dimension.AZIMUTH_SECTOR:
        raise ValueError("use bin_azimuth for azimuth sectors")
    cols = RecordColumns.from_records(records, station_lon, fixed_offset_h)
    return replace(table_from_columns(cols, dimension, threshold), band=band)


def bin_azimuth(records: Sequence[ScintRecord], threshold: float = STRONG_LOWER,
                band: FrequencyBand | None = None) -> OccurrenceTable:
    if any(r.azimuth_deg is None for r in records):
        raise MissingAzimuth("azimuth statistics are defined only for ground records with azimuth")
    cols = RecordColumns.from_records(records, fixed_offset_h=0.0)
    return replace(table_from_columns(cols, Dimension.AZIMUTH_SECTOR, threshold), band=band)


class NortherlyFraction(NamedTuple):
    fraction: float
    empty: bool


def northerly_fraction(table: OccurrenceTable) -> NortherlyFraction:
    """Share of occurrences with azimuth in [270, 360) or [0, 90)."""
    if table.dimension is not Dimension.AZIMUTH_SECTOR:
        raise ValueError("northerly fraction needs an azimuth-sector table")
    total = table.total
    if total == 0:
        return NortherlyFraction(0.0, True)
    north = sum(c for k, c in table.bins if k in NORTH_SECTORS)
    return NortherlyFraction(north / total, False)


# -------------------------------------------------------------- solar flux

@dataclass(frozen=True)
class SolarFluxRecord:
    date: date
    f107_sfu: float

    def __post_init__(self):
        if not self.f107_sfu > 0:
            raise ValueError(f"F10.7 must be > 0 sfu, got {self.f107_sfu}")


def read_flux(lines: Iterable[str]) -> tuple[list[SolarFluxRecord], ParseReport]:
    """Read a daily ``date,f107_sfu`` CSV; fill values and bad rows are skipped."""
    records, report = [], ParseReport()
    for row in _data_rows(lines, "date,f107_sfu"):
        report.lines += 1
        try:
            day, value = date.fromisoformat(row[0].strip()), float(row[1])
        except (ValueError, IndexError):
            report.malformed_count += 1
            continue
        if not (np.isfinite(value) and 0 < value < 999):  # 999.9 is the OMNI fill value
            report.range_count += 1
            continue
        records.append(SolarFluxRecord(day, value))
        report.accepted += 1
    return records, report


class YearFlux(NamedTuple):
    year: int
    count: int
    mean_f107: float | None
    flag: str


def attach_flux(yearly: OccurrenceTable, flux: Iterable[SolarFluxRecord]) -> list[YearFlux]:
    """Join annual mean F10.7 onto a yearly table; years without flux are flagged."""
    if yearly.dimension is not Dimension.YEAR:
        raise ValueError("attach_flux needs a yearly table")
    per_year: dict[int, list[float]] = {}
    for rec in flux:
        per_year.setdefault(rec.date.year, []).append(rec.f107_sfu)
    rows = []
    for year, count in yearly.bins:
        values = per_year.get(year)
        if values:
            rows.append(YearFlux(year, count, sum(values) / len(values), ""))
        else:
            rows.append(YearFlux(year, count, None, "no-flux"))
    return rows
