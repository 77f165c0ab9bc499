"""Parsers for receiver ISMR logs, radio-occultation records and the canonical CSV.

Every parser is single-pass and never raises on a bad data line: the line
is skipped and counted in a :class:`ParseReport` under the reason it failed.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from typing import Iterable, Iterator

from .errors import ConfigError, HeaderMismatch
from .gpstime import gps_to_utc
from .scintcore import L1, S4_REJECT, Constellation, FrequencyBand, ScintRecord, Source

logger = logging.getLogger(__name__)

CANONICAL_FIELDS = (
    "timestamp_utc", "source", "constellation", "sat_id", "freq_mhz", "s4",
    "elevation_deg", "azimuth_deg", "lat_deg", "lon_deg",
)
CANONICAL_HEADER = ",".join(CANONICAL_FIELDS)
RO_FIELDS = ("timestamp_utc", "sat_id", "freq_mhz", "s4", "lat_deg", "lon_deg")
RO_HEADER = ",".join(RO_FIELDS)

_SOURCES = {s.value: s for s in Source}
_CONSTELLATIONS = {c.value: c for c in Constellation}
_PREFIXES = {"G": Constellation.GPS, "E": Constellation.GALILEO}


@dataclass
class ParseReport:
    """Per-reason line accounting for one parse (or several, merged with ``+``)."""

    lines: int = 0
    accepted: int = 0
    sentinel_count: int = 0
    malformed_count: int = 0
    range_count: int = 0

    @property
    def skipped(self) -> int:
        return self.sentinel_count + self.malformed_count + self.range_count

    def __add__(self, other: "ParseReport") -> "ParseReport":
        return ParseReport(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["skipped"] = self.skipped
        return d


class _Skip(Exception):
    def __init__(self, reason: str):
        self.reason = reason


def _count_skip(report: ParseReport, reason: str):
    setattr(report, reason, getattr(report, reason) + 1)


# ---------------------------------------------------------------- ISMR logs

_SEPARATOR_ALIASES = {"tab": "\t", "\\t": "\t", "space": " ", "comma": ",", "semicolon": ";"}


@dataclass(frozen=True)
class IsmrColumnMap:
    """0-based column positions of the fields used from an ISMR-style log.

    The defaults follow the common Septentrio ISMR layout (week, TOW, SVID,
    receiver state, azimuth, elevation, C/N0, total S4, S4 correction).
    """

    week_number: int = 0
    time_of_week_s: int = 1
    sat_code: int = 2
    azimuth_deg: int = 4
    elevation_deg: int = 5
    s4_total: int = 7
    s4_correction: int | None = 8
    field_separator: str = ","
    sentinel_values: tuple[str, ...] = ("nan", "NaN", "-9999", "")

    def __post_init__(self):
        cols = self.columns()
        if any(not isinstance(c, int) or c < 0 for c in cols.values()):
            raise ConfigError(f"column indices must be non-negative integers: {cols}")
        if len(set(cols.values())) != len(cols):
            raise ConfigError(f"column indices must be distinct: {cols}")
        if len(self.field_separator) != 1:
            raise ConfigError(f"field separator must be one character, got {self.field_separator!r}")

    def columns(self) -> dict[str, int]:
        names = ("week_number", "time_of_week_s", "sat_code", "azimuth_deg", "elevation_deg", "s4_total", "s4_correction")
        return {n: getattr(self, n) for n in names if getattr(self, n) is not None}


SEPTENTRIO_ISMR = IsmrColumnMap()


def load_column_map(text: str) -> IsmrColumnMap:
    """Parse a key=value column-map config.

    Unlisted keys keep the Septentrio preset.  Recognised keys: ``col.<field>``
    for each mapped field (``col.s4_correction=none`` disables the correction
    column), ``sep``, and ``sentinel`` (repeatable; the first occurrence
    replaces the default list).
    """
    kwargs: dict = {}
    sentinels: list[str] | None = None
    valid = set(SEPTENTRIO_ISMR.columns()) | {"s4_correction"}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = key.strip(), value.strip()
        if key.startswith("col."):
            name = key[4:]
            if name not in valid:
                raise ConfigError(f"line {lineno}: unknown column {name!r}")
            if value.lower() == "none":
                kwargs[name] = None
                continue
            try:
                kwargs[name] = int(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: column index must be an integer, got {value!r}") from None
        elif key == "sep":
            kwargs["field_separator"] = _SEPARATOR_ALIASES.get(value.lower(), value)
        elif key == "sentinel":
            sentinels = (sentinels or []) + [value]
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if sentinels is not None:
        kwargs["sentinel_values"] = tuple(sentinels)
    return IsmrColumnMap(**kwargs)


def parse_sat_code(code: str) -> tuple[Constellation, str]:
    """Map a satellite code to (constellation, normalized id).

    Accepts RINEX-style codes (``G07``, ``E5``) and Septentrio numeric SVIDs
    (1-37 GPS, 38-61 GLONASS, 71-106 Galileo).
    """
    code = code.strip()
    if not code:
        raise ValueError("empty satellite code")
    if code[0].isalpha():
        prn = int(code[1:])
        if prn <= 0:
            raise ValueError(f"bad PRN in {code!r}")
        letter = code[0].upper()
        return _PREFIXES.get(letter, Constellation.OTHER), f"{letter}{prn:02d}"
    svid = int(code)
    if 1 <= svid <= 37:
        return Constellation.GPS, f"G{svid:02d}"
    if 38 <= svid <= 61:
        return Constellation.OTHER, f"R{svid - 37:02d}"
    if 71 <= svid <= 106:
        return Constellation.GALILEO, f"E{svid - 70:02d}"
    if svid <= 0:
        raise ValueError(f"bad SVID {code!r}")
    return Constellation.OTHER, str(svid)


def _split(line: str, sep: str) -> list[str]:
    if sep == " ":
        return line.split()
    return [f.strip() for f in line.split(sep)]


def _ismr_record(parts, cmap, station_lat, station_lon, freq_mhz) -> ScintRecord:
    def get(col):
        try:
            value = parts[col]
        except IndexError:
            raise _Skip("malformed_count") from None
        if value in cmap.sentinel_values:
            raise _Skip("sentinel_count")
        return value

    week, tow, sat = get(cmap.week_number), get(cmap.time_of_week_s), get(cmap.sat_code)
    az, el, s4_total = get(cmap.azimuth_deg), get(cmap.elevation_deg), get(cmap.s4_total)
    correction = None
    if cmap.s4_correction is not None and cmap.s4_correction < len(parts):
        raw = parts[cmap.s4_correction]
        if raw not in cmap.sentinel_values:
            correction = raw
    try:
        week, tow = int(week), float(tow)
        constellation, sat_id = parse_sat_code(sat)
        az, el, s4 = float(az), float(el), float(s4_total)
        corr = float(correction) if correction is not None else None
        timestamp = gps_to_utc(week, tow)
    except ValueError:
        raise _Skip("malformed_count") from None
    if not all(math.isfinite(v) for v in (az, el, s4)) or (corr is not None and not math.isfinite(corr)):
        raise _Skip("malformed_count")
    if corr is not None:
        # receiver-reported noise correction: S4^2 = S4_total^2 - correction^2
        s4 = math.sqrt(max(s4 * s4 - corr * corr, 0.0))
    if az == 360.0:
        az = 0.0
    if not (0.0 <= s4 <= S4_REJECT and 0.0 <= el <= 90.0 and 0.0 <= az < 360.0):
        raise _Skip("range_count")
    return ScintRecord(timestamp, Source.GROUND, constellation, sat_id, freq_mhz, s4, el, az, station_lat, station_lon)


def parse_ismr(
    lines: Iterable[str],
    column_map: IsmrColumnMap = SEPTENTRIO_ISMR,
    station_lat: float = 0.0,
    station_lon: float = 0.0,
    freq: FrequencyBand = L1,
) -> tuple[list[ScintRecord], ParseReport]:
    """Parse ISMR-style log lines into GROUND records.

    Blank lines and ``#`` comments are ignored and not counted.
    """
    if not (-90 <= station_lat <= 90 and -180 <= station_lon <= 180):
        raise ConfigError(f"station position out of range: {station_lat}, {station_lon}")
    records: list[ScintRecord] = []
    report = ParseReport()
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        report.lines += 1
        try:
            rec = _ismr_record(_split(line, column_map.field_separator), column_map,
                               station_lat, station_lon, freq.freq_mhz)
        except _Skip as skip:
            _count_skip(report, skip.reason)
            continue
        records.append(rec)
        report.accepted += 1
    return records, report


# --------------------------------------------------------- RO / canonical CSV

def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 instant with an explicit UTC designator or offset."""
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    t = datetime.fromisoformat(text)
    if t.tzinfo is None:
        raise ValueError(f"timestamp without zone: {text!r}")
    return t.astimezone(timezone.utc)


def format_timestamp(t: datetime) -> str:
    t = t.astimezone(timezone.utc)
    if t.microsecond:
        return t.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def _data_rows(lines: Iterable[str], expected_header: str) -> Iterator[list[str]]:
    """Validate the header, then yield split data rows (comments/blank lines dropped)."""
    it = iter(lines)
    for raw in it:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.replace(" ", "") != expected_header:
            raise HeaderMismatch(f"expected header {expected_header!r}, got {line!r}")
        break
    else:
        return
    body = (raw for raw in it if raw.strip() and not raw.lstrip().startswith("#"))
    yield from csv.reader(body)


def _opt_float(text: str) -> float | None:
    return float(text) if text != "" else None


def parse_ro(lines: Iterable[str]) -> tuple[list[ScintRecord], ParseReport]:
    """Parse the canonical RO text format (one row per observation)."""
    records: list[ScintRecord] = []
    report = ParseReport()
    for row in _data_rows(lines, RO_HEADER):
        report.lines += 1
        if len(row) != len(RO_FIELDS):
            report.malformed_count += 1
            continue
        try:
            ts = parse_timestamp(row[0].strip())
            constellation, sat_id = parse_sat_code(row[1])
            freq, s4, lat, lon = (float(v) for v in row[2:])
        except ValueError:
            report.malformed_count += 1
            continue
        try:
            rec = ScintRecord(ts, Source.RO, constellation, sat_id, freq, s4, None, None, lat, lon)
        except ValueError:
            report.range_count += 1
            continue
        records.append(rec)
        report.accepted += 1
    return records, report


def read_canonical(lines: Iterable[str]) -> tuple[list[ScintRecord], ParseReport]:
    records: list[ScintRecord] = []
    report = ParseReport()
    append = records.append
    for row in _data_rows(lines, CANONICAL_HEADER):
        report.lines += 1
        if len(row) != len(CANONICAL_FIELDS):
            report.malformed_count += 1
            continue
        try:
            ts = parse_timestamp(row[0])
            source = _SOURCES[row[1]]
            constellation = _CONSTELLATIONS[row[2]]
            freq, s4 = float(row[4]), float(row[5])
            el, az = _opt_float(row[6]), _opt_float(row[7])
            lat, lon = float(row[8]), float(row[9])
        except (ValueError, KeyError):
            report.malformed_count += 1
            continue
        try:
            append(ScintRecord(ts, source, constellation, row[3], freq, s4, el, az, lat, lon))
        except ValueError:
            report.range_count += 1
            continue
        report.accepted += 1
    return records, report


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def canonical_row(rec: ScintRecord) -> str:
    return ",".join((
        format_timestamp(rec.timestamp_utc), rec.source.value, rec.constellation.value, rec.sat_id,
        _fmt(rec.freq_mhz), f"{rec.s4:.4f}", _fmt(rec.elevation_deg), _fmt(rec.azimuth_deg),
        _fmt(rec.lat_deg), _fmt(rec.lon_deg),
    ))


def write_canonical(records: Iterable[ScintRecord]) -> Iterator[str]:
    """Yield canonical CSV lines (LF-terminated), header first."""
    yield CANONICAL_HEADER + "\n"
    for rec in records:
        yield canonical_row(rec) + "\n"


def canonical_text(records: Iterable[ScintRecord]) -> str:
    buf = io.StringIO()
    buf.writelines(write_canonical(records))
    return buf.getvalue()


# ------------------------------------------------------------------ filters

@dataclass(frozen=True)
class GeoFilter:
    """Elevation mask for ground links and a lat/lon box for RO tangent points.

    ``None`` ranges disable the corresponding test.
    """

    min_elevation_deg: float = 30.0
    lon_range: tuple[float, float] | None = (54.0, 57.0)
    lat_range: tuple[float, float] | None = (23.0, 27.0)
    time_range: tuple[datetime, datetime] | None = None

    def __post_init__(self):
        if not 0.0 <= self.min_elevation_deg <= 90.0:
            raise ConfigError(f"elevation mask must lie in [0, 90], got {self.min_elevation_deg}")
        for name in ("lon_range", "lat_range", "time_range"):
            rng = getattr(self, name)
            if rng is not None and not rng[0] <= rng[1]:
                raise ConfigError(f"{name}: min must not exceed max, got {rng}")

    def accepts(self, rec: ScintRecord) -> bool:
        if self.time_range is not None and not self.time_range[0] <= rec.timestamp_utc <= self.time_range[1]:
            return False
        if rec.source is Source.GROUND:
            # strict: the mask keeps links *above* the cut-off
            return rec.elevation_deg is not None and rec.elevation_deg > self.min_elevation_deg
        if self.lat_range is not None and not self.lat_range[0] <= rec.lat_deg <= self.lat_range[1]:
            return False
        if self.lon_range is not None and not self.lon_range[0] <= rec.lon_deg <= self.lon_range[1]:
            return False
        return True


def apply_filter(records: Iterable[ScintRecord], geo_filter: GeoFilter) -> list[ScintRecord]:
    return [rec for rec in records if geo_filter.accepts(rec)]
