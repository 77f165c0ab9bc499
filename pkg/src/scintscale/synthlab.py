"""Seeded synthetic intensity windows and scintillation scenarios.

Intensity follows the Nakagami-m fading model: I ~ Gamma(m, 1/m) with unit
mean, whose S4 is exactly 1/sqrt(m).  Scenarios draw minute records whose
local-time hour, month and azimuth sector follow user weights, and carry
the generator's own histograms as ground truth.

Scenario records are produced in blocks of ``BLOCK_SIZE``; block ``i`` uses
child ``i`` of ``numpy.random.SeedSequence(seed)``, so any split of the
blocks across workers yields the same stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .errors import ConfigError, InvalidTarget
from .scintcore import L1, STRONG_LOWER, Constellation, IntensitySeries, ScintRecord, Source, get_band

BLOCK_SIZE = 1 << 16
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def gen_intensity(target_s4: float, n_samples: int = 3000, seed: int | None = None,
                  window_s: float = 60.0) -> IntensitySeries:
    """Unit-mean Gamma intensity samples with shape ``m = 1 / target_s4**2``."""
    if not (math.isfinite(target_s4) and 0.0 < target_s4 <= 1.0):
        raise InvalidTarget(f"target S4 must lie in (0, 1], got {target_s4}")
    m = 1.0 / target_s4 ** 2
    rng = np.random.default_rng(seed)
    return IntensitySeries.evenly_spaced(rng.gamma(m, 1.0 / m, n_samples), window_s)


def _weights(values, size: int, name: str) -> tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if len(values) != size:
        raise ConfigError(f"{name} needs {size} weights, got {len(values)}")
    if any(not math.isfinite(v) or v < 0 for v in values) or not any(v > 0 for v in values):
        raise ConfigError(f"{name} weights must be non-negative with at least one positive")
    return values


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 0
    n_records: int = 10_000
    start: date = date(2020, 1, 1)
    n_days: int = 366
    station_lat: float = 25.28
    station_lon: float = 55.46
    diurnal_profile: tuple[float, ...] = (1.0,) * 24
    monthly_profile: tuple[float, ...] = (1.0,) * 12
    azimuth_profile: tuple[float, ...] = (1.0,) * 12
    s4_alpha: float = 2.0  # S4 = s4_max * Beta(alpha, beta)
    s4_beta: float = 3.0
    s4_max: float = 1.2
    elevation_range: tuple[float, float] = (30.0, 90.0)
    freq_mhz: float = L1.freq_mhz
    n_sats: int = 32

    def __post_init__(self):
        object.__setattr__(self, "diurnal_profile", _weights(self.diurnal_profile, 24, "diurnal"))
        object.__setattr__(self, "monthly_profile", _weights(self.monthly_profile, 12, "monthly"))
        object.__setattr__(self, "azimuth_profile", _weights(self.azimuth_profile, 12, "azimuth"))
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.n_records < 0 or self.n_days < 1 or not 1 <= self.n_sats <= 99:
            raise ConfigError("n_records >= 0, n_days >= 1 and 1 <= n_sats <= 99 required")
        lo, hi = self.elevation_range
        if not 30.0 <= lo <= hi <= 90.0:
            raise ConfigError(f"elevation range must lie within [30, 90], got {self.elevation_range}")
        if not (self.s4_alpha > 0 and self.s4_beta > 0 and 0 < self.s4_max <= 1.2):
            raise ConfigError("s4_alpha, s4_beta > 0 and 0 < s4_max <= 1.2 required")
        if not (-90 <= self.station_lat <= 90 and -180 <= self.station_lon <= 180):
            raise ConfigError("station position out of range")
        if self.freq_mhz <= 0:
            raise ConfigError("frequency must be positive")
        if not np.any(self.day_weights() > 0):
            raise ConfigError("monthly profile gives zero weight to every day in the span")

    def days(self) -> list[date]:
        return [self.start + timedelta(days=i) for i in range(self.n_days)]

    def day_weights(self) -> np.ndarray:
        return np.array([self.monthly_profile[d.month - 1] for d in self.days()])


_LIST_KEYS = {"diurnal": "diurnal_profile", "monthly": "monthly_profile", "azimuth": "azimuth_profile"}


def load_scenario_spec(text: str) -> ScenarioSpec:
    """Parse a key=value scenario config; profile weights are comma lists."""
    kw: dict = {}
    elevation = list(ScenarioSpec.elevation_range)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        try:
            if key in _LIST_KEYS:
                kw[_LIST_KEYS[key]] = tuple(float(v) for v in value.split(","))
            elif key in ("seed", "n_records", "n_days", "n_sats"):
                kw[key] = int(value)
            elif key == "start":
                kw[key] = date.fromisoformat(value)
            elif key in ("station_lat", "station_lon", "s4_alpha", "s4_beta", "s4_max"):
                kw[key] = float(value)
            elif key == "elevation_min":
                elevation[0] = float(value)
            elif key == "elevation_max":
                elevation[1] = float(value)
            elif key == "band":
                kw["freq_mhz"] = get_band(value).freq_mhz
            elif key == "freq_mhz":
                kw["freq_mhz"] = float(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    kw["elevation_range"] = tuple(elevation)
    return ScenarioSpec(**kw)


@dataclass
class GroundTruth:
    """Histograms of what the generator drew (all records and S4 > 0.6)."""

    n_records: int
    hour_lt: np.ndarray = field(default_factory=lambda: np.zeros(24, np.int64))
    month: np.ndarray = field(default_factory=lambda: np.zeros(12, np.int64))
    year: dict[int, int] = field(default_factory=dict)
    azimuth_sector: np.ndarray = field(default_factory=lambda: np.zeros(12, np.int64))
    strong_hour_lt: np.ndarray = field(default_factory=lambda: np.zeros(24, np.int64))
    strong_month: np.ndarray = field(default_factory=lambda: np.zeros(12, np.int64))
    strong_azimuth_sector: np.ndarray = field(default_factory=lambda: np.zeros(12, np.int64))

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "hour_lt": self.hour_lt.tolist(),
            "month": self.month.tolist(),
            "year": {str(k): v for k, v in sorted(self.year.items())},
            "azimuth_sector": self.azimuth_sector.tolist(),
            "strong_threshold": STRONG_LOWER,
            "strong_hour_lt": self.strong_hour_lt.tolist(),
            "strong_month": self.strong_month.tolist(),
            "strong_azimuth_sector": self.strong_azimuth_sector.tolist(),
        }


@dataclass
class Scenario:
    records: list[ScintRecord]
    truth: GroundTruth


def expected_marginals(spec: ScenarioSpec) -> dict[str, np.ndarray]:
    """Probabilities of each LT hour, month and azimuth sector under ``spec``."""
    days = spec.days()
    w = spec.day_weights()
    month_p = np.zeros(12)
    for d, wd in zip(days, w):
        month_p[d.month - 1] += wd
    norm = lambda v: np.asarray(v, float) / np.sum(v)
    return {"hour_lt": norm(spec.diurnal_profile), "month": norm(month_p), "azimuth_sector": norm(spec.azimuth_profile)}


def block_seeds(seed: int, n_blocks: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n_blocks)


def _draw_block(spec: ScenarioSpec, seq: np.random.SeedSequence, size: int, calendar, truth: GroundTruth):
    day_ord, day_p, day_month, day_year = calendar
    rng = np.random.default_rng(seq)
    p = lambda w: np.asarray(w) / np.sum(w)
    day_idx = rng.choice(day_ord.size, size, p=day_p)
    hour = rng.choice(24, size, p=p(spec.diurnal_profile))
    minute = rng.integers(0, 60, size)
    sector = rng.choice(12, size, p=p(spec.azimuth_profile))
    az = np.minimum(sector * 30.0 + rng.random(size) * 30.0, np.nextafter((sector + 1) * 30.0, 0.0))
    el = rng.uniform(*spec.elevation_range, size)
    s4 = np.round(spec.s4_max * rng.beta(spec.s4_alpha, spec.s4_beta, size), 4)
    prn = rng.integers(1, spec.n_sats + 1, size)

    # mid-minute local time keeps the sub-second UTC rounding inside the minute
    lt_s = day_ord[day_idx] * 86400 + hour * 3600 + minute * 60 + 30
    utc_s = np.rint(lt_s - spec.station_lon / 15.0 * 3600.0).astype(np.int64)

    strong = s4 > STRONG_LOWER
    month_idx = day_month[day_idx] - 1
    for arr, everything, strong_only in (
        (hour, truth.hour_lt, truth.strong_hour_lt),
        (month_idx, truth.month, truth.strong_month),
        (sector, truth.azimuth_sector, truth.strong_azimuth_sector),
    ):
        everything += np.bincount(arr, minlength=len(everything))
        strong_only += np.bincount(arr[strong], minlength=len(strong_only))
    for k, c in zip(*np.unique(day_year[day_idx], return_counts=True)):
        truth.year[int(k)] = truth.year.get(int(k), 0) + int(c)

    lat, lon, freq = spec.station_lat, spec.station_lon, spec.freq_mhz
    gps, ground = Constellation.GPS, Source.GROUND
    return [
        ScintRecord(_EPOCH + timedelta(seconds=t), ground, gps, f"G{n:02d}", freq, s, e, a, lat, lon)
        for t, n, s, e, a in zip(utc_s.tolist(), prn.tolist(), s4.tolist(), el.tolist(), az.tolist())
    ]


def gen_scenario(spec: ScenarioSpec) -> Scenario:
    """Generate the seeded record stream (sorted by time) and its ground truth."""
    days = spec.days()
    w = spec.day_weights()
    calendar = (
        np.array([(d - _EPOCH.date()).days for d in days], dtype=np.int64),
        w / w.sum(),
        np.array([d.month for d in days]),
        np.array([d.year for d in days]),
    )
    truth = GroundTruth(spec.n_records)
    n_blocks = -(-spec.n_records // BLOCK_SIZE)
    records: list[ScintRecord] = []
    for i, seq in enumerate(block_seeds(spec.seed, n_blocks)):
        size = min(BLOCK_SIZE, spec.n_records - i * BLOCK_SIZE)
        records.extend(_draw_block(spec, seq, size, calendar, truth))
    records.sort(key=lambda r: (r.timestamp_utc, r.sat_id))
    return Scenario(records, truth)
