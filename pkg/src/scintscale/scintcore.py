"""Domain types, the S4 index, frequency scaling and the exponent model.

The S4 index is the normalized standard deviation of received signal
intensity over a (nominally 60 s) window.  Scintillation measured at one
carrier frequency is transferred to another with the power law

    S4(f2) = S4(f1) * (f2 / f1) ** (-n)

where the exponent ``n`` depends on scintillation strength: about 1.5 for
weak scattering, falling linearly to 0 as S4 saturates at unity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import (
    ConfigError,
    EmptyWindow,
    EqualFrequencies,
    NonPositiveFrequency,
    NonPositiveS4,
    UnknownBand,
    ZeroMeanIntensity,
)

WEAK_UPPER = 0.3  # S4 below this is weak scintillation
STRONG_LOWER = 0.6  # S4 above this is strong scintillation
S4_REJECT = 1.5  # ingest treats larger values as sensor artifacts
DEFAULT_CEILING = 1.0
MIN_WINDOW_SAMPLES = 30
DNA_PLATEAU = 1.5
DNA_DOMAIN = (0.3, 1.0)


class Source(enum.Enum):
    GROUND = "GROUND"
    RO = "RO"


class Constellation(enum.Enum):
    GPS = "GPS"
    GALILEO = "GALILEO"
    OTHER = "OTHER"


class BandRole(enum.Enum):
    GNSS = "GNSS"
    D2C = "D2C"


class Severity(enum.IntEnum):
    WEAK = 0
    MODERATE = 1
    STRONG = 2


@dataclass(frozen=True)
class FrequencyBand:
    name: str
    freq_mhz: float
    role: BandRole = BandRole.GNSS

    def __post_init__(self):
        if not self.freq_mhz > 0:
            raise NonPositiveFrequency(f"band {self.name!r}: frequency must be > 0, got {self.freq_mhz}")


L1 = FrequencyBand("L1", 1575.42, BandRole.GNSS)
L2 = FrequencyBand("L2", 1227.60, BandRole.GNSS)
L5 = FrequencyBand("L5", 1176.45, BandRole.GNSS)
LB = FrequencyBand("LB", 800.0, BandRole.D2C)
N255 = FrequencyBand("N255", 1600.0, BandRole.D2C)
N256 = FrequencyBand("N256", 2000.0, BandRole.D2C)

BANDS: dict[str, FrequencyBand] = {b.name: b for b in (L1, L2, L5, LB, N255, N256)}


def get_band(name: str) -> FrequencyBand:
    """Look up a registered band by name (case-insensitive)."""
    try:
        return BANDS[name.strip().upper()]
    except KeyError:
        known = ", ".join(BANDS)
        raise UnknownBand(f"unknown band {name!r}; known bands: {known}") from None


def band_for_frequency(freq_mhz: float) -> FrequencyBand:
    """Registered band at exactly ``freq_mhz``, or an ad-hoc band named after it."""
    for band in BANDS.values():
        if band.freq_mhz == freq_mhz:
            return band
    return FrequencyBand(f"{freq_mhz:g}MHz", freq_mhz)


def _mhz(f) -> float:
    mhz = f.freq_mhz if isinstance(f, FrequencyBand) else float(f)
    if not mhz > 0:
        raise NonPositiveFrequency(f"frequency must be > 0 MHz, got {mhz}")
    return mhz


@dataclass
class IntensitySeries:
    """Detrended signal intensity samples inside one S4 window."""

    times: np.ndarray
    intensity: np.ndarray
    window_s: float = 60.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.times.shape != self.intensity.shape or self.times.ndim != 1:
            raise ValueError("times and intensity must be 1-D arrays of equal length")
        if np.any(self.intensity < 0) or not np.all(np.isfinite(self.intensity)):
            raise ValueError("intensity samples must be finite and non-negative")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("time offsets must be strictly increasing")

    @classmethod
    def from_samples(cls, samples, window_s: float = 60.0) -> "IntensitySeries":
        """Build from an iterable of ``(time_offset_s, intensity)`` pairs."""
        pairs = list(samples)
        times = [t for t, _ in pairs]
        values = [i for _, i in pairs]
        return cls(np.array(times, dtype=float), np.array(values, dtype=float), window_s)

    @classmethod
    def evenly_spaced(cls, intensity, window_s: float = 60.0) -> "IntensitySeries":
        intensity = np.asarray(intensity, dtype=float)
        times = np.arange(intensity.size) * (window_s / max(intensity.size, 1))
        return cls(times, intensity, window_s)

    def __len__(self):
        return self.intensity.size


@dataclass(frozen=True, slots=True)
class ScintRecord:
    """One timestamped S4 observation on one link."""

    timestamp_utc: datetime
    source: Source
    constellation: Constellation
    sat_id: str
    freq_mhz: float
    s4: float
    elevation_deg: float | None = None
    azimuth_deg: float | None = None
    lat_deg: float = 0.0
    lon_deg: float = 0.0

    def __post_init__(self):
        if self.timestamp_utc.tzinfo is None:
            raise ValueError("timestamp_utc must be timezone-aware")
        if not (math.isfinite(self.s4) and 0.0 <= self.s4 <= S4_REJECT):
            raise ValueError(f"s4 must be finite and within [0, {S4_REJECT}], got {self.s4}")
        if not self.freq_mhz > 0:
            raise ValueError(f"freq_mhz must be > 0, got {self.freq_mhz}")
        if self.elevation_deg is not None and not 0.0 <= self.elevation_deg <= 90.0:
            raise ValueError(f"elevation out of [0, 90]: {self.elevation_deg}")
        if self.azimuth_deg is not None and not 0.0 <= self.azimuth_deg < 360.0:
            raise ValueError(f"azimuth out of [0, 360): {self.azimuth_deg}")
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat_deg}")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon_deg}")

    def with_s4(self, s4: float, freq_mhz: float) -> "ScintRecord":
        return ScintRecord(
            self.timestamp_utc, self.source, self.constellation, self.sat_id, freq_mhz, s4,
            self.elevation_deg, self.azimuth_deg, self.lat_deg, self.lon_deg,
        )


def utc(year, month, day, hour=0, minute=0, second=0) -> datetime:
    return datetime(year, month, day, hour, minute, second, tzinfo=timezone.utc)


class ModelKind(enum.Enum):
    DNA_LINEAR = "DNA_LINEAR"
    FITTED = "FITTED"


@dataclass(frozen=True)
class ExponentModel:
    """Piecewise exponent n(S4): plateau, linear segment, then zero.

    Below ``domain[0]`` the exponent is the weak-scattering plateau; on the
    domain it follows ``slope * s4 + intercept``; at and above ``domain[1]``
    it is 0.  Evaluation is clamped at 0 from below.
    """

    kind: ModelKind
    slope: float
    intercept: float
    weak_plateau: float = DNA_PLATEAU
    domain: tuple[float, float] = field(default=DNA_DOMAIN)

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ConfigError(f"exponent model domain must satisfy lo < hi, got {self.domain}")

    @classmethod
    def dna(cls, plateau: float = DNA_PLATEAU, domain: tuple[float, float] = DNA_DOMAIN) -> "ExponentModel":
        """Line through (domain[0], plateau) and (domain[1], 0)."""
        lo, hi = domain
        slope = -plateau / (hi - lo)
        return cls(ModelKind.DNA_LINEAR, slope, plateau * hi / (hi - lo), plateau, tuple(domain))

    @classmethod
    def fitted(cls, slope: float, intercept: float, domain: tuple[float, float] = DNA_DOMAIN,
               weak_plateau: float = DNA_PLATEAU) -> "ExponentModel":
        return cls(ModelKind.FITTED, float(slope), float(intercept), weak_plateau, tuple(domain))

    def __call__(self, s4):
        return n_of(self, s4)


DNA = ExponentModel.dna()


def n_of(model: ExponentModel, s4):
    """Evaluate the frequency exponent at ``s4`` (scalar or array)."""
    lo, hi = model.domain
    if np.ndim(s4) == 0:
        s4 = float(s4)
        if s4 < lo:
            n = model.weak_plateau
        elif s4 >= hi:
            n = 0.0
        elif model.kind is ModelKind.DNA_LINEAR:
            # endpoint form keeps n(lo) and n(hi) exact
            n = model.weak_plateau * ((hi - s4) / (hi - lo))
        else:
            n = model.slope * s4 + model.intercept
        return max(n, 0.0)
    s4 = np.asarray(s4, dtype=float)
    if model.kind is ModelKind.DNA_LINEAR:
        linear = model.weak_plateau * ((hi - s4) / (hi - lo))
    else:
        linear = model.slope * s4 + model.intercept
    n = np.where(s4 < lo, model.weak_plateau, np.where(s4 >= hi, 0.0, linear))
    return np.maximum(n, 0.0)


def scale_s4_fixed_n(s4_f1, f1, f2, n):
    """Power-law transfer of S4 from ``f1`` to ``f2`` with a given exponent, unclamped."""
    return s4_f1 * (_mhz(f2) / _mhz(f1)) ** (-n)


def scale_s4(s4_f1: float, f1, f2, model: ExponentModel = DNA, ceiling: float | None = DEFAULT_CEILING) -> float:
    """Scale an S4 observation from carrier ``f1`` to carrier ``f2``.

    The exponent is evaluated at the measured (source) S4.  Results above
    ``ceiling`` are clamped to it; pass ``ceiling=None`` to disable.  Equal
    frequencies return the input unchanged.
    """
    mhz1, mhz2 = _mhz(f1), _mhz(f2)
    if s4_f1 < 0:
        raise ValueError(f"s4 must be >= 0, got {s4_f1}")
    if mhz1 == mhz2:
        return s4_f1
    out = s4_f1 * (mhz2 / mhz1) ** (-n_of(model, s4_f1))
    if ceiling is not None and out > ceiling:
        return float(ceiling)
    return out


def scale_s4_array(s4_f1, f1_mhz, f2, model: ExponentModel = DNA, ceiling: float | None = DEFAULT_CEILING) -> np.ndarray:
    """Vectorized :func:`scale_s4`; ``f1_mhz`` may be a per-element array."""
    s4_f1 = np.asarray(s4_f1, dtype=float)
    f1_mhz = np.broadcast_to(np.asarray(f1_mhz, dtype=float), s4_f1.shape)
    mhz2 = _mhz(f2)
    if np.any(f1_mhz <= 0):
        raise NonPositiveFrequency("source frequencies must be > 0 MHz")
    out = s4_f1 * (mhz2 / f1_mhz) ** (-n_of(model, s4_f1))
    if ceiling is not None:
        out = np.minimum(out, ceiling)
    return np.where(f1_mhz == mhz2, s4_f1, out)


def derive_n(s4_f1: float, s4_f2: float, f1, f2) -> float:
    """Frequency exponent implied by simultaneous S4 values at two carriers."""
    mhz1, mhz2 = _mhz(f1), _mhz(f2)
    if mhz1 == mhz2:
        raise EqualFrequencies(f"frequencies must differ, both are {mhz1} MHz")
    if not (s4_f1 > 0 and s4_f2 > 0):
        raise NonPositiveS4(f"S4 values must be > 0, got {s4_f1}, {s4_f2}")
    return math.log(s4_f2 / s4_f1) / math.log(mhz1 / mhz2)


def classify(s4: float) -> Severity:
    if s4 < WEAK_UPPER:
        return Severity.WEAK
    if s4 <= STRONG_LOWER:
        return Severity.MODERATE
    return Severity.STRONG


def compute_s4(series: IntensitySeries, min_samples: int = MIN_WINDOW_SAMPLES) -> float:
    """Raw S4 index of one window from arithmetic intensity moments.

    Parameters
    ----------
    series : IntensitySeries
        Intensity samples of the window.
    min_samples : int
        Minimum number of samples for a valid window (never below 2).

    Raises
    ------
    EmptyWindow
        Too few samples.
    ZeroMeanIntensity
        The mean intensity is zero.
    """
    needed = max(2, min_samples)
    if len(series) < needed:
        raise EmptyWindow(f"window has {len(series)} samples, need at least {needed}")
    intensity = series.intensity
    mean = intensity.mean()
    if mean <= 0:
        raise ZeroMeanIntensity("mean intensity over the window is zero")
    var = np.mean(intensity * intensity) - mean * mean
    return float(math.sqrt(max(var, 0.0) / (mean * mean)))
