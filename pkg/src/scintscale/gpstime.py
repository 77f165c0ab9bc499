"""GPS week / time-of-week to UTC."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

GPS_EPOCH = datetime(1980, 1, 6, tzinfo=timezone.utc)
SECONDS_PER_WEEK = 604800

# (first UTC instant the offset applies, GPS - UTC in seconds)
LEAP_SECONDS = [
    (datetime(2017, 1, 1, tzinfo=timezone.utc), 18),
]


def gps_minus_utc(gps_time: datetime) -> int:
    """GPS-UTC offset in force at ``gps_time``.

    Only the offset valid since 2017 is tabulated; earlier epochs are not
    supported.
    """
    for start, offset in reversed(LEAP_SECONDS):
        if gps_time - timedelta(seconds=offset) >= start:
            return offset
    raise ValueError(f"no leap-second entry for {gps_time.isoformat()}")


def gps_to_utc(week: int, tow_s: float) -> datetime:
    """Convert a full (unrolled) GPS week number and time of week to UTC."""
    if week < 0 or not 0 <= tow_s < SECONDS_PER_WEEK:
        raise ValueError(f"invalid GPS time: week={week}, tow={tow_s}")
    gps_time = GPS_EPOCH + timedelta(weeks=week, seconds=tow_s)
    return gps_time - timedelta(seconds=gps_minus_utc(gps_time))


def utc_to_gps(t: datetime) -> tuple[int, float]:
    gps_time = t
    for start, offset in reversed(LEAP_SECONDS):
        if t >= start:
            gps_time = t + timedelta(seconds=offset)
            break
    else:
        raise ValueError(f"no leap-second entry for {t.isoformat()}")
    elapsed = (gps_time - GPS_EPOCH).total_seconds()
    week = int(elapsed // SECONDS_PER_WEEK)
    return week, elapsed - week * SECONDS_PER_WEEK
