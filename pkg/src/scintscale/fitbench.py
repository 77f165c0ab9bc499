"""Exponent fitting on dual-frequency S4 pairs and scaling-model evaluation."""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateDesign, EmptyInput, UnsortedInput, ZeroVariance
from .scintcore import DNA_DOMAIN, ExponentModel, ModelKind, ScintRecord, derive_n, scale_s4

FILTER_SIDES = ("both", "source", "target")


@dataclass(frozen=True)
class ExponentSample:
    s4_source: float
    n_observed: float
    timestamp_utc: datetime
    sat_id: str
    s4_target: float


@dataclass(frozen=True)
class FitMetrics:
    slope: float
    intercept: float
    rmse: float | None = None
    r2: float | None = None
    sample_count: int = 0

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "rmse": self.rmse,
                "r2": self.r2, "n_samples": self.sample_count}


def _check_sorted(records: Sequence[ScintRecord], label: str):
    for a, b in zip(records, records[1:]):
        if b.timestamp_utc < a.timestamp_utc:
            raise UnsortedInput(f"{label} records are not sorted by timestamp (at {b.timestamp_utc.isoformat()})")


def _in_domain(s4: float, domain) -> bool:
    return domain[0] <= s4 <= domain[1]


def build_pairs(
    records_f1: Sequence[ScintRecord],
    records_f2: Sequence[ScintRecord],
    max_skew_s: float = 0.0,
    domain: tuple[float, float] = DNA_DOMAIN,
    filter_side: str = "both",
) -> list[ExponentSample]:
    """Match simultaneous observations of the same satellite at two carriers.

    Each ``records_f1`` entry is paired with the ``records_f2`` entry of the
    same ``sat_id`` nearest in time, if within ``max_skew_s``.  Pairs are kept
    when the S4 on ``filter_side`` ("both", "source" or "target") lies in
    ``domain``; the exponent of each kept pair is derived from the two S4
    values.
    """
    if filter_side not in FILTER_SIDES:
        raise ValueError(f"filter_side must be one of {FILTER_SIDES}, got {filter_side!r}")
    _check_sorted(records_f1, "f1")
    _check_sorted(records_f2, "f2")

    by_sat: dict[str, list[ScintRecord]] = defaultdict(list)
    for rec in records_f2:
        by_sat[rec.sat_id].append(rec)
    epochs = {sat: [r.timestamp_utc for r in recs] for sat, recs in by_sat.items()}

    samples = []
    for src in records_f1:
        candidates = by_sat.get(src.sat_id)
        if not candidates:
            continue
        times = epochs[src.sat_id]
        i = bisect.bisect_left(times, src.timestamp_utc)
        best, best_gap = None, math.inf
        for j in (i - 1, i):
            if 0 <= j < len(times):
                gap = abs((times[j] - src.timestamp_utc).total_seconds())
                if gap < best_gap:
                    best, best_gap = candidates[j], gap
        if best is None or best_gap > max_skew_s:
            continue
        keep_src = _in_domain(src.s4, domain) or filter_side == "target"
        keep_dst = _in_domain(best.s4, domain) or filter_side == "source"
        if not (keep_src and keep_dst) or src.s4 <= 0 or best.s4 <= 0:
            continue
        n = derive_n(src.s4, best.s4, src.freq_mhz, best.freq_mhz)
        samples.append(ExponentSample(src.s4, n, src.timestamp_utc, src.sat_id, best.s4))
    samples.sort(key=lambda s: (s.timestamp_utc, s.sat_id))
    return samples


def ols(x, y) -> tuple[float, float]:
    """Ordinary least-squares line ``y = slope * x + intercept``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise DegenerateDesign(f"need at least 2 samples, got {x.size}")
    x_mean, y_mean = x.mean(), y.mean()
    dx = x - x_mean
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateDesign("all abscissae are equal; slope is undetermined")
    slope = float(dx @ (y - y_mean)) / sxx
    return slope, float(y_mean - slope * x_mean)


def fit_line(samples: Sequence[ExponentSample]) -> FitMetrics:
    """Least-squares line of observed exponent against source S4."""
    x = [s.s4_source for s in samples]
    y = [s.n_observed for s in samples]
    slope, intercept = ols(x, y)
    return FitMetrics(slope, intercept, sample_count=len(x))


def fitted_model(samples: Sequence[ExponentSample], domain: tuple[float, float] = DNA_DOMAIN) -> ExponentModel:
    fit = fit_line(samples)
    return ExponentModel.fitted(fit.slope, fit.intercept, domain)


def evaluate_model(pairs: Iterable[tuple[float, float]], f1, f2, model: ExponentModel) -> FitMetrics:
    """RMSE and R^2 of model-scaled S4 against the observed S4 at ``f2``.

    Scaling is unclamped so the model's own error is measured.
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no S4 pairs to evaluate")
    src = np.array([p[0] for p in pairs], dtype=float)
    truth = np.array([p[1] for p in pairs], dtype=float)
    if np.any(src <= 0) or np.any(truth <= 0):
        raise ValueError("S4 pairs must be positive")
    pred = np.array([scale_s4(s, f1, f2, model, ceiling=None) for s in src])
    resid = pred - truth
    ss_res = float(resid @ resid)
    dev = truth - truth.mean()
    ss_tot = float(dev @ dev)
    if ss_tot == 0.0:
        raise ZeroVariance("observed S4 has zero variance; R^2 is undefined")
    return FitMetrics(model.slope, model.intercept, math.sqrt(ss_res / truth.size), 1.0 - ss_res / ss_tot, truth.size)


_KIND_ORDER = {kind: i for i, kind in enumerate(ModelKind)}


def compare_models(pairs, f1, f2, models: Sequence[ExponentModel]) -> list[tuple[ModelKind, FitMetrics]]:
    pairs = list(pairs)
    ordered = sorted(models, key=lambda m: _KIND_ORDER[m.kind])
    return [(m.kind, evaluate_model(pairs, f1, f2, m)) for m in ordered]
