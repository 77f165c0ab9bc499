import math
import random
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scintscale.errors import DegenerateDesign, EmptyInput, UnsortedInput, ZeroVariance
from scintscale.fitbench import (
    ExponentSample,
    build_pairs,
    compare_models,
    evaluate_model,
    fit_line,
    fitted_model,
    ols,
)
from scintscale.scintcore import (
    DNA,
    L1,
    L2,
    L5,
    LB,
    Constellation,
    ExponentModel,
    ModelKind,
    ScintRecord,
    Source,
    scale_s4,
    utc,
)

T0 = utc(2022, 3, 1)


def rec(minute, sat, freq, s4):
    return ScintRecord(T0 + timedelta(minutes=minute), Source.GROUND, Constellation.GPS, sat, freq, s4,
                       45.0, 180.0, 25.28, 55.46)


def samples_from(points):
    return [ExponentSample(x, y, T0, "G01", 0.5) for x, y in points]


def lstsq_oracle(x, y):
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    return slope, intercept


class TestBuildPairs:
    def test_single_epoch(self):
        out = build_pairs([rec(0, "G07", L1.freq_mhz, 0.3)], [rec(0, "G07", L2.freq_mhz, 0.483)])
        assert len(out) == 1
        expected = math.log(0.483 / 0.3) / math.log(1575.42 / 1227.60)
        assert out[0].n_observed == pytest.approx(expected, rel=1e-12)
        assert out[0].n_observed == pytest.approx(1.909, abs=1e-3)
        assert (out[0].s4_source, out[0].s4_target) == (0.3, 0.483)

    def test_disjoint(self):
        assert build_pairs([rec(0, "G07", L1.freq_mhz, 0.5)], [rec(1, "G07", L2.freq_mhz, 0.6)]) == []
        assert build_pairs([rec(0, "G07", L1.freq_mhz, 0.5)], [rec(0, "G08", L2.freq_mhz, 0.6)]) == []

    def test_domain_filter(self):
        f1 = [rec(0, "G07", L1.freq_mhz, 0.2), rec(1, "G07", L1.freq_mhz, 0.8)]
        f2 = [rec(0, "G07", L2.freq_mhz, 0.35), rec(1, "G07", L2.freq_mhz, 1.05)]
        assert build_pairs(f1, f2) == []
        assert [s.s4_source for s in build_pairs(f1, f2, filter_side="source")] == [0.8]
        assert [s.s4_source for s in build_pairs(f1, f2, filter_side="target")] == [0.2]

    def test_skew(self):
        f1 = [rec(0, "G07", L1.freq_mhz, 0.5)]
        f2 = [ScintRecord(T0 + timedelta(seconds=20), Source.RO, Constellation.GPS, "G07", L2.freq_mhz, 0.6)]
        assert build_pairs(f1, f2) == []
        assert len(build_pairs(f1, f2, max_skew_s=30)) == 1

    def test_unsorted(self):
        f1 = [rec(1, "G07", L1.freq_mhz, 0.5), rec(0, "G07", L1.freq_mhz, 0.5)]
        with pytest.raises(UnsortedInput):
            build_pairs(f1, [])

    def test_permutation_invariance(self):
        rng = random.Random(3)
        f1, f2 = [], []
        for minute in range(200):
            for sat in ("G01", "G02", "G03"):
                s = rng.uniform(0.25, 0.9)
                f1.append(rec(minute, sat, L1.freq_mhz, s))
                f2.append(rec(minute, sat, L2.freq_mhz, min(1.2, s * rng.uniform(1.0, 1.5))))
        baseline = build_pairs(f1, f2)
        assert baseline
        for _ in range(5):
            a, b = f1[:], f2[:]
            rng.shuffle(a)
            rng.shuffle(b)
            a.sort(key=lambda r: r.timestamp_utc)
            b.sort(key=lambda r: r.timestamp_utc)
            assert build_pairs(a, b) == baseline


class TestFitLine:
    def test_exact_dna_points(self):
        fit = fit_line(samples_from([(0.3, 1.5), (0.65, 0.75), (1.0, 0.0)]))
        assert fit.slope == pytest.approx(-15 / 7, abs=1e-12)
        assert fit.intercept == pytest.approx(15 / 7, abs=1e-12)
        assert fit.rmse is None and fit.r2 is None and fit.sample_count == 3

    def test_two_points(self):
        fit = fit_line(samples_from([(0.4, 1.0), (0.8, 0.6)]))
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert fit.intercept == pytest.approx(1.4, abs=1e-12)

    def test_noisy_dna(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(0.3, 1.0, 10_000)
        y = DNA(x) + rng.normal(0, 0.05, x.size)
        fit = fit_line(samples_from(zip(x, y)))
        assert (fit.slope, fit.intercept) == pytest.approx(lstsq_oracle(x, y), abs=1e-10)
        assert abs(fit.slope + 15 / 7) < 0.05
        assert abs(fit.intercept - 15 / 7) < 0.03

    def test_degenerate(self):
        with pytest.raises(DegenerateDesign):
            fit_line(samples_from([(0.5, 1.0), (0.5, 0.8)]))
        with pytest.raises(DegenerateDesign):
            fit_line(samples_from([(0.5, 1.0)]))

    @given(st.integers(0, 2**31))
    @settings(max_examples=30, deadline=None)
    def test_ols_optimality(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.3, 1.0, 50)
        y = rng.normal(1.0 - x, 0.2)
        slope, intercept = ols(x, y)
        sse = lambda a, b: float(np.sum((y - a * x - b) ** 2))
        best = sse(slope, intercept)
        for da in (-1e-3, 0, 1e-3):
            for db in (-1e-3, 0, 1e-3):
                assert sse(slope + da, intercept + db) >= best

    @pytest.mark.parametrize("slope, intercept, sigma", [(-15 / 7, 15 / 7, 0.1), (-3.0, 3.0, 0.2), (0.0, 0.5, 0.05), (-1.2, 1.9, 0.3)])
    def test_fit_recovery(self, slope, intercept, sigma):
        rng = np.random.default_rng(abs(hash((slope, intercept))) % 2**32)
        x = rng.uniform(0.3, 1.0, 100_000)
        y = slope * x + intercept + rng.normal(0, sigma, x.size)
        fs, fi = ols(x, y)
        sxx = np.sum((x - x.mean()) ** 2)
        sd_slope = sigma / math.sqrt(sxx)
        sd_icpt = sigma * math.sqrt(1 / x.size + x.mean() ** 2 / sxx)
        assert abs(fs - slope) < 3 * sd_slope
        assert abs(fi - intercept) < 3 * sd_icpt


def dna_pairs(n, f2, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    src = rng.uniform(0.3, 0.8, n)
    truth = np.array([scale_s4(s, L1, f2, DNA, ceiling=None) for s in src])
    return list(zip(src, truth + rng.normal(0, noise, n) if noise else truth))


class TestEvaluate:
    def test_self_consistent(self):
        m = evaluate_model(dna_pairs(200, L2), L1, L2, DNA)
        assert m.rmse == pytest.approx(0.0, abs=1e-14)
        assert m.r2 == pytest.approx(1.0, abs=1e-12)
        assert m.sample_count == 200

    def test_zero_variance(self):
        with pytest.raises(ZeroVariance):
            evaluate_model([(0.5, 0.6)] * 5, L1, L2, DNA)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            evaluate_model([], L1, L2, DNA)

    def test_non_positive(self):
        with pytest.raises(ValueError):
            evaluate_model([(0.5, 0.0), (0.4, 0.5)], L1, L2, DNA)

    def test_noisy_rmse(self):
        pairs = dna_pairs(20_000, L5, seed=5, noise=0.08)
        pairs = [(s, t) for s, t in pairs if t > 0]
        m = evaluate_model(pairs, L1, L5, DNA)
        assert m.rmse == pytest.approx(0.08, abs=0.01)
        pred = np.array([scale_s4(s, L1, L5, DNA, ceiling=None) for s, _ in pairs])
        truth = np.array([t for _, t in pairs])
        r2 = 1 - np.sum((pred - truth) ** 2) / np.sum((truth - truth.mean()) ** 2)
        assert m.r2 == pytest.approx(r2, rel=1e-12)

    def test_unclamped(self):
        pairs = [(0.5, 1.0334709), (0.4, 0.9)]
        m = evaluate_model(pairs, L1, LB, DNA)
        assert m.rmse < 0.1  # a ceiling at 1.0 would not reproduce 1.033


class TestCompare:
    def test_fitted_matches_dna_on_dna_data(self):
        pairs = dna_pairs(500, L2, seed=2)
        samples = [ExponentSample(s, math.log(t / s) / math.log(L1.freq_mhz / L2.freq_mhz), T0, "G01", t) for s, t in pairs]
        fitted = fitted_model(samples)
        assert fitted.slope == pytest.approx(-15 / 7, abs=1e-9)
        rows = compare_models(pairs, L1, L2, [fitted, DNA])
        assert [k for k, _ in rows] == [ModelKind.DNA_LINEAR, ModelKind.FITTED]
        assert abs(rows[0][1].rmse - rows[1][1].rmse) < 1e-9
        assert rows[1][1].r2 == pytest.approx(1.0, abs=1e-12)

    def test_empty_models(self):
        assert compare_models(dna_pairs(10, L2), L1, L2, []) == []

    def test_single_model(self):
        pairs = dna_pairs(50, L5, seed=9, noise=0.02)
        model = ExponentModel.fitted(-2.0, 2.1)
        assert compare_models(pairs, L1, L5, [model]) == [(ModelKind.FITTED, evaluate_model(pairs, L1, L5, model))]
