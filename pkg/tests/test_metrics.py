import itertools
import math

import numpy as np
import pytest

from trackgym.estimation import GaussianEstimate
from trackgym.metrics import (
    EpisodeMetrics,
    GospaResult,
    covariance_norm_sum,
    gospa,
    track_to_truth_ratio,
)
from trackgym.tracker import Track, TrackList


def brute_force_gospa_p(truths, tracks, c, p):
    """Exhaustive minimum over all partial one-to-one matchings (p-powered)."""
    truths = np.asarray(truths, float).reshape(-1, 3)
    tracks = np.asarray(tracks, float).reshape(-1, 3)
    n, m = len(truths), len(tracks)
    half = c**p / 2.0
    best = math.inf
    for k in range(min(n, m) + 1):
        for truth_subset in itertools.combinations(range(n), k):
            for track_perm in itertools.permutations(range(m), k):
                cost = sum(
                    min(np.linalg.norm(truths[i] - tracks[j]), c) ** p
                    for i, j in zip(truth_subset, track_perm)
                )
                cost += half * ((n - k) + (m - k))
                best = min(best, cost)
    return best


class TestGospaExamples:
    def test_both_empty(self):
        result = gospa([], [], c=10.0, p=1.0)
        assert result.distance == 0.0
        assert result.localisation == result.missed == result.false_alarm == 0.0
        assert result.assignment == []

    def test_single_miss(self):
        result = gospa([[0.0, 0.0, 0.0]], [], c=10.0, p=1.0)
        assert result.distance == pytest.approx(5.0)
        assert result.missed == pytest.approx(5.0)
        assert result.localisation == 0.0
        assert result.false_alarm == 0.0

    def test_single_pair_below_cutoff(self):
        result = gospa([[0.0, 0.0, 0.0]], [[3.0, 0.0, 0.0]], c=10.0, p=1.0)
        assert result.distance == pytest.approx(3.0)
        assert result.localisation == pytest.approx(3.0)
        assert result.missed == 0.0
        assert result.false_alarm == 0.0
        assert result.assignment == [(0, 0)]

    def test_pair_beyond_cutoff_cut(self):
        result = gospa([[0.0, 0.0, 0.0]], [[100.0, 0.0, 0.0]], c=10.0, p=1.0)
        assert result.distance == pytest.approx(10.0)
        assert result.missed == pytest.approx(5.0)
        assert result.false_alarm == pytest.approx(5.0)
        assert result.assignment == []

    def test_argument_errors(self):
        with pytest.raises(ValueError):
            gospa([], [], c=-1.0)
        with pytest.raises(ValueError):
            gospa([], [], c=1.0, p=0.5)
        with pytest.raises(ValueError):
            gospa([], [], c=1.0, p=1.0, alpha=1.0)


class TestGospaProperties:
    def test_matches_brute_force_small(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n, m = rng.integers(0, 5), rng.integers(0, 5)
            truths = rng.uniform(-30, 30, size=(n, 3))
            tracks = rng.uniform(-30, 30, size=(m, 3))
            c, p = 20.0, float(rng.integers(1, 3))
            result = gospa(truths, tracks, c=c, p=p)
            expected = brute_force_gospa_p(truths, tracks, c, p)
            assert result.distance**p == pytest.approx(expected, abs=1e-9)

    def test_decomposition_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n, m = rng.integers(0, 8), rng.integers(0, 8)
            truths = rng.uniform(-50, 50, size=(n, 3))
            tracks = rng.uniform(-50, 50, size=(m, 3))
            result = gospa(truths, tracks, c=25.0, p=2.0)
            assert result.distance**2 == pytest.approx(
                result.localisation + result.missed + result.false_alarm, abs=1e-9
            )

    def test_metric_axioms(self):
        rng = np.random.default_rng(8)
        for _ in range(1000):
            sizes = rng.integers(0, 5, size=3)
            a = rng.uniform(-20, 20, size=(sizes[0], 3))
            b = rng.uniform(-20, 20, size=(sizes[1], 3))
            d = rng.uniform(-20, 20, size=(sizes[2], 3))
            c = 15.0
            dab = gospa(a, b, c=c, p=1.0).distance
            dba = gospa(b, a, c=c, p=1.0).distance
            assert dab == pytest.approx(dba, abs=1e-12)
            assert gospa(a, a, c=c, p=1.0).distance == pytest.approx(0.0, abs=1e-12)
            dad = gospa(a, d, c=c, p=1.0).distance
            ddb = gospa(d, b, c=c, p=1.0).distance
            assert dab <= dad + ddb + 1e-9


class TestCovarianceNormSum:
    def test_empty(self):
        assert covariance_norm_sum(TrackList()) == 0.0

    def test_identity(self):
        tl = TrackList(
            tracks=[Track(id=0, history=[GaussianEstimate(np.zeros(6), np.eye(6), 0.0)])],
            next_id=1,
        )
        assert covariance_norm_sum(tl) == pytest.approx(math.sqrt(6))

    def test_additivity(self):
        tracks = [
            Track(id=i, history=[GaussianEstimate(np.zeros(6), np.eye(6), 0.0)])
            for i in range(2)
        ]
        tl = TrackList(tracks=tracks, next_id=2)
        assert covariance_norm_sum(tl) == pytest.approx(2 * math.sqrt(6))


class TestTrackToTruth:
    def test_examples(self):
        assert track_to_truth_ratio(5, 5) == 1.0
        assert track_to_truth_ratio(0, 5) == 0.0
        assert track_to_truth_ratio(8, 5) == pytest.approx(1.6)

    def test_zero_truths_is_nan(self):
        assert math.isnan(track_to_truth_ratio(3, 0))


class TestEpisodeMetrics:
    def test_series_and_summaries(self):
        em = EpisodeMetrics()
        g = GospaResult(1.0, 1.0, 0.0, 0.0, [])
        em.append(g, 10.0, 2, 0.4)
        em.append(g, 30.0, 3, float("nan"))
        assert len(em) == 2
        assert em.mean_t2t() == pytest.approx(0.4)
        assert em.mean_cov_norm_sum() == pytest.approx(20.0)
        assert em.mean_cov_norm() == pytest.approx(40.0 / 5.0)
        assert em.mean_gospa() == pytest.approx(1.0)

    def test_empty_summaries_are_nan(self):
        em = EpisodeMetrics()
        assert math.isnan(em.mean_t2t())
        assert math.isnan(em.mean_cov_norm())
