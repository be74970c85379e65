import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vlpcal.errors import DegenerateGeometry, EmptyInput
from vlpcal.geometry import Pose, WorldPoint
from vlpcal.metrics import (FittedLine, dynamic_errors, empirical_cdf, error_stats, fit_line, line_angle,
                            nearest_rank, point_segment_distance, summarize, trajectory_line)
from vlpcal.simulator import TrialRecord
from vlpcal.solver import PoseEstimate
from vlpcal.utils import TrialFailure


def _record(index, true_xyz, est_xyz):
    estimate = PoseEstimate(WorldPoint(*est_xyz), 0., 1300., 2, 0., 0., 0., 'two-led')
    return TrialRecord(index, Pose(true_xyz, 0.), None, estimate, (0, 1, index))


def _failed(index, true_xyz=(0., 0., 300.)):
    return TrialRecord(index, Pose(true_xyz, 0.), None, TrialFailure(ValueError('boom')), (0, 1, index))


class TestSummarize(object):
    def test_example(self):
        s = summarize([1., 2., 3., 4.])
        assert s.n == 4
        assert s.mean_mm == 2.5
        assert s.max_mm == 4.
        assert s.p50_mm == 2.
        assert s.p90_mm == 4.
        assert s.rms_mm == pytest.approx(math.sqrt(7.5))
        assert s.std_mm == pytest.approx(math.sqrt(1.25))
        assert s.cdf == [(1., 0.25), (2., 0.5), (3., 0.75), (4., 1.)]
        assert s.n_failed == 0

    def test_single(self):
        s = summarize([0.7])
        assert s.mean_mm == s.p50_mm == s.p90_mm == s.max_mm == 0.7
        assert s.cdf == [(0.7, 1.)]

    def test_empty(self):
        with pytest.raises(EmptyInput):
            summarize([], n_failed=3)

    def test_permutation_invariant(self):
        rng = np.random.RandomState(12)
        errors = list(rng.exponential(10., size=101))
        shuffled = list(errors)
        rng.shuffle(shuffled)
        assert summarize(errors) == summarize(shuffled)

    def test_ties(self):
        assert empirical_cdf([1., 1., 2.]) == [(1., 2. / 3.), (2., 1.)]

    def test_cdf_at(self):
        s = summarize([1., 2., 3., 4.])
        assert s.cdf_at(0.5) == 0.
        assert s.cdf_at(2.) == 0.5
        assert s.cdf_at(2.5) == 0.5
        assert s.cdf_at(100.) == 1.

    @pytest.mark.parametrize('p, expected', [(0.1, 1), (0.5, 5), (0.9, 9), (0.91, 10), (1., 10)])
    def test_nearest_rank(self, p, expected):
        assert nearest_rank(list(range(1, 11)), p) == expected

    def test_monotone_cdf(self):
        s = summarize(np.random.RandomState(13).uniform(0, 5, size=200))
        fractions = [f for _, f in s.cdf]
        errors = [e for e, _ in s.cdf]
        assert fractions == sorted(fractions)
        assert errors == sorted(set(errors))
        assert fractions[-1] == 1.


class TestErrorStats(object):
    def test_3d_and_plan(self):
        records = [_record(0, (0., 0., 300.), (3., 4., 300.)), _record(1, (0., 0., 300.), (0., 0., 312.)),
                   _failed(2)]
        full = error_stats(records)
        assert full.n == 2
        assert full.n_failed == 1
        assert full.mean_mm == pytest.approx(8.5)

        plan = error_stats(records, plan_only=True)
        assert plan.mean_mm == pytest.approx(2.5)

    def test_all_failed(self):
        with pytest.raises(EmptyInput):
            error_stats([_failed(0), _failed(1)])


class TestFitLine(object):
    def test_horizontal(self):
        line = fit_line([(-3., 1.), (0., 1.), (5., 1.)])
        assert_allclose(line.direction, (1., 0.), atol=1e-12)
        assert line.point == pytest.approx((2. / 3., 1.))
        assert line.rms_residual_mm == pytest.approx(0., abs=1e-12)

    def test_orientation(self):
        line = fit_line([(5., 5.), (0., 0.), (-5., -5.)])
        assert line.direction[0] > 0
        assert_allclose(line.direction, (math.sqrt(0.5), math.sqrt(0.5)))

        vertical = fit_line([(2., 5.), (2., -5.)])
        assert_allclose(vertical.direction, (0., 1.), atol=1e-12)

    def test_residual(self):
        line = fit_line([(0., 1.), (1., -1.), (2., 1.), (3., -1.)])
        assert line.rms_residual_mm == pytest.approx(math.sqrt(1.125 - math.sqrt(0.265625)))
        # no line through the points can do better than the fitted one
        rng = np.random.RandomState(14)
        pts = rng.normal(size=(50, 2)) * [10., 1.]
        best = fit_line(pts)
        for theta in np.linspace(0, math.pi, 181):
            d = np.array([math.cos(theta), math.sin(theta)])
            other = FittedLine(best.point, tuple(d), 0.)
            rms = math.sqrt(np.mean([other.distance(p) ** 2 for p in pts]))
            assert best.rms_residual_mm <= rms + 1e-12

    def test_degenerate(self):
        with pytest.raises(DegenerateGeometry):
            fit_line([(1., 1.)])
        with pytest.raises(DegenerateGeometry):
            fit_line([(1., 1.), (1., 1.)])

    def test_line_angle(self):
        line = FittedLine((0., 0.), (math.cos(0.1), math.sin(0.1)), 0.)
        assert line_angle(line, ((0., 0.), (10., 0.))) == pytest.approx(0.1)
        assert line_angle(line, ((10., 0.), (0., 0.))) == pytest.approx(0.1)
        with pytest.raises(DegenerateGeometry):
            line_angle(line, ((1., 1.), (1., 1.)))


class TestSegmentDistance(object):
    @pytest.mark.parametrize('p, expected', [
        ((5., 3.), 3.),
        ((-4., 3.), 5.),
        ((13., -4.), 5.),
        ((0., 0.), 0.),
    ])
    def test_distance(self, p, expected):
        assert point_segment_distance(p, (0., 0.), (10., 0.)) == pytest.approx(expected)

    def test_degenerate(self):
        with pytest.raises(DegenerateGeometry):
            point_segment_distance((1., 1.), (0., 0.), (0., 0.))


class TestDynamicErrors(object):
    def test_offsets(self):
        records = [_record(i, (x, 0., 300.), (x, 2., 300.)) for i, x in enumerate([-100., 0., 100.])]
        records.append(_failed(3))
        summary = dynamic_errors(records, ((-100., 0.), (100., 0.)))
        assert summary.mean_mm == pytest.approx(2.)
        assert summary.n_failed == 1

    def test_degenerate_command(self):
        with pytest.raises(DegenerateGeometry):
            dynamic_errors([_record(0, (0., 0., 300.), (0., 0., 300.))], ((0., 0.), (0., 0.)))

    def test_trajectory_line_skips_failures(self):
        records = [_record(i, (x, 0., 300.), (x, 0.5 * x, 300.)) for i, x in enumerate([-100., 0., 100.])]
        records.insert(1, _failed(9))
        line = trajectory_line(records)
        assert line_angle(line, ((-100., 0.), (100., 0.))) == pytest.approx(math.atan(0.5))
