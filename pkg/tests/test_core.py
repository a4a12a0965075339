"""Phase spaces, metric helpers, and trajectory windows."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orbitglue.core import (
    INTERVAL,
    PLANE,
    TORUS,
    State,
    TrajectoryWindow,
    diameter,
    distance,
    pointwise_distance,
    space_dim,
    torus_nearest_lift,
    verify_trajectory,
    wrap01,
)
from orbitglue.maps import PiecewiseLinearMap, forward_window


def test_space_dims_and_diameters():
    assert space_dim(INTERVAL) == 1
    assert space_dim(PLANE) == 2
    assert space_dim(TORUS) == 2
    assert diameter(INTERVAL) == 1.0
    assert diameter(TORUS) == pytest.approx(np.sqrt(0.5))
    assert diameter(PLANE) == np.inf


def test_wrap01_guards_the_edge():
    assert wrap01(1.0) == 0.0
    assert wrap01(0.0) == 0.0
    assert wrap01(1.75) == pytest.approx(0.75)
    # floor of a tiny negative must not surface as 1.0
    assert 0.0 <= wrap01(-1e-18) < 1.0
    assert wrap01(np.nextafter(1.0, 0.0)) < 1.0


class TestState:
    def test_interval_accepts_endpoints(self):
        assert State((0.0,), INTERVAL).value == 0.0
        assert State((1.0,), INTERVAL).value == 1.0

    def test_interval_rejects_outside(self):
        with pytest.raises(ValueError):
            State((1.0 + 1e-9,), INTERVAL)
        with pytest.raises(ValueError):
            State((-0.1,), INTERVAL)

    def test_torus_is_half_open(self):
        State((0.0, 0.999), TORUS)
        with pytest.raises(ValueError):
            State((0.5, 1.0), TORUS)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            State((0.1, 0.2), INTERVAL)
        with pytest.raises(ValueError):
            State((0.1,), PLANE)

    def test_plane_value_is_array(self):
        v = State((3.0, -4.0), PLANE).value
        assert isinstance(v, np.ndarray)
        assert np.array_equal(v, [3.0, -4.0])


def test_interval_distance_is_absolute_difference():
    assert distance(INTERVAL, 0.2, 0.9) == pytest.approx(0.7)
    assert distance(INTERVAL, 0.5, 0.5) == 0.0


def test_torus_distance_wraps_around():
    # 0.95 and 0.05 are 0.1 apart through the seam, not 0.9
    assert distance(TORUS, (0.95, 0.0), (0.05, 0.0)) == pytest.approx(0.1)
    assert distance(TORUS, (0.9, 0.9), (0.1, 0.1)) == pytest.approx(np.sqrt(0.08))


def test_plane_distance_is_euclidean():
    assert distance(PLANE, (0.0, 0.0), (3.0, 4.0)) == pytest.approx(5.0)


unit = st.floats(min_value=0.0, max_value=1.0, exclude_max=True)


@given(ax=unit, ay=unit, bx=unit, by=unit, cx=unit, cy=unit)
def test_torus_metric_axioms(ax, ay, bx, by, cx, cy):
    a, b, c = (ax, ay), (bx, by), (cx, cy)
    dab = distance(TORUS, a, b)
    assert dab == pytest.approx(distance(TORUS, b, a))
    assert distance(TORUS, a, a) == 0.0
    assert dab <= diameter(TORUS) + 1e-12
    assert dab <= distance(TORUS, a, c) + distance(TORUS, c, b) + 1e-12


@given(bx=unit, by=unit, ox=unit, oy=unit)
def test_torus_nearest_lift_attains_the_distance(bx, by, ox, oy):
    base = np.array([bx, by])
    other = np.array([ox, oy])
    lift = torus_nearest_lift(base, other)
    assert np.allclose(lift % 1.0, other)
    assert np.linalg.norm(base - lift) == pytest.approx(distance(TORUS, base, other))


def test_pointwise_distance_matches_scalar():
    a = np.array([0.95, 0.2, 0.5])
    b = np.array([0.05, 0.9, 0.5])
    d = pointwise_distance(INTERVAL, a, b)
    assert np.allclose(d, [0.9, 0.7, 0.0])
    at = np.column_stack([a, np.zeros(3)])
    bt = np.column_stack([b, np.zeros(3)])
    dt = pointwise_distance(TORUS, at, bt)
    assert dt[0] == pytest.approx(0.1)


class TestTrajectoryWindow:
    def setup_method(self):
        self.w = TrajectoryWindow(np.array([0.1, 0.2, 0.4, 0.8]), 2, INTERVAL)

    def test_index_bookkeeping(self):
        assert len(self.w) == 4
        assert self.w.neg_len == 2
        assert self.w.pos_len == 2
        assert list(self.w.index_range) == [-2, -1, 0, 1]
        assert self.w.value(-2) == 0.1
        assert self.w.value(0) == 0.4
        assert self.w.value(1) == 0.8

    def test_out_of_range_index(self):
        with pytest.raises(IndexError):
            self.w.value(2)
        with pytest.raises(IndexError):
            self.w.value(-3)

    def test_points_are_frozen(self):
        with pytest.raises(ValueError):
            self.w.points[0] = 0.5

    def test_shift_relabels_origin(self):
        s = self.w.shift(1)
        assert s.value(0) == 0.8
        assert s.value(-3) == 0.1
        assert list(s.index_range) == [-3, -2, -1, 0]
        with pytest.raises(IndexError):
            self.w.shift(5)

    def test_state_roundtrip(self):
        assert self.w.state(0).value == 0.4

    def test_bad_neg_len(self):
        with pytest.raises(ValueError):
            TrajectoryWindow(np.array([0.1, 0.2]), 3, INTERVAL)


def test_verify_trajectory_true_orbit(doubling):
    w = forward_window(doubling, 0.3, 30)
    assert verify_trajectory(doubling, w) <= 1e-15


def test_verify_trajectory_reports_worst_defect(doubling):
    pts = forward_window(doubling, 0.3, 10).points.copy()
    pts[6] += 0.125
    w = TrajectoryWindow(pts, 0, INTERVAL)
    # the break shows up both entering and leaving the edited row
    assert verify_trajectory(doubling, w) == pytest.approx(0.25)
