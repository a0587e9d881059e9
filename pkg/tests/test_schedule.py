import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylesched.schedule import (AXIS_LAYER, AXIS_TIMESTEP, Schedule,
                                 WarpShape, layer_index, make_schedule,
                                 schedule_lookup, warp)

SHAPES = list(WarpShape)


def test_warp_linear_identity():
    assert warp(WarpShape.LINEAR, 0.5) == 0.5


def test_warp_cosine_midpoint():
    assert warp(WarpShape.COSINE, 0.5) == pytest.approx(0.5, abs=1e-12)


def test_warp_sqrt_quarter():
    assert warp(WarpShape.SQRT, 0.25) == pytest.approx(0.5, abs=1e-12)


def test_warp_exponential_half():
    expected = (math.exp(0.5) - 1.0) / (math.e - 1.0)
    assert warp(WarpShape.EXPONENTIAL, 0.5) == pytest.approx(expected, abs=1e-12)
    assert warp(WarpShape.EXPONENTIAL, 0.5) == pytest.approx(0.37754, abs=1e-5)


@pytest.mark.parametrize("shape", SHAPES)
def test_warp_endpoints(shape):
    assert abs(warp(shape, 0.0)) <= 1e-12
    assert abs(warp(shape, 1.0) - 1.0) <= 1e-12


@pytest.mark.parametrize("alpha", [-0.1, 1.1, 2.0])
def test_warp_rejects_out_of_range(alpha):
    with pytest.raises(ValueError):
        warp(WarpShape.LINEAR, alpha)


def test_make_schedule_linear_hand_values():
    s = make_schedule(0.75, 0.375, 6, WarpShape.LINEAR, AXIS_LAYER)
    expected = [0.750, 0.675, 0.600, 0.525, 0.450, 0.375]
    assert s.values == pytest.approx(expected, abs=1e-12)


def test_make_schedule_constant():
    for shape in SHAPES:
        s = make_schedule(0.4, 0.4, 9, shape)
        assert all(v == pytest.approx(0.4, abs=1e-12) for v in s.values)


def test_mean_gamma_timestep_linear():
    s = make_schedule(0.75, 0.375, 50, WarpShape.LINEAR, AXIS_TIMESTEP)
    assert sum(s.values) / 50 == pytest.approx(0.5625, abs=1e-9)


def test_make_schedule_rejects_small_n():
    with pytest.raises(ValueError):
        make_schedule(0.75, 0.375, 1, WarpShape.LINEAR)


def test_make_schedule_rejects_out_of_range_endpoints():
    with pytest.raises(ValueError):
        make_schedule(1.5, 0.5, 6, WarpShape.LINEAR)


def test_schedule_lookup_endpoints_and_interior():
    s = make_schedule(0.75, 0.375, 6, WarpShape.LINEAR, AXIS_LAYER)
    assert schedule_lookup(s, 0) == 0.75
    assert schedule_lookup(s, 5) == 0.375
    assert schedule_lookup(s, 2) == pytest.approx(0.600, abs=1e-12)


def test_schedule_lookup_out_of_range():
    s = make_schedule(0.75, 0.375, 6, WarpShape.LINEAR)
    with pytest.raises(IndexError):
        schedule_lookup(s, 6)
    with pytest.raises(IndexError):
        schedule_lookup(s, -1)


def test_layer_index_mapping():
    assert layer_index(6) == 0
    assert layer_index(11) == 5
    with pytest.raises(ValueError):
        layer_index(5)


@settings(max_examples=200, deadline=None)
@given(start=st.floats(0.0, 1.0), end=st.floats(0.0, 1.0),
       n=st.integers(2, 64), shape=st.sampled_from(SHAPES))
def test_schedule_invariants(start, end, n, shape):
    s = make_schedule(start, end, n, shape)
    assert len(s.values) == n
    assert abs(s.values[0] - start) <= 1e-12
    assert abs(s.values[-1] - end) <= 1e-12
    lo, hi = min(start, end), max(start, end)
    assert all(lo <= v <= hi for v in s.values)
    diffs = [b - a for a, b in zip(s.values, s.values[1:])]
    if start <= end:
        assert all(d >= 0.0 for d in diffs)
    else:
        assert all(d <= 0.0 for d in diffs)


@settings(max_examples=100, deadline=None)
@given(start=st.floats(0.0, 1.0), end=st.floats(0.0, 1.0), n=st.integers(2, 32))
def test_linear_reversal_symmetry(start, end, n):
    fwd = make_schedule(start, end, n, WarpShape.LINEAR)
    rev = make_schedule(end, start, n, WarpShape.LINEAR)
    assert fwd.values == pytest.approx(tuple(reversed(rev.values)), abs=1e-12)


def test_nonlinear_reversal_differs():
    fwd = make_schedule(0.75, 0.375, 6, WarpShape.SQRT)
    rev = make_schedule(0.375, 0.75, 6, WarpShape.SQRT)
    flipped = tuple(reversed(rev.values))
    assert max(abs(a - b) for a, b in zip(fwd.values, flipped)) > 1e-3


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(1e-6, 1.0 - 1e-6))
def test_shape_ordering_on_open_interval(alpha):
    quad = warp(WarpShape.QUADRATIC, alpha)
    lin = warp(WarpShape.LINEAR, alpha)
    root = warp(WarpShape.SQRT, alpha)
    assert quad < lin < root


def test_schedule_is_frozen():
    s = make_schedule(0.75, 0.375, 6, WarpShape.LINEAR)
    with pytest.raises(AttributeError):
        s.start = 0.9
