import decimal
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ntn_coherence.errors import ZeroDistance
from ntn_coherence.geometry import (
    BodyState,
    SolidAngle,
    direction_vector,
    norm_shift,
    orthonormal_frame,
    position_at,
    solid_angle_of,
    unit_between,
    unit_vec3,
    vec3,
)

azimuths = st.floats(0.0, 2 * math.pi, exclude_max=True)
polars = st.floats(0.0, math.pi)
finite = st.floats(-1e6, 1e6, allow_nan=False)
vectors = st.tuples(finite, finite, finite)


@pytest.mark.parametrize(
    "az, el, expected",
    [(0.0, 0.0, [0, 0, 1]), (0.0, math.pi / 2, [1, 0, 0]), (math.pi / 2, math.pi / 2, [0, 1, 0])],
)
def test_direction_vector_axes(az, el, expected):
    np.testing.assert_allclose(direction_vector(az, el), expected, atol=1e-15)


def test_direction_vector_accepts_solid_angle():
    omega = SolidAngle.checked(math.pi, math.pi / 2)
    np.testing.assert_allclose(direction_vector(*omega), [-1, 0, 0], atol=1e-15)


@pytest.mark.parametrize("az, el", [(-0.1, 1.0), (2 * math.pi, 1.0), (1.0, -0.01), (1.0, 3.2)])
def test_solid_angle_ranges(az, el):
    with pytest.raises(ValueError):
        SolidAngle.checked(az, el)


@given(azimuths, polars)
def test_direction_vector_is_unit(az, el):
    assert abs(np.linalg.norm(direction_vector(az, el)) - 1.0) < 1e-12


@given(azimuths, st.floats(1e-6, math.pi - 1e-6))
def test_direction_vector_round_trip(az, el):
    # injective away from the poles: the inverse recovers both angles
    az2, el2 = solid_angle_of(direction_vector(az, el))
    assert abs(el2 - el) < 1e-7
    gap = abs(az2 - az)
    assert min(gap, 2 * math.pi - gap) < 1e-7 / math.sin(el)


def test_position_at_examples():
    np.testing.assert_array_equal(position_at(BodyState([0, 0, 0], [0, 2, 0]), 1.0), [0, 2, 0])
    bs = BodyState([-1e3, 0, 5e5], [7e3, 0, 0])
    np.testing.assert_array_equal(position_at(bs, 0.0), [-1e3, 0, 5e5])
    still = BodyState([3.0, -4.0, 5.0], [0, 0, 0])
    np.testing.assert_array_equal(position_at(still, 10.0), [3.0, -4.0, 5.0])


@given(vectors, vectors, st.floats(-100, 100), st.floats(-100, 100))
def test_position_at_affine(p0, v, t1, t2):
    b = BodyState(p0, v)
    lhs = position_at(b, t1 + t2)
    rhs = position_at(b, t1) + b.v * t2
    scale = 1.0 + np.abs(b.p0) + np.abs(b.v) * (abs(t1) + abs(t2))
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale)


def test_position_at_rejects_nonfinite_time():
    with pytest.raises(ValueError):
        position_at(BodyState([0, 0, 0], [1, 0, 0]), math.inf)


@pytest.mark.parametrize(
    "start, end, expected",
    [([0, 0, 0], [0, 0, 2], [0, 0, 1]), ([1, 0, 0], [0, 0, 0], [-1, 0, 0]), ([0, 0, 0], [3, 4, 0], [0.6, 0.8, 0])],
)
def test_unit_between(start, end, expected):
    np.testing.assert_allclose(unit_between(start, end), expected, atol=1e-15)


def test_unit_between_zero_distance():
    with pytest.raises(ZeroDistance):
        unit_between([1.0, 2.0, 3.0], [1.0, 2.0, 3.0 + 1e-10])


@pytest.mark.parametrize("bad", [[1, 2], [np.nan, 0, 0], [0, np.inf, 0]])
def test_vec3_rejects(bad):
    with pytest.raises(ValueError):
        vec3(bad)


def test_unit_vec3_tolerance():
    unit_vec3([0, 0, 1 + 5e-13])
    with pytest.raises(ValueError):
        unit_vec3([0, 0, 1 + 1e-11])


def test_vectors_are_read_only():
    b = BodyState([1, 2, 3], [0, 0, 0])
    with pytest.raises(ValueError):
        b.p0[0] = 5.0


small = st.floats(-1e-3, 1e-3).filter(lambda x: x == 0 or abs(x) > 1e-20)


@given(vectors, st.tuples(small, small, small))
def test_norm_shift_matches_high_precision(a, d):
    if math.hypot(*a) < 1.0:
        return
    with decimal.localcontext() as ctx:
        ctx.prec = 100
        A = [decimal.Decimal(x) for x in a]
        D = [decimal.Decimal(x) for x in d]
        exact = sum((x + y) ** 2 for x, y in zip(A, D)).sqrt() - sum(x * x for x in A).sqrt()
    got = norm_shift(np.array(a), np.array(d))
    assert abs(got - float(exact)) <= 1e-13 * math.hypot(*d) + 1e-300


def test_norm_shift_keeps_digits_where_subtraction_loses_them():
    a = np.array([-1e3, 0.0, 5e5])
    d = np.array([7e-6, 0.0, 0.0])
    # first order: a.d/|a|
    expected = a @ d / np.linalg.norm(a) + (d @ d - (a @ d / np.linalg.norm(a)) ** 2) / (2 * np.linalg.norm(a))
    assert norm_shift(a, d) == pytest.approx(expected, rel=1e-12)


@given(st.tuples(finite, finite, finite).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_orthonormal_frame(axis):
    axis = np.array(axis) / np.linalg.norm(axis)
    e1, e2 = orthonormal_frame(axis)
    m = np.stack([e1, e2, axis])
    np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(m) > 0
