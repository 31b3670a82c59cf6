import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfconv import (
    DimensionTooSmallError,
    Field,
    NonFiniteValueError,
    ShapeMismatchError,
    VectorField,
    field_axpy,
    field_inner,
    field_new,
)

from .conftest import random_field
from .oracles import loop_inner


class TestFieldNew:
    def test_zero_fill(self):
        f = field_new((4, 4), 1, 1, 0.0)
        assert f.data.shape == (1, 1, 4, 4)
        assert np.count_nonzero(f.data) == 0
        assert f.data.size == 16

    def test_unit_fill_3d(self):
        f = field_new((3, 3, 3), 1, 1, 1.0)
        assert f.data.size == 27
        assert (f.data == 1.0).all()

    def test_too_small(self):
        with pytest.raises(DimensionTooSmallError):
            field_new((2, 4), 1, 1, 0.0)

    def test_bad_batch(self):
        with pytest.raises(ShapeMismatchError):
            field_new((4, 4), 0, 1)

    def test_defaults_double(self):
        assert field_new((4, 4)).precision == "double"

    def test_single_precision(self):
        assert field_new((4, 4), precision="single").data.dtype == np.float32


class TestFieldValidation:
    def test_rejects_nan(self):
        arr = np.zeros((1, 1, 4, 4))
        arr[0, 0, 1, 1] = np.nan
        with pytest.raises(NonFiniteValueError):
            Field(arr)

    def test_rejects_inf(self):
        arr = np.zeros((1, 1, 4, 4))
        arr[0, 0, 0, 0] = np.inf
        with pytest.raises(NonFiniteValueError):
            Field(arr)

    def test_frozen_data(self):
        f = field_new((4, 4))
        with pytest.raises(ValueError):
            f.data[0, 0, 0, 0] = 1.0

    def test_rank_limits(self):
        with pytest.raises(ShapeMismatchError):
            Field(np.zeros((4, 4)))  # missing batch/channel axes
        with pytest.raises(ShapeMismatchError):
            Field(np.zeros((1, 1, 2, 2, 2, 2)))  # 4 spatial dims


class TestAxpy:
    def test_a_zero_is_identity_on_y(self, rng):
        x = random_field(rng, (5, 5))
        y = random_field(rng, (5, 5))
        out = field_axpy(0.0, x, y)
        assert (out.data == y.data).all()

    def test_unit_a_zero_y(self, rng):
        x = random_field(rng, (5, 5))
        y = field_new((5, 5), fill=0.0)
        assert (field_axpy(1.0, x, y).data == x.data).all()

    def test_arithmetic(self):
        x = Field(np.arange(1, 17, dtype=float).reshape(1, 1, 4, 4))
        y = field_new((4, 4), fill=1.0)
        out = field_axpy(2.0, x, y)
        assert out.data[0, 0, 0, 0] == 3.0
        assert out.data[0, 0, 0, 1] == 5.0

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeMismatchError):
            field_axpy(1.0, random_field(rng, (5, 5)), random_field(rng, (6, 6)))

    @given(a=st.integers(-50, 50),
           xs=st.lists(st.integers(-1000, 1000), min_size=16, max_size=16),
           ys=st.lists(st.integers(-1000, 1000), min_size=16, max_size=16))
    @settings(max_examples=30, deadline=None)
    def test_exact_on_integers(self, a, xs, ys):
        x = Field(np.array(xs, dtype=float).reshape(1, 1, 4, 4))
        y = Field(np.array(ys, dtype=float).reshape(1, 1, 4, 4))
        out = field_axpy(float(a), x, y)
        expected = [a * xi + yi for xi, yi in zip(xs, ys)]
        assert out.data.ravel().tolist() == [float(e) for e in expected]


class TestInner:
    def test_zeros(self, rng):
        assert field_inner(field_new((4, 4)), random_field(rng, (4, 4))) == 0.0

    def test_ones(self):
        f = field_new((4, 4), fill=1.0)
        assert field_inner(f, f) == 16.0

    def test_matches_loop_oracle(self, rng):
        x = random_field(rng, (8, 8))
        y = random_field(rng, (8, 8))
        got = field_inner(x, y)
        expected = loop_inner(x.data, y.data)
        assert abs(got - expected) <= 1e-12 * max(abs(expected), 1.0)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeMismatchError):
            field_inner(random_field(rng, (4, 4)), random_field(rng, (4, 5)))

    @given(st.lists(st.floats(-1e6, 1e6), min_size=32, max_size=32))
    @settings(max_examples=30, deadline=None)
    def test_symmetric(self, values):
        x = Field(np.array(values[:16]).reshape(1, 1, 4, 4))
        y = Field(np.array(values[16:]).reshape(1, 1, 4, 4))
        assert field_inner(x, y) == field_inner(y, x)


class TestVectorField:
    def test_component_count(self, rng):
        f = random_field(rng, (4, 4))
        with pytest.raises(ShapeMismatchError):
            VectorField((f,))

    def test_count_matches_rank(self, rng):
        f = random_field(rng, (4, 4))
        with pytest.raises(ShapeMismatchError):
            VectorField((f, f, f))  # 3 components on a 2D grid

    def test_shape_identical(self, rng):
        with pytest.raises(ShapeMismatchError):
            VectorField((random_field(rng, (4, 4)), random_field(rng, (4, 5))))

    def test_valid(self, rng):
        v = VectorField((random_field(rng, (4, 4)), random_field(rng, (4, 4))))
        assert v.dim == 2
