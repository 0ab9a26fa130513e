import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from boundmap.bm_core import GtBox, generate_map
from boundmap.errors import ValidationError
from boundmap.grid_resize import (GridSpec, replicate_anchor_classes, resize_linear,
                                  to_feature_grid)

import oracles


def test_identity_resize_is_exact():
    m = np.random.default_rng(1).random((5, 7), dtype=np.float32)
    np.testing.assert_array_equal(resize_linear(m, 7, 5), m)


@pytest.mark.parametrize("shape", [(1, 1), (3, 9), (12, 4)])
def test_constant_map_stays_constant(shape):
    m = np.full((6, 5), 0.37, dtype=np.float32)
    out = resize_linear(m, shape[1], shape[0])
    assert out.shape == shape
    assert np.all(out == np.float32(0.37))


def test_2x2_upsample_matches_oracle():
    grid = [[0.0, 1.0], [0.0, 1.0]]
    got = resize_linear(np.array(grid, np.float32), 4, 4)
    np.testing.assert_allclose(got, oracles.bilinear_resize(grid, 4, 4), atol=1e-7)
    # half-pixel convention: outer columns clamp, inner ones blend 1/4 and 3/4
    np.testing.assert_allclose(got[0], [0.0, 0.25, 0.75, 1.0])


def test_zero_output_rejected():
    with pytest.raises(ValidationError):
        resize_linear(np.zeros((4, 4)), 0, 2)


def test_feature_grid_shapes():
    m = np.zeros((64, 64), np.float32)
    assert to_feature_grid(m, GridSpec(64, 64, 16)).shape == (4, 4)
    assert to_feature_grid(np.zeros((50, 70)), GridSpec(70, 50, 16)).shape == (4, 5)
    np.testing.assert_array_equal(to_feature_grid(m + 0.5, GridSpec(64, 64, 1)), m + 0.5)


def test_feature_grid_shape_mismatch():
    with pytest.raises(ValidationError):
        to_feature_grid(np.zeros((10, 10)), GridSpec(12, 10, 2))


def test_single_box_bm_r_matches_oracle():
    box = (8, 8, 40, 40)
    bm = generate_map([GtBox(*box)], 64, 64)
    got = to_feature_grid(bm, GridSpec(64, 64, 8))
    expected = oracles.bilinear_resize(oracles.bm_grid([box], 64, 64), 8, 8)
    np.testing.assert_allclose(got, expected, atol=1e-6)


def test_replicate_anchor_classes():
    m = np.arange(6, dtype=np.float32).reshape(2, 3)
    rep = replicate_anchor_classes(m, GridSpec(6, 4, 2, anchor_classes=3))
    assert rep.shape == (3, 2, 3)
    assert all(np.array_equal(r, m) for r in rep)


maps = st.tuples(st.integers(1, 128), st.integers(1, 128)).flatmap(
    lambda s: arrays(np.float32, s, elements=st.floats(0, 1, width=32)))


@settings(max_examples=40, deadline=None)
@given(maps, st.integers(1, 64), st.integers(1, 64))
def test_matches_scalar_oracle_and_preserves_range(m, ow, oh):
    got = resize_linear(m, ow, oh)
    assert got.min() >= m.min() and got.max() <= m.max()
    np.testing.assert_allclose(got, oracles.bilinear_resize(m.tolist(), ow, oh), atol=1e-6)
