import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pyramid_oracle as oracle
from panoblend.errors import ParameterError
from panoblend.pyramid import (
    Patch,
    collapse,
    default_levels,
    expand,
    gaussian_pyramid,
    laplacian_patches,
    laplacian_pyramid,
    level_shape,
    reduce,
)


@pytest.mark.parametrize("shape", [(9, 13), (16, 16), (7, 20), (33, 5)])
def test_reduce_and_expand_match_matrix_oracle(shape):
    img = np.random.default_rng(0).random(shape + (2,))
    small = reduce(img)
    np.testing.assert_allclose(small, oracle.apply2(oracle.reduce_matrix(shape[0]), oracle.reduce_matrix(shape[1]), img), atol=1e-14)
    np.testing.assert_allclose(expand(small, shape), oracle.expand_to(small, shape), atol=1e-14)


def test_laplacian_pyramid_matches_oracle():
    img = np.random.default_rng(1).random((37, 50, 3))
    lap = laplacian_pyramid(img, 4).levels
    for a, b in zip(lap, oracle.laplacian(img, 4)):
        np.testing.assert_allclose(a, b, atol=1e-13)


def test_level_sizes():
    pyr = gaussian_pyramid(np.zeros((37, 50, 1)), 4)
    assert [p.shape[:2] for p in pyr.levels] == [(37, 50), (19, 25), (10, 13), (5, 7)]
    assert level_shape((37, 50), 3) == (5, 7)


@settings(max_examples=30, deadline=None)
@given(st.integers(8, 40), st.integers(8, 40), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_collapse_inverts_laplacian(h, w, levels, seed):
    img = np.random.default_rng(seed).random((h, w, 1))
    np.testing.assert_allclose(collapse(laplacian_pyramid(img, levels)), img, atol=1e-12)


def test_constants_have_zero_detail():
    lap = laplacian_pyramid(np.full((20, 24, 3), 0.7), 3).levels
    for l in lap[:-1]:
        assert np.abs(l).max() < 1e-15
    np.testing.assert_allclose(lap[-1], 0.7)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_patch_pyramid_equals_full_pyramid(seed):
    rng = np.random.default_rng(seed)
    h, w = rng.integers(12, 40, size=2)
    y0, x0 = rng.integers(0, h - 2), rng.integers(0, w - 2)
    ph, pw = rng.integers(1, h - y0 + 1), rng.integers(1, w - x0 + 1)
    data = rng.random((ph, pw, 2))
    full = np.zeros((h, w, 2))
    full[y0:y0 + ph, x0:x0 + pw] = data
    ref = laplacian_pyramid(full, 3).levels
    for lp, r in zip(laplacian_patches(Patch(data, int(y0), int(x0), (int(h), int(w))), 3), ref):
        np.testing.assert_allclose(lp.to_full(), r, atol=1e-14)


def test_level_checks():
    assert default_levels((500, 1000)) == 6
    assert default_levels((8, 8)) == 2
    with pytest.raises(ParameterError):
        laplacian_pyramid(np.zeros((8, 8, 1)), 5)
    with pytest.raises(ParameterError):
        gaussian_pyramid(np.zeros((8, 8, 1)), 0)
