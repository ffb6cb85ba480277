import numpy as np
import pytest

from oracles import chain_of, smooth_boundary_values
from panoblend.convpyr import ConvPyrFilters, convolve_pyramid, default_filters
from panoblend.core import MappedStream
from panoblend.errors import DataUnavailableError, NumericalError, ParameterError, StructuralError
from panoblend.membrane import (
    BoundaryDiff,
    MembraneBlender,
    SparseBoundaryImage,
    boundary_diff,
    convpyr_membrane,
    default_anchor_order,
    membrane_blend,
    mvc_membrane,
)
from panoblend.mvc import precompute_mvc
from panoblend.seams import compute_seams

from conftest import blob, disk, smooth_image, square, streams_from, strip_masks


def cpb(region, vals):
    return convpyr_membrane(SparseBoundaryImage.from_diff(BoundaryDiff(chain_of(region), vals), region))


def mvc(region, vals):
    chain = chain_of(region)
    return mvc_membrane(precompute_mvc(chain, region, 0), BoundaryDiff(chain, vals))


@pytest.mark.parametrize("c", [0.3, -0.7])
def test_convpyr_reproduces_constants(c):
    region = disk(40)
    m = len(chain_of(region))
    out = cpb(region, np.full((m, 1), c))
    assert np.abs(out[region] - c).max() < 1e-3
    assert np.all(out[~region] == 0)


def test_zero_differences_give_zero_membranes():
    region = blob(40, 5)
    m = len(chain_of(region))
    assert not cpb(region, np.zeros((m, 3))).any()
    assert not mvc(region, np.zeros((m, 3))).any()


@pytest.mark.parametrize("region", [disk(24), square(24), disk(40), square(40), disk(64), square(64)],
                         ids=["d24", "s24", "d40", "s40", "d64", "s64"])
def test_convpyr_agrees_with_mvc(region):
    vals = smooth_boundary_values(chain_of(region).points, 11)
    assert np.abs(cpb(region, vals)[region] - mvc(region, vals)[region]).mean() < 0.02


def test_membranes_are_linear_in_the_differences():
    region = blob(48, 6)
    vals = smooth_boundary_values(chain_of(region).points, 2)
    for f in (cpb, mvc):
        np.testing.assert_allclose(f(region, -vals), -f(region, vals), atol=1e-15)
        np.testing.assert_allclose(f(region, 2 * vals), 2 * f(region, vals), atol=1e-14)


def test_mvc_membrane_obeys_maximum_principle():
    region = disk(48)
    vals = smooth_boundary_values(chain_of(region).points, 9)
    out = mvc(region, vals)[region]
    assert np.all(out >= vals.min(axis=0) - 1e-12)
    assert np.all(out <= vals.max(axis=0) + 1e-12)


def test_convolve_pyramid_is_translation_covariant_in_the_interior():
    x = np.zeros((64, 64))
    x[20, 20] = 1.0
    y = np.zeros((64, 64))
    y[24, 24] = 1.0
    a, b = convolve_pyramid(x), convolve_pyramid(y)
    # shifts by a multiple of the coarsest stride used near the spike agree
    assert np.abs(a[10:30, 10:30] - b[14:34, 14:34]).max() < 0.05 * a.max()
    np.testing.assert_allclose(convolve_pyramid(3 * x), 3 * a)


def test_boundary_diff_values_and_sign():
    masks = strip_masks(12, 20, [(0, 12), (8, 20)])
    layout = compute_seams(masks)
    chain = layout.boundary(1)
    anchor = np.full((12, 20, 3), 0.5)
    target = MappedStream([np.full((12, 20, 3), 0.3)], masks[1], 2)
    d = boundary_diff(anchor, target, chain, 0)
    np.testing.assert_allclose(d.diffs, 0.2)
    back = boundary_diff(np.full((12, 20, 3), 0.3), MappedStream([anchor], masks[1], 2), chain, 0)
    np.testing.assert_allclose(back.diffs, -d.diffs)


def test_boundary_diff_missing_data():
    masks = strip_masks(12, 20, [(0, 12), (8, 20)])
    layout = compute_seams(masks)
    chain = layout.boundary(1)
    target = MappedStream([np.zeros((12, 20, 1))], masks[1], 2)
    valid = np.zeros((12, 20), dtype=bool)
    valid[:, :12] = True
    with pytest.raises(DataUnavailableError) as exc:
        boundary_diff(np.ones((12, 20, 1)), target, chain, 0, anchor_valid=valid)
    assert exc.value.index is not None
    d = boundary_diff(np.ones((12, 20, 1)), target, chain, 0, anchor_valid=valid, strict=False)
    assert d.valid.any() and not d.valid.all()
    assert np.all(d.diffs[~d.valid] == 0)
    filled = d.filled()
    assert filled.valid.all()
    np.testing.assert_allclose(filled.diffs, 1.0)
    with pytest.raises(DataUnavailableError):
        BoundaryDiff(chain, np.zeros(len(chain)), np.zeros(len(chain), bool)).filled()


def test_filled_interpolates_cyclically():
    chain = chain_of(square(8))
    m = len(chain)
    valid = np.zeros(m, dtype=bool)
    valid[[0, m // 2]] = True
    diffs = np.zeros(m)
    diffs[m // 2] = 1.0
    out = BoundaryDiff(chain, diffs, valid).filled().diffs[:, 0]
    np.testing.assert_allclose(out[: m // 2 + 1], np.linspace(0, 1, m // 2 + 1))
    np.testing.assert_allclose(out[m // 2:], np.linspace(1, 0, m - m // 2 + 1)[:-1])


def test_convpyr_errors():
    region = disk(20)
    with pytest.raises(StructuralError):
        convpyr_membrane(SparseBoundaryImage(np.zeros((20, 20, 1)), np.zeros((20, 20)), region))
    f = default_filters()
    dead = ConvPyrFilters(f.h1, f.h2, np.zeros(3))
    sparse = SparseBoundaryImage.from_diff(BoundaryDiff(chain_of(region), np.ones(len(chain_of(region)))), region)
    with pytest.raises(NumericalError):
        convpyr_membrane(sparse, dead)


def shift_scene(rng, c=0.3, h=48, w=64):
    masks = strip_masks(h, w, [(0, 38), (26, w)])
    base = smooth_image(rng, h, w)
    return masks, [base, base + c]


@pytest.mark.parametrize("method", ["mvc", "convpyr"])
def test_identical_streams_give_zero_offsets(rng, method):
    masks = strip_masks(40, 60, [(0, 26), (18, 44), (36, 60)])
    img = smooth_image(rng, 40, 60)
    frames = [np.where(m[:, :, None], img, 0.0) for m in masks]
    out, off = MembraneBlender(compute_seams(masks), method).blend_frames(frames, return_offsets=True)
    assert not off.any()
    np.testing.assert_array_equal(out[:, :60], img)


@pytest.mark.parametrize("method", ["mvc", "convpyr"])
def test_constant_offset_is_removed(rng, method):
    masks, frames = shift_scene(rng)
    layout = compute_seams(masks)
    out, off = MembraneBlender(layout, method).blend_frames(frames, return_offsets=True)
    region = layout.trimmed_masks[1]
    tol = 1e-12 if method == "mvc" else 1e-3
    assert np.abs(off[region] + 0.3).max() < tol
    np.testing.assert_allclose(out[region], frames[0][region], atol=tol)
    seam = np.abs(np.diff(out, axis=1))[:, 30:34].max()
    assert seam < np.abs(np.diff(frames[0], axis=1)).max() + 2 / 255


def test_anchor_order_changes_the_result(rng):
    masks, frames = shift_scene(rng)
    layout = compute_seams(masks)
    a = MembraneBlender(layout, "mvc", [1, 2]).blend_frames(frames)
    b = MembraneBlender(layout, "mvc", [2, 1]).blend_frames(frames)
    assert np.abs(a - b).max() > 0.29
    np.testing.assert_allclose(a + 0.3, b, atol=1e-12)


def test_tables_are_reused_across_frames(rng, tmp_path):
    masks = strip_masks(40, 60, [(0, 26), (18, 44), (36, 60)])
    frames_k = [[smooth_image(rng, 40, 60) + 0.05 * i for i in range(3)] for _ in range(2)]
    layout = compute_seams(masks)
    shared = MembraneBlender(layout, "mvc", cache_dir=tmp_path)
    tables = [p.table for p in shared.plans]
    for frames in frames_k:
        fresh = MembraneBlender(layout, "mvc")
        np.testing.assert_array_equal(shared.blend_frames(frames), fresh.blend_frames(frames))
    assert [p.table for p in shared.plans] == tables
    cached = MembraneBlender(layout, "mvc", cache_dir=tmp_path)
    assert len(list(tmp_path.glob("mvc-*.npz"))) == 2
    np.testing.assert_array_equal(cached.blend_frames(frames_k[0]), shared.blend_frames(frames_k[0]))


def test_membrane_blend_function_and_errors(rng):
    masks = strip_masks(30, 40, [(0, 24), (16, 40)])
    img = smooth_image(rng, 30, 40)
    streams = streams_from([[img], [img + 0.1]], masks, [3, 5])
    layout = compute_seams(masks, [3, 5])
    assert default_anchor_order(layout) == [3, 5]
    out = membrane_blend(streams, layout, "mvc", None, 0)
    np.testing.assert_allclose(out, img, atol=1e-12)
    with pytest.raises(ParameterError):
        MembraneBlender(layout, "poisson")
    with pytest.raises(ParameterError):
        MembraneBlender(layout, "mvc", [1, 2])
    with pytest.raises(StructuralError):
        membrane_blend(streams[:1], layout)
