import numpy as np
import pytest

import pyramid_oracle as oracle
from panoblend.core import compose_trimmed
from panoblend.direct import FeatherBlender, MultibandBlender, feather_blend, multiband_blend
from panoblend.errors import ParameterError, StructuralError
from panoblend.seams import compute_seams, feather_weights

from conftest import smooth_image, streams_from, strip_masks


def three_strip_scene(rng, h=40, w=60, offsets=(0.0, 0.1, -0.05)):
    masks = strip_masks(h, w, [(0, 26), (18, 44), (36, 60)])
    base = smooth_image(rng, h, w)
    frames = [[np.where(m[:, :, None], base + o + 0.02 * rng.random((h, w, 3)), 0.0)] for m, o in zip(masks, offsets)]
    return masks, streams_from(frames, masks)


def test_feather_identity_is_bit_exact(rng):
    masks = strip_masks(20, 40, [(0, 26), (14, 40)])
    img = smooth_image(rng, 20, 40)
    streams = streams_from([[img], [img]], masks)
    wm = feather_weights(masks, compute_seams(masks))
    out = feather_blend(streams, wm, 0)
    assert np.array_equal(out, img)


def test_feather_matches_weighted_sum(rng):
    masks, streams = three_strip_scene(rng)
    layout = compute_seams(masks)
    wm = feather_weights(masks, layout)
    frames = [s.frame(0) for s in streams]
    expect = sum(w[:, :, None] * f for w, f in zip(wm.weights, frames))
    np.testing.assert_allclose(feather_blend(streams, wm, 0), expect, atol=1e-14)


def test_feather_ignores_data_outside_masks(rng):
    masks, streams = three_strip_scene(rng)
    layout = compute_seams(masks)
    blender = FeatherBlender.from_layout(layout)
    frames = [s.frame(0) for s in streams]
    noisy = [np.where(m[:, :, None], f, 99.0) for f, m in zip(frames, masks)]
    assert np.array_equal(blender.blend_frames(frames), blender.blend_frames(noisy))


def mbb_oracle(frames, masks, layout, levels):
    comp = compose_trimmed(streams_from([[f] for f in frames], masks), layout, 0)
    gw = [oracle.gaussian(t.astype(float)[:, :, None], levels) for t in layout.trimmed_masks]
    q = None
    for i, f in enumerate(frames):
        ext = np.where(masks[i][:, :, None], f, comp)
        lap = oracle.laplacian(ext, levels)
        terms = [g[j] / sum(gg[j] for gg in gw) * lap[j] for j, g in enumerate(gw[i])]
        q = terms if q is None else [a + b for a, b in zip(q, terms)]
    return oracle.collapse(q)


@pytest.mark.parametrize("levels", [2, 3, 4])
def test_multiband_matches_dense_oracle(rng, levels):
    masks, streams = three_strip_scene(rng)
    layout = compute_seams(masks)
    frames = [s.frame(0) for s in streams]
    out = multiband_blend(streams, layout, levels, 0)
    np.testing.assert_allclose(out, mbb_oracle(frames, masks, layout, levels), atol=1e-12)


def test_multiband_matches_full_frame_evaluation(rng):
    masks = strip_masks(48, 64, [(0, 30), (20, 50)])
    masks[1][:, 50:] = True
    masks[0][:10, 40:] = True
    layout = compute_seams(masks)
    frames = [smooth_image(rng, 48, 64) for _ in masks]
    b = MultibandBlender(layout, 4)
    np.testing.assert_allclose(b.blend_frames(frames), b.blend_frames_reference(frames), atol=1e-13)


def test_multiband_identity_and_uncovered(rng):
    masks = strip_masks(32, 48, [(0, 26), (14, 40)])
    img = smooth_image(rng, 32, 48)
    frames = [np.where(m[:, :, None], img, 0.0) for m in masks]
    out = MultibandBlender(compute_seams(masks)).blend_frames(frames)
    np.testing.assert_allclose(out[:, :40], img[:, :40], atol=1e-14)
    assert np.all(out[:, 40:] == 0)


def test_multiband_smooths_a_step(rng):
    masks = strip_masks(32, 64, [(0, 40), (24, 64)])
    frames = [np.where(m[:, :, None], v, 0.0) * np.ones((32, 64, 1)) for m, v in zip(masks, (0.2, 0.6))]
    layout = compute_seams(masks)
    out = MultibandBlender(layout, 4).blend_frames(frames)[16, :, 0]
    hard = np.abs(np.diff(np.where(layout.label_map[16] == 0, 0.2, 0.6))).max()
    assert np.abs(np.diff(out)).max() < hard / 2
    assert np.all((out >= 0.2 - 1e-12) & (out <= 0.6 + 1e-12))


def test_errors():
    masks = strip_masks(16, 16, [(0, 10), (6, 16)])
    layout = compute_seams(masks)
    with pytest.raises(ParameterError):
        MultibandBlender(layout, 6)
    with pytest.raises(StructuralError):
        MultibandBlender(layout, 2).blend_frames([np.zeros((16, 16, 3))])
    with pytest.raises(StructuralError):
        FeatherBlender.from_layout(layout).blend_frames([np.zeros((16, 16, 3))])
