import dataclasses

import numpy as np
import pytest
from scipy import sparse
from scipy.sparse.linalg import lsqr

from panoblend.core import compose_frames
from panoblend.errors import DataUnavailableError, ParameterError, RankDeficiencyError, StructuralError
from panoblend.gradient import (
    MultiSplineBlender,
    SeamGradients,
    SplineGrid,
    basis_1d,
    combined_energy,
    msb_blend,
    msb_reconstruct,
    msb_solve,
    seam_gradients,
)
from panoblend.seams import compute_seams

from conftest import smooth_image, streams_from, strip_masks


def tent(t):
    return np.maximum(0.0, 1.0 - np.abs(t))


def loop_gradients(frames, label):
    """Halved symmetric seam jumps evaluated pair by pair."""
    h, w = label.shape
    c = frames[0].shape[-1]
    gx, gy = np.zeros((h, w, c)), np.zeros((h, w, c))
    for y in range(h):
        for x in range(w):
            a = label[y, x]
            if x + 1 < w and label[y, x + 1] != a:
                b = label[y, x + 1]
                gx[y, x] = 0.5 * (frames[a][y, x] - frames[b][y, x] + frames[a][y, x + 1] - frames[b][y, x + 1])
            if y + 1 < h and label[y + 1, x] != a:
                b = label[y + 1, x]
                gy[y, x] = 0.5 * (frames[a][y, x] - frames[b][y, x] + frames[a][y + 1, x] - frames[b][y + 1, x])
    return gx, gy


def three_strips(rng, h=24, w=40, shifts=(0.0, 0.1, -0.2)):
    masks = strip_masks(h, w, [(0, 18), (12, 30), (24, w)])
    frames = [np.where(m[:, :, None], smooth_image(rng, h, w) + s, 0.0) for m, s in zip(masks, shifts)]
    return masks, frames


def test_seam_gradient_examples(rng):
    masks = strip_masks(8, 12, [(0, 8), (4, 12)])
    layout = compute_seams(masks)
    a = smooth_image(rng, 8, 12)
    g = seam_gradients(streams_from([[a], [a]], masks), layout, 0)
    assert not g.gx.any() and not g.gy.any()
    g = seam_gradients(streams_from([[a], [a + 0.3]], masks), layout, 0)
    # the symmetric sum is -0.6 before halving (A minus B at both pixels)
    np.testing.assert_allclose(g.gx[:, 5], -0.3)
    assert np.count_nonzero(g.gx) == 8 * 3 and not g.gy.any()


def test_seam_gradients_match_loop_oracle(rng):
    masks = strip_masks(20, 30, [(0, 14), (10, 24), (18, 30)])
    masks[0][:8] = True
    layout = compute_seams(masks)
    frames = [smooth_image(rng, 20, 30) for _ in masks]
    g = seam_gradients(streams_from([[f] for f in frames], masks), layout, 0)
    gx, gy = loop_gradients(frames, layout.label_map)
    np.testing.assert_allclose(g.gx, gx, atol=1e-15)
    np.testing.assert_allclose(g.gy, gy, atol=1e-15)


def test_missing_seam_data():
    masks = strip_masks(8, 12, [(0, 8), (4, 12)])
    layout = compute_seams(masks)
    shrunk = [masks[0], masks[1].copy()]
    shrunk[1][:, 4:6] = False
    cut = dataclasses.replace(layout, masks=shrunk)
    with pytest.raises(DataUnavailableError):
        seam_gradients(streams_from([[np.zeros((8, 12, 1))]] * 2, shrunk), cut, 0)


def test_tent_basis():
    b = basis_1d(33, 8).toarray()
    np.testing.assert_allclose(b.sum(axis=1), 1.0)
    grid = SplineGrid.zeros((33, 41), 1, 8)
    grid.coeffs[0, 2, 3] = 1.0
    out = grid.evaluate(0)[:, :, 0]
    yy, xx = np.mgrid[:33, :41]
    np.testing.assert_allclose(out, tent((yy - 8) / 8) * tent((xx - 16) / 8), atol=1e-15)
    assert out.max() == 1.0 and np.count_nonzero(out) == 15 * 15
    with pytest.raises(ParameterError):
        basis_1d(10, 0)


def test_reconstruct_matches_double_loop_oracle(rng):
    masks, _ = three_strips(rng)
    layout = compute_seams(masks)
    grid = SplineGrid.zeros(layout.shape, 3, 8, channels=2)
    grid.coeffs[:] = rng.standard_normal(grid.coeffs.shape)
    out = msb_reconstruct(grid, layout)
    h, w = layout.shape
    ny, nx = grid.node_shape
    ref = np.zeros((h, w, 2))
    for y in range(h):
        for x in range(w):
            l = layout.label_map[y, x]
            for k in range(ny):
                for m in range(nx):
                    ref[y, x] += grid.coeffs[l, k, m] * tent((y - (k - 1) * 8) / 8) * tent((x - (m - 1) * 8) / 8)
    assert np.abs(out - ref).max() < 1e-12


def test_constant_control_points_give_constant_offsets():
    masks = strip_masks(20, 30, [(0, 18), (12, 30)])
    layout = compute_seams(masks)
    grid = SplineGrid.zeros(layout.shape, 2, 8, kind="cubic")
    grid.coeffs[1] = 0.25
    out = msb_reconstruct(grid, layout)[:, :, 0]
    np.testing.assert_allclose(out[layout.trimmed_masks[1]], 0.25, atol=1e-15)
    assert not out[layout.trimmed_masks[0]].any()
    with pytest.raises(StructuralError):
        msb_reconstruct(SplineGrid.zeros((20, 31), 2, 8), layout)


def dense_oracle(layout, grads, spacing):
    """Least squares over every stream's spline coefficients, assembled pair by pair."""
    h, w = layout.shape
    ny, nx = -(-(h - 1) // spacing) + 3, -(-(w - 1) // spacing) + 3
    gauge = int(np.argmin(layout.stream_indices))
    n = layout.n_streams
    by = np.array([[tent((y - (k - 1) * spacing) / spacing) for k in range(ny)] for y in range(h)])
    bx = np.array([[tent((x - (m - 1) * spacing) / spacing) for m in range(nx)] for x in range(w)])

    def row(y, x):
        r = np.zeros(n * ny * nx)
        l = layout.label_map[y, x]
        r[l * ny * nx:(l + 1) * ny * nx] = np.outer(by[y], bx[x]).ravel()
        return r

    rows, rhs = [], []
    lab = layout.label_map
    for y in range(h):
        for x in range(w):
            if lab[y, x] < 0:
                continue
            if x + 1 < w and lab[y, x + 1] >= 0:
                rows.append(row(y, x + 1) - row(y, x)), rhs.append(grads.gx[y, x])
            if y + 1 < h and lab[y + 1, x] >= 0:
                rows.append(row(y + 1, x) - row(y, x)), rhs.append(grads.gy[y, x])
    d = np.array(rows)
    keep = np.abs(d).sum(axis=0) > 0
    keep[gauge * ny * nx:(gauge + 1) * ny * nx] = False
    z = np.linalg.lstsq(d[:, keep], np.array(rhs), rcond=None)[0]
    coeffs = np.zeros((n * ny * nx, z.shape[1]))
    coeffs[keep] = z
    grid = SplineGrid.zeros(layout.shape, n, spacing, z.shape[1])
    grid.coeffs[:] = coeffs.reshape(grid.coeffs.shape)
    return grid


@pytest.mark.parametrize("spacing", [8, 16])
def test_solution_matches_dense_least_squares(rng, spacing):
    masks, frames = three_strips(rng)
    layout = compute_seams(masks)
    blender = MultiSplineBlender(layout, spacing)
    grads = blender.gradients(frames)
    ours = msb_reconstruct(blender.solve(grads), layout)
    ref = msb_reconstruct(dense_oracle(layout, grads, spacing), layout)
    assert np.abs(ours - ref).max() < 1e-9


def test_solution_is_optimal(rng):
    masks, frames = three_strips(rng)
    layout = compute_seams(masks)
    blender = MultiSplineBlender(layout, 8)
    grads = blender.gradients(frames)
    grid = blender.solve(grads)
    assert blender.last_residual < 1e-6
    best = combined_energy(msb_reconstruct(grid, layout), grads, layout)
    assert best <= combined_energy(np.zeros_like(frames[0]), grads, layout)
    free = np.zeros(grid.coeffs.shape, dtype=bool)
    free[1:] = True
    for _ in range(100):
        trial = SplineGrid(grid.spacing, grid.shape, grid.coeffs + 1e-3 * rng.standard_normal(grid.coeffs.shape) * free)
        assert best <= combined_energy(msb_reconstruct(trial, layout), grads, layout) + 1e-12


def test_constant_shift_matches_per_pixel_solve(rng):
    """Two streams B = A + c: the spline offsets equal the per-pixel least-squares offsets."""
    h = w = 64
    c = 0.3
    masks = strip_masks(h, w, [(0, 38), (26, w)])
    a = smooth_image(rng, h, w)
    frames = [np.where(masks[0][:, :, None], a, 0.0), np.where(masks[1][:, :, None], a + c, 0.0)]
    layout = compute_seams(masks)
    out, off = MultiSplineBlender(layout).blend_frames(frames, return_offsets=True)
    grads = SeamGradients(*loop_gradients(frames, layout.label_map))
    # per-pixel problem with the camera 1 pixel (0, 0) pinned
    n = h * w
    rows, rhs = [], []
    for y in range(h):
        for x in range(w):
            p = y * w + x
            for q, g in ((p + 1, grads.gx[y, x, 0]) if x + 1 < w else (None, 0), (p + w, grads.gy[y, x, 0]) if y + 1 < h else (None, 0)):
                if q is not None:
                    rows.append((p, q)), rhs.append(g)
    i = np.repeat(np.arange(len(rows)), 2)
    j = np.array(rows).ravel()
    v = np.tile([-1.0, 1.0], len(rows))
    d = sparse.csr_matrix((v, (i, j)), shape=(len(rows), n))[:, 1:]
    per_pixel = np.concatenate([[0.0], lsqr(d, np.array(rhs), atol=1e-14, btol=1e-14)[0]]).reshape(h, w)
    np.testing.assert_allclose(off[:, :, 0], per_pixel, atol=1e-4)
    np.testing.assert_allclose(off[layout.trimmed_masks[1]], -c, atol=1e-4)
    jump = out[:, 32, 0] - out[:, 31, 0]
    np.testing.assert_allclose(jump, a[:, 32, 0] - a[:, 31, 0], atol=1e-4)


def test_offsets_are_smooth_inside_regions(rng):
    masks, frames = three_strips(rng, 48, 80)
    layout = compute_seams(masks)
    blender = MultiSplineBlender(layout, 16)
    grid = blender.solve(blender.gradients(frames))
    off = msb_reconstruct(grid, layout)
    bound = np.abs(grid.coeffs).max() * 2 / 16
    lab = layout.label_map
    same_x = (lab[:, 1:] == lab[:, :-1])[:, :, None]
    same_y = (lab[1:] == lab[:-1])[:, :, None]
    assert np.abs(np.diff(off, axis=1) * same_x).max() <= bound + 1e-12
    assert np.abs(np.diff(off, axis=0) * same_y).max() <= bound + 1e-12


def test_zero_gradients_give_zero_offsets(rng):
    masks, _ = three_strips(rng)
    layout = compute_seams(masks)
    img = smooth_image(rng, 24, 40)
    frames = [np.where(m[:, :, None], img, 0.0) for m in masks]
    out, off = MultiSplineBlender(layout, 8).blend_frames(frames, return_offsets=True)
    assert not off.any()
    np.testing.assert_array_equal(out, compose_frames(frames, layout.trimmed_masks))


def test_order_invariance(rng):
    masks, frames = three_strips(rng)
    perm = [2, 0, 1]
    a = msb_blend(streams_from([[f] for f in frames], masks), compute_seams(masks), 8)
    pm = [masks[p] for p in perm]
    pf = [[frames[p]] for p in perm]
    idx = [p + 1 for p in perm]
    b = msb_blend(streams_from(pf, pm, idx), compute_seams(pm, idx), 8)
    assert np.abs(a - b).max() <= 1e-8


def test_disconnected_seam_graph():
    masks = strip_masks(16, 40, [(0, 10), (6, 16), (22, 32), (28, 40)])
    with pytest.raises(RankDeficiencyError):
        MultiSplineBlender(compute_seams(masks), 8)


def test_msb_solve_and_default_spacing(rng):
    masks, frames = three_strips(rng)
    layout = compute_seams(masks)
    blender = MultiSplineBlender(layout)
    assert blender.spacing == 64
    grads = blender.gradients(frames)
    np.testing.assert_allclose(msb_solve(grads, layout, 64).coeffs, blender.solve(grads).coeffs)
