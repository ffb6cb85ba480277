"""Direct-composition blenders: feather blending and multi-band blending.

Both blenders are written in residual form.  With ``P'`` the trimmed
composite and ``D_i = P_i - P'`` the residual of stream ``i`` (nonzero only
on pixels it covers but does not own), the convex combination
``sum_i w_i P_i`` equals ``P' + sum_i w_i D_i`` whenever the weights sum to
one.  Feather blending therefore only touches overlap bands.  Multi-band
blending applies the same identity per pyramid level; since collapsing a
Laplacian pyramid is linear and inverts its construction exactly, the
composite's own pyramid cancels and only the thin residual windows are
decomposed: ``P = P' + collapse(sum_i W_i Lap(D_i))``.  Identical streams give zero residuals, so both blenders
return the composite unchanged.

Stream data outside a stream's mask never enters the result: where a
coarse multi-band weight reaches beyond ``M_i``, stream ``i`` is extended by
the composite itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import MappedStream, compose_frames, frames_at, mask_box
from .errors import StructuralError
from .pyramid import (
    Patch,
    check_levels,
    collapse,
    default_levels,
    level_shape,
    gaussian_pyramid,
    laplacian_patches,
    laplacian_pyramid,
)
from .seams import SeamLayout, WeightMaps, feather_weights


def _fill_index(coverage: np.ndarray):
    """Flat index of the nearest covered pixel for every uncovered pixel."""
    if coverage.all():
        return None
    _, (iy, ix) = ndimage.distance_transform_edt(~coverage, return_indices=True)
    holes = np.flatnonzero(~coverage)
    return holes, (iy * coverage.shape[1] + ix).ravel()[holes]


def _filled(composite, fill):
    if fill is None:
        return composite
    holes, src = fill
    out = composite.copy()
    flat = out.reshape(-1, out.shape[-1])
    flat[holes] = flat[src]
    return out


class FeatherBlender:
    """Feather blending with per-scene precomputed weights.

    Args:
        weights: feather weight maps (see :func:`panoblend.seams.feather_weights`).
    """

    def __init__(self, weights: WeightMaps):
        self.weights = weights
        owner = weights.label_map
        n = len(weights.weights)
        self.trimmed = [owner == i for i in range(n)]
        self._bands = []
        for i, w in enumerate(weights.weights):
            idx = np.flatnonzero((w > 0) & ~self.trimmed[i])
            self._bands.append((idx, w.ravel()[idx][:, None]))

    @classmethod
    def from_layout(cls, layout: SeamLayout, radius=None):
        return cls(feather_weights(layout.masks, layout, radius))

    def blend_frames(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        if len(frames) != len(self._bands):
            raise StructuralError(f"{len(frames)} frames for {len(self._bands)} weight maps")
        composite = compose_frames(frames, self.trimmed)
        out = composite.copy()
        c = out.shape[-1]
        flat_out = out.reshape(-1, c)
        flat_comp = composite.reshape(-1, c)
        for f, (idx, w) in zip(frames, self._bands):
            if len(idx):
                flat_out[idx] += w * (f.reshape(-1, c)[idx] - flat_comp[idx])
        return out


def feather_blend(streams: Sequence[MappedStream], weights: WeightMaps, frame_index: int) -> np.ndarray:
    """``P = sum_i w_i P_i``; pixels outside all masks are 0."""
    if len(streams) != len(weights.weights):
        raise StructuralError(f"{len(streams)} streams for {len(weights.weights)} weight maps")
    return FeatherBlender(weights).blend_frames(frames_at(streams, frame_index))


@dataclass
class _Residual:
    stream: int
    y0: int
    x0: int
    sel: tuple
    local: np.ndarray


class MultibandBlender:
    """Multi-band blending over a fixed seam layout.

    Each level of every stream's Laplacian pyramid is weighted by the
    Gaussian pyramid of the stream's trimmed mask, renormalised so the
    weights sum to one at every level, and the blended levels are
    collapsed.  Mask pyramids and residual windows are computed once here.

    Args:
        layout: seam layout of the scene.
        levels: pyramid depth (default :func:`~panoblend.pyramid.default_levels`).
        tile: residual bands are cut into pieces no larger than ``tile``
            pixels per side before they are decomposed.
    """

    def __init__(self, layout: SeamLayout, levels: int | None = None, tile: int = 256):
        self.layout = layout
        self.levels = default_levels(layout.shape) if levels is None else int(levels)
        check_levels(layout.shape, self.levels)
        n = layout.n_streams
        mask_pyrs = [gaussian_pyramid(m.astype(np.float64), self.levels).levels for m in layout.trimmed_masks]
        self.level_weights = []
        for i in range(n):
            self.level_weights.append([])
        for j in range(self.levels):
            total = sum(mp[j] for mp in mask_pyrs)
            ok = total > 0
            safe = np.where(ok, total, 1.0)
            for i in range(n):
                self.level_weights[i].append(np.where(ok, mask_pyrs[i][j] / safe, 1.0 / n))
        self._fill = _fill_index(layout.coverage)
        self._boxes = [mask_box(m) for m in layout.trimmed_masks]
        self._holes = np.flatnonzero(~layout.coverage)
        self._residuals = []
        eight = np.ones((3, 3), dtype=bool)
        for i in range(n):
            band = layout.masks[i] & ~layout.trimmed_masks[i]
            # bands are thin and often L- or U-shaped, so their pieces within
            # each tile have much smaller boxes than the whole band
            for ty in range(0, band.shape[0], tile):
                for tx in range(0, band.shape[1], tile):
                    block = band[ty:ty + tile, tx:tx + tile]
                    if not block.any():
                        continue
                    lab, _ = ndimage.label(block, structure=eight)
                    for k, sl in enumerate(ndimage.find_objects(lab), start=1):
                        if sl is None:
                            continue
                        gl = (slice(ty + sl[0].start, ty + sl[0].stop), slice(tx + sl[1].start, tx + sl[1].stop))
                        self._residuals.append(_Residual(i, gl[0].start, gl[1].start, gl, lab[sl] == k))

    def blend_frames(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        if len(frames) != self.layout.n_streams:
            raise StructuralError(f"{len(frames)} frames for {self.layout.n_streams} streams")
        shape = self.layout.shape
        composite = _filled(compose_frames(frames, self.layout.trimmed_masks, self._boxes), self._fill)
        n_ch = composite.shape[-1]
        q = [np.zeros(level_shape(shape, j) + (n_ch,)) for j in range(self.levels)]
        for r in self._residuals:
            d = frames[r.stream][r.sel] - composite[r.sel]
            d[~r.local] = 0.0
            for j, lp in enumerate(laplacian_patches(Patch(d, r.y0, r.x0, shape), self.levels)):
                w = self.level_weights[r.stream][j][lp.y0:lp.y1, lp.x0:lp.x1]
                q[j][lp.y0:lp.y1, lp.x0:lp.x1] += w[:, :, None] * lp.data
        out = composite + collapse(q)
        if len(self._holes):
            out.reshape(-1, n_ch)[self._holes] = 0.0
        return out

    def blend_frames_reference(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        """Full-frame evaluation of the same blend, one pyramid per stream."""
        composite = _filled(compose_frames(frames, self.layout.trimmed_masks), self._fill)
        q = None
        for i, f in enumerate(frames):
            ext = np.where(self.layout.masks[i][:, :, None], f, composite)
            lap = laplacian_pyramid(ext, self.levels).levels
            terms = [w[:, :, None] * l for w, l in zip(self.level_weights[i], lap)]
            q = terms if q is None else [a + b for a, b in zip(q, terms)]
        out = collapse(q)
        out[~self.layout.coverage] = 0.0
        return out


def multiband_blend(
    streams: Sequence[MappedStream], layout: SeamLayout, levels: int | None, frame_index: int
) -> np.ndarray:
    """Multi-band blend of one frame (``levels=None`` picks the default depth)."""
    if len(streams) != layout.n_streams:
        raise StructuralError(f"{len(streams)} streams for a layout of {layout.n_streams}")
    return MultibandBlender(layout, levels).blend_frames(frames_at(streams, frame_index))
