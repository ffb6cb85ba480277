"""Membrane blenders: MVC blending and convolution-pyramid blending.

Both build, for every non-anchor region, a smooth offset membrane that
interpolates the colour differences measured along the region's boundary
chain, and add it to the trimmed composite.  MVC interpolates with
precomputed mean-value coordinates; the convolution-pyramid blender
evaluates the same kind of boundary-weighted average as a ratio of two
convolutions, ``(w * P^) / (w * chi)``, with a fast multiscale kernel.

Regions are blended one after another in anchor order.  The anchor keeps
its pixels; each later region is matched to the regions blended before it.
At a chain point ``p`` of region ``i`` with a 4-neighbour ``q`` in an
already blended region ``j`` (and ``p`` covered by stream ``j``) the anchor
value is ``P_j(p) + O_j(q)``: stream ``j`` continued one pixel across the
seam, carrying the offset it received.  Chain points without such a
neighbour (image border, uncovered pixels, regions not blended yet) get
their difference by linear interpolation along the chain from the nearest
measured points on either side.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .convpyr import ConvPyrFilters, convolve_pyramid
from .core import MappedStream, compose_frames, frames_at
from .errors import DataUnavailableError, NumericalError, ParameterError, StructuralError
from .mvc import MvcTable, precompute_mvc
from .seams import BoundaryChain, SeamLayout

MIN_DENOMINATOR = 1e-12
_N4 = ((0, 1), (1, 0), (0, -1), (-1, 0))


@dataclass(frozen=True)
class BoundaryDiff:
    """Per-point, per-channel differences ``anchor - target`` along a chain.

    ``valid`` marks the points where both values were available; the others
    hold interpolated (or, before filling, zero) values.
    """

    chain: BoundaryChain
    diffs: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        d = np.asarray(self.diffs, dtype=np.float64)
        if d.ndim == 1:
            d = d[:, None]
        if d.shape[0] != len(self.chain):
            raise StructuralError(f"{d.shape[0]} diffs for a chain of {len(self.chain)} points")
        object.__setattr__(self, "diffs", d)
        valid = np.ones(len(d), dtype=bool) if self.valid is None else np.asarray(self.valid, dtype=bool)
        object.__setattr__(self, "valid", valid)

    def __len__(self):
        return len(self.diffs)

    def filled(self) -> "BoundaryDiff":
        """Replace invalid entries by cyclic linear interpolation along the chain."""
        if self.valid.all():
            return self
        good = np.flatnonzero(self.valid)
        if len(good) == 0:
            raise DataUnavailableError("no chain point has data from an already blended region")
        m = len(self.diffs)
        pos = np.arange(m, dtype=np.float64)
        out = np.empty_like(self.diffs)
        for c in range(out.shape[1]):
            out[:, c] = np.interp(pos, good.astype(np.float64), self.diffs[good, c], period=m)
        out[good] = self.diffs[good]
        return BoundaryDiff(self.chain, out, np.ones(m, dtype=bool))


@dataclass(frozen=True)
class SparseBoundaryImage:
    """Boundary differences splatted onto the panorama.

    ``values`` is zero except on chain pixels; ``indicator`` is 1 exactly on
    the chain pixels; ``region`` is the mask the membrane is reported on.
    """

    values: np.ndarray
    indicator: np.ndarray
    region: np.ndarray

    @classmethod
    def from_diff(cls, diff: BoundaryDiff, region: np.ndarray) -> "SparseBoundaryImage":
        region = np.asarray(region, dtype=bool)
        pts = diff.chain.points
        values = np.zeros(region.shape + (diff.diffs.shape[1],))
        indicator = np.zeros(region.shape)
        values[pts[:, 0], pts[:, 1]] = diff.diffs
        indicator[pts[:, 0], pts[:, 1]] = 1.0
        return cls(values, indicator, region)


def boundary_diff(
    anchor: np.ndarray,
    target_stream: MappedStream,
    chain: BoundaryChain,
    frame_index: int,
    anchor_valid: np.ndarray | None = None,
    strict: bool = True,
) -> BoundaryDiff:
    """Differences ``anchor(p) - target(p)`` at every chain point.

    Args:
        anchor: ``(H, W, C)`` anchor canvas.
        target_stream: stream whose region the chain bounds.
        anchor_valid: where the anchor canvas holds data (default: all).
        strict: raise :class:`DataUnavailableError` on the first point
            missing from either side; otherwise mark it invalid.
    """
    target = target_stream.frame(frame_index)
    anchor = np.asarray(anchor, dtype=np.float64)
    if anchor.shape != target.shape:
        raise StructuralError(f"anchor {anchor.shape} and target {target.shape} differ in shape")
    r, c = chain.points[:, 0], chain.points[:, 1]
    ok = target_stream.mask[r, c]
    if anchor_valid is not None:
        ok = ok & np.asarray(anchor_valid, dtype=bool)[r, c]
    if strict and not ok.all():
        k = int(np.flatnonzero(~ok)[0])
        raise DataUnavailableError(f"chain point {k} at {tuple(chain.points[k])} lacks data", index=k)
    diffs = anchor[r, c] - target[r, c]
    diffs[~ok] = 0.0
    return BoundaryDiff(chain, diffs, ok)


def mvc_membrane(table: MvcTable, diffs: BoundaryDiff) -> np.ndarray:
    """Mean-value membrane ``P*(x) = sum_k lambda_k(x) b(x_k)``, zero outside the region."""
    vals = table.evaluate(diffs.diffs)
    out = np.zeros(tuple(table.shape) + (vals.shape[1],))
    out.reshape(-1, vals.shape[1])[table.pixels] = vals
    return out


def _bbox(region):
    rows = np.flatnonzero(region.any(axis=1))
    cols = np.flatnonzero(region.any(axis=0))
    return slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1)


def _checked_inverse(den, region):
    if np.any(den[region] < MIN_DENOMINATOR):
        raise NumericalError("convolution-pyramid denominator vanished inside the region")
    return np.where(region, 1.0 / np.where(region, den, 1.0), 0.0)


def convpyr_membrane(sparse: SparseBoundaryImage, filters: ConvPyrFilters | None = None) -> np.ndarray:
    """Ratio-of-convolutions membrane ``(w * P^) / (w * chi)``, zero outside the region.

    Both convolutions run on the bounding box of the region.
    """
    region = np.asarray(sparse.region, dtype=bool)
    if not np.any(sparse.indicator):
        raise StructuralError("boundary indicator is empty")
    if not region.any():
        return np.zeros_like(sparse.values)
    box = _bbox(region | (sparse.indicator > 0))
    inv = _checked_inverse(convolve_pyramid(sparse.indicator[box], filters), region[box])
    out = np.zeros_like(sparse.values)
    out[box] = convolve_pyramid(sparse.values[box], filters) * inv[:, :, None]
    return out


@dataclass
class _RegionPlan:
    position: int
    chain: BoundaryChain
    # (m, 4) neighbour label positions and flat neighbour indices
    nb_pos: np.ndarray
    nb_flat: np.ndarray
    table: MvcTable | None = None
    box: tuple | None = None
    inv_den: np.ndarray | None = None
    region_local: np.ndarray | None = None
    indicator_local: np.ndarray | None = field(default=None, repr=False)


def default_anchor_order(layout: SeamLayout) -> list:
    """Camera 1 (or the lowest index present) first, then ascending index."""
    return sorted(int(s) for s in layout.stream_indices)


class MembraneBlender:
    """Sequential membrane blending over a fixed seam layout.

    Everything that depends only on the geometry (boundary chains, seam
    neighbours, MVC tables, convolution-pyramid denominators) is computed
    once here and reused for every frame.

    Args:
        layout: seam layout of the scene.
        method: ``"mvc"`` or ``"convpyr"``.
        anchor_order: stream indices, anchor first (default
            :func:`default_anchor_order`).
        sampling_tolerance: MVC boundary sampling tolerance (``None`` picks
            exact tables for small regions).
        filters: convolution-pyramid filters (default: shipped set).
        cache_dir: directory for MVC tables keyed by the layout digest.
    """

    def __init__(
        self,
        layout: SeamLayout,
        method: str = "mvc",
        anchor_order: Sequence[int] | None = None,
        sampling_tolerance: float | None = None,
        filters: ConvPyrFilters | None = None,
        cache_dir: str | os.PathLike | None = None,
    ):
        if method not in ("mvc", "convpyr"):
            raise ParameterError(f"unknown membrane method {method!r}")
        self.layout = layout
        self.method = method
        self.filters = filters
        order = default_anchor_order(layout) if anchor_order is None else [int(s) for s in anchor_order]
        if sorted(order) != sorted(int(s) for s in layout.stream_indices):
            raise ParameterError(f"anchor order {order} is not a permutation of {list(layout.stream_indices)}")
        self.anchor_order = order
        self.positions = [layout.position_of(s) for s in order]
        rank = np.empty(layout.n_streams, dtype=np.int64)
        rank[self.positions] = np.arange(layout.n_streams)
        self._rank = rank
        self.plans = [self._plan(pos, sampling_tolerance, cache_dir) for pos in self.positions[1:]]

    def _plan(self, pos, tolerance, cache_dir) -> _RegionPlan:
        layout = self.layout
        h, w = layout.shape
        chain = layout.boundary(pos)
        r, c = chain.points[:, 0], chain.points[:, 1]
        m = len(chain)
        nb_pos = np.full((m, 4), -1, dtype=np.int64)
        nb_flat = np.zeros((m, 4), dtype=np.int64)
        for k, (dy, dx) in enumerate(_N4):
            qy, qx = r + dy, c + dx
            inside = (qy >= 0) & (qy < h) & (qx >= 0) & (qx < w)
            qy, qx = np.clip(qy, 0, h - 1), np.clip(qx, 0, w - 1)
            lab = np.where(inside, layout.label_map[qy, qx], -1)
            nb_pos[:, k] = np.where(lab == pos, -1, lab)
            nb_flat[:, k] = qy * w + qx
        plan = _RegionPlan(pos, chain, nb_pos, nb_flat)
        region = layout.trimmed_masks[pos]
        if self.method == "mvc":
            plan.table = self._table(pos, chain, region, tolerance, cache_dir)
        else:
            box = _bbox(region)
            ind = np.zeros(layout.shape)
            ind[r, c] = 1.0
            plan.box = box
            plan.region_local = region[box]
            plan.indicator_local = ind[box]
            plan.inv_den = _checked_inverse(convolve_pyramid(ind[box], self.filters), region[box])
        return plan

    def _table(self, pos, chain, region, tolerance, cache_dir):
        if cache_dir is None:
            return precompute_mvc(chain, region, tolerance)
        tag = "auto" if tolerance is None else f"{float(tolerance):g}"
        path = os.path.join(os.fspath(cache_dir), f"mvc-{self.layout.digest()[:16]}-{pos}-{tag}.npz")
        if os.path.exists(path):
            return MvcTable.load(path)
        table = precompute_mvc(chain, region, tolerance)
        os.makedirs(os.fspath(cache_dir), exist_ok=True)
        table.save(path)
        return table

    def _diffs(self, plan: _RegionPlan, frames, offset_flat, rank_limit) -> BoundaryDiff:
        chain = plan.chain
        r, c = chain.points[:, 0], chain.points[:, 1]
        n_ch = frames[0].shape[-1]
        own = frames[plan.position][r, c]
        acc = np.zeros((len(chain), n_ch))
        cnt = np.zeros(len(chain))
        for k in range(4):
            j = plan.nb_pos[:, k]
            usable = j >= 0
            usable[usable] &= self._rank[j[usable]] < rank_limit
            for pos in np.unique(j[usable]):
                sel = np.flatnonzero(usable & (j == pos))
                sel = sel[self.layout.masks[pos][r[sel], c[sel]]]
                if len(sel) == 0:
                    continue
                anchor = frames[pos][r[sel], c[sel]] + offset_flat[plan.nb_flat[sel, k]]
                acc[sel] += anchor - own[sel]
                cnt[sel] += 1
        valid = cnt > 0
        acc[valid] /= cnt[valid, None]
        return BoundaryDiff(chain, acc, valid).filled()

    def offsets(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        """Combined offset map ``P*`` for one frame (zero on the anchor region)."""
        if len(frames) != self.layout.n_streams:
            raise StructuralError(f"{len(frames)} frames for {self.layout.n_streams} streams")
        shape = self.layout.shape
        n_ch = frames[0].shape[-1]
        offset = np.zeros(shape + (n_ch,))
        flat = offset.reshape(-1, n_ch)
        for rank, plan in enumerate(self.plans, start=1):
            diff = self._diffs(plan, frames, flat, rank)
            region = self.layout.trimmed_masks[plan.position]
            if plan.table is not None:
                flat[plan.table.pixels] = plan.table.evaluate(diff.diffs)
            else:
                vals = np.zeros(plan.indicator_local.shape + (n_ch,))
                pts = plan.chain.points
                vals[pts[:, 0] - plan.box[0].start, pts[:, 1] - plan.box[1].start] = diff.diffs
                mem = convolve_pyramid(vals, self.filters) * plan.inv_den[:, :, None]
                sub = offset[plan.box]
                np.copyto(sub, mem, where=region[plan.box][:, :, None])
        return offset

    def blend_frames(self, frames: Sequence[np.ndarray], return_offsets: bool = False):
        composite = compose_frames(frames, self.layout.trimmed_masks)
        offset = self.offsets(frames)
        out = composite + offset
        return (out, offset) if return_offsets else out


def membrane_blend(
    streams: Sequence[MappedStream],
    layout: SeamLayout,
    method: str = "mvc",
    anchor_order: Sequence[int] | None = None,
    frame_index: int = 0,
) -> np.ndarray:
    """Blend one frame with MVC (``"mvc"``) or convolution-pyramid (``"convpyr"``) membranes."""
    if len(streams) != layout.n_streams:
        raise StructuralError(f"{len(streams)} streams for a layout of {layout.n_streams}")
    return MembraneBlender(layout, method, anchor_order).blend_frames(frames_at(streams, frame_index))
