"""Fixed seam layout: trimmed masks, boundary chains and feather weights.

The layout is computed once per scene from the coverage masks and reused
for every frame.  Each pixel covered by several streams goes to the stream
whose exclusive (non-overlapping) zone is nearest in exact Euclidean
distance, so seams run along the locus equidistant from neighbouring
exclusive zones.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import as_mask
from .errors import DegenerateLayoutError, ParameterError, StructuralError, TopologyError

# Neighbour offsets (dy, dx) in counter-clockwise screen order, starting west.
_CCW = ((0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1))
_CCW_INDEX = {d: i for i, d in enumerate(_CCW)}


@dataclass(frozen=True)
class BoundaryChain:
    """Closed 8-connected chain of a region's inner border pixels.

    ``points`` is an ``(m, 2)`` integer array of ``(row, col)`` pairs in
    counter-clockwise order starting at the topmost-then-leftmost pixel.
    """

    points: np.ndarray
    region_index: int
    values: np.ndarray | None = None

    def __len__(self):
        return len(self.points)

    def with_values(self, values) -> "BoundaryChain":
        values = np.asarray(values, dtype=np.float64)
        if len(values) != len(self.points):
            raise StructuralError(f"{len(values)} values for a chain of {len(self.points)} points")
        return BoundaryChain(self.points, self.region_index, values)

    def raster(self, shape) -> np.ndarray:
        out = np.zeros(shape, dtype=bool)
        out[self.points[:, 0], self.points[:, 1]] = True
        return out


@dataclass(frozen=True)
class WeightMaps:
    """Per-stream feather weights; they sum to 1 on covered pixels.

    ``label_map`` is the owning-stream map of the layout the weights were
    built from (``-1`` on uncovered pixels).
    """

    weights: list
    radius: float
    label_map: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True, eq=False)
class SeamLayout:
    """Seam template for one scene.

    Attributes:
        masks: original coverage masks ``M_i`` in stream order.
        trimmed_masks: disjoint masks ``M'_i`` partitioning the coverage.
        label_map: ``int32`` map of the owning stream position (0-based),
            ``-1`` where no stream covers the pixel.
        stream_indices: camera indices (1-based) of the streams, in order.
        zone_distance: per-stream Euclidean distance to the stream's
            exclusive zone (``inf`` when the zone is empty).
    """

    masks: list
    trimmed_masks: list
    label_map: np.ndarray
    stream_indices: tuple
    zone_distance: np.ndarray = field(repr=False)
    _chains: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.label_map.shape

    @property
    def n_streams(self) -> int:
        return len(self.masks)

    @cached_property
    def coverage(self) -> np.ndarray:
        return self.label_map >= 0

    @cached_property
    def overlap_masks(self) -> dict:
        """Non-empty pairwise overlaps ``M_i & M_j`` keyed by ``(i, j)``, ``i < j``."""
        out = {}
        for i in range(self.n_streams):
            for j in range(i + 1, self.n_streams):
                ov = self.masks[i] & self.masks[j]
                if ov.any():
                    out[(i, j)] = ov
        return out

    @property
    def boundaries(self) -> list:
        return [self.boundary(i) for i in range(self.n_streams)]

    def boundary(self, region_index: int) -> BoundaryChain:
        if region_index not in self._chains:
            self._chains[region_index] = extract_boundary(self, region_index)
        return self._chains[region_index]

    def digest(self) -> str:
        """Stable hash of the partition, used to key precomputation caches."""
        h = hashlib.sha1()
        h.update(np.asarray(self.shape, dtype=np.int64).tobytes())
        h.update(np.asarray(self.stream_indices, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.label_map).tobytes())
        for m in self.masks:
            h.update(np.packbits(m).tobytes())
        return h.hexdigest()

    def position_of(self, stream_index: int) -> int:
        return self.stream_indices.index(stream_index)


def _squared_zone_distance(zone: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance to the nearest ``True`` pixel of ``zone``."""
    _, (iy, ix) = ndimage.distance_transform_edt(~zone, return_indices=True)
    yy, xx = np.indices(zone.shape)
    dy = (iy - yy).astype(np.int64)
    dx = (ix - xx).astype(np.int64)
    return dy * dy + dx * dx


def compute_seams(masks: Sequence, stream_indices: Sequence[int] | None = None) -> SeamLayout:
    """Trim overlapping coverage masks into a partition along equidistant seams.

    Each pixel covered by more than one stream goes to the covering stream
    whose exclusive zone is nearest.  Equidistant pixels go to the stream
    with the lowest camera index, so the result does not depend on list
    order.  A stream whose exclusive zone is empty is infinitely far away and
    only wins pixels nobody else can claim.

    Raises:
        StructuralError: empty mask or mismatched dimensions.
        DegenerateLayoutError: a mask strictly contained in another mask.
    """
    masks = [as_mask(m) for m in masks]
    if not masks:
        raise StructuralError("at least one mask is required")
    n = len(masks)
    if stream_indices is None:
        stream_indices = tuple(range(1, n + 1))
    stream_indices = tuple(int(s) for s in stream_indices)
    if len(stream_indices) != n or len(set(stream_indices)) != n:
        raise StructuralError("stream_indices must be unique and match the mask count")
    shape = masks[0].shape
    for i, m in enumerate(masks):
        if m.shape != shape:
            raise StructuralError(f"mask {i} has size {m.shape}, expected {shape}")
        if not m.any():
            raise StructuralError(f"mask of stream {stream_indices[i]} is empty")
    for i in range(n):
        for j in range(n):
            if i != j and not (masks[i] & ~masks[j]).any() and (masks[j] & ~masks[i]).any():
                raise DegenerateLayoutError(
                    f"stream {stream_indices[i]} lies entirely inside stream {stream_indices[j]}"
                )

    count = np.zeros(shape, dtype=np.int32)
    for m in masks:
        count += m
    covered = count > 0

    # Candidates ordered by camera index so argmin's first-hit rule is the tie-break.
    order = np.argsort(stream_indices, kind="stable")
    key = np.empty((n,) + shape, dtype=np.float64)
    zone_distance = np.empty((n,) + shape, dtype=np.float64)
    for rank, i in enumerate(order):
        zone = masks[i] & (count == 1)
        if zone.any():
            sq = _squared_zone_distance(zone).astype(np.float64)
            zone_distance[i] = np.sqrt(sq)
        else:
            sq = np.full(shape, 1e300)
            zone_distance[i] = np.inf
        key[rank] = np.where(masks[i], sq, np.inf)
    winner_rank = np.argmin(key, axis=0)
    del key
    label_map = np.where(covered, order[winner_rank], -1).astype(np.int32)
    trimmed = [label_map == i for i in range(n)]
    return SeamLayout(
        masks=masks,
        trimmed_masks=trimmed,
        label_map=label_map,
        stream_indices=stream_indices,
        zone_distance=zone_distance,
    )


def layout_from_labels(masks: Sequence, label_map: np.ndarray, stream_indices: Sequence[int]) -> SeamLayout:
    """Rebuild a layout from a stored label map (``-1`` uncovered, else stream position).

    Raises:
        StructuralError: the labels do not partition the coverage of the masks.
    """
    masks = [as_mask(m) for m in masks]
    label_map = np.asarray(label_map, dtype=np.int32)
    n = len(masks)
    if any(m.shape != label_map.shape for m in masks):
        raise StructuralError("label map and masks differ in size")
    covered = np.logical_or.reduce(masks)
    if not np.array_equal(label_map >= 0, covered) or label_map.max(initial=-1) >= n:
        raise StructuralError("label map does not match the coverage of the masks")
    for i, m in enumerate(masks):
        if np.any((label_map == i) & ~m):
            raise StructuralError(f"stream {stream_indices[i]} owns pixels it does not cover")
    count = np.sum(masks, axis=0)
    zone_distance = np.empty((n,) + label_map.shape)
    for i, m in enumerate(masks):
        zone = m & (count == 1)
        zone_distance[i] = np.sqrt(_squared_zone_distance(zone)) if zone.any() else np.inf
    return SeamLayout(
        masks=masks,
        trimmed_masks=[label_map == i for i in range(n)],
        label_map=label_map,
        stream_indices=tuple(int(s) for s in stream_indices),
        zone_distance=zone_distance,
    )


def border_pixels(region: np.ndarray) -> np.ndarray:
    """Region pixels with at least one 4-neighbour outside the region or image."""
    padded = np.pad(region, 1, constant_values=False)
    inner = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return region & ~inner


def count_holes(region: np.ndarray) -> int:
    """Number of background components enclosed by a region (8-connected background)."""
    bg = ~np.pad(region, 1, constant_values=False)
    _, n = ndimage.label(bg, structure=np.ones((3, 3), dtype=bool))
    return n - 1


def trace_boundary(region: np.ndarray) -> np.ndarray:
    """Moore-neighbour trace of a single region, counter-clockwise on screen.

    Uses Jacob's stopping criterion: the trace ends when the start pixel is
    re-entered from the initial backtrack direction.
    """
    ys, xs = np.nonzero(region)
    if len(ys) == 0:
        raise StructuralError("cannot trace an empty region")
    sub = np.pad(region, 1, constant_values=False)
    cy, cx = int(ys[0]) + 1, int(xs[0]) + 1
    start = (cy, cx)
    back = 0  # west neighbour of the topmost-leftmost pixel is background
    chain = [start]
    first_move = None
    while True:
        for k in range(1, 9):
            d = (back + k) % 8
            ny, nx = cy + _CCW[d][0], cx + _CCW[d][1]
            if sub[ny, nx]:
                py, px = cy + _CCW[(d - 1) % 8][0], cx + _CCW[(d - 1) % 8][1]
                move = (ny, nx, _CCW_INDEX[(py - ny, px - nx)])
                break
        else:
            break  # isolated pixel
        if first_move is None:
            first_move = move
        elif (cy, cx) == start and move == first_move:
            chain.pop()  # the start pixel closing the loop
            break
        cy, cx, back = move
        chain.append((cy, cx))
    return np.asarray(chain, dtype=np.int64) - 1


def extract_boundary(layout: SeamLayout, region_index: int) -> BoundaryChain:
    """Ordered closed chain of the inner border of trimmed region ``region_index``.

    Raises:
        TopologyError: the region is not 4-connected or has holes.
        StructuralError: the region is empty or its chain has fewer than 3 points.
    """
    if not 0 <= region_index < layout.n_streams:
        raise StructuralError(f"region index {region_index} out of range")
    region = layout.trimmed_masks[region_index]
    if not region.any():
        raise StructuralError(f"region {region_index} is empty")
    _, ncomp = ndimage.label(region)
    if ncomp != 1:
        raise TopologyError(
            f"region {region_index} has {ncomp} 4-connected components", components=ncomp
        )
    holes = count_holes(region)
    if holes:
        raise TopologyError(f"region {region_index} is multiply connected ({holes} holes)", holes=holes)
    pts = trace_boundary(region)
    if len(pts) < 3:
        raise StructuralError(f"region {region_index} boundary has only {len(pts)} points")
    return BoundaryChain(pts, region_index)


def overlap_band_width(layout: SeamLayout) -> float:
    """Smallest median cross-band width over all adjoining stream pairs."""
    widths = []
    d = layout.zone_distance
    for (i, j), ov in layout.overlap_masks.items():
        s = d[i][ov] + d[j][ov]
        s = s[np.isfinite(s)]
        if len(s):
            widths.append(float(np.median(s)) - 1.0)
    return min(widths) if widths else 0.0


def feather_weights(masks: Sequence, layout: SeamLayout, radius: float | None = None) -> WeightMaps:
    """Linear cross-fade weights around the seams.

    Within an overlap the raw weight of stream ``i`` is
    ``clip(0.5 + s_i / (2 * radius), 0, 1)`` where ``s_i`` is the signed
    distance to the seam (half the difference of exclusive-zone distances),
    so pixels on the seam get 0.5 and pixels a full radius away get 1 or 0.
    Raw weights are zero outside ``M_i`` and renormalised to sum to 1.

    ``radius`` defaults to half the narrowest overlap band.
    """
    masks = [as_mask(m) for m in masks]
    if len(masks) != layout.n_streams:
        raise StructuralError(f"{len(masks)} masks for a layout of {layout.n_streams} streams")
    if radius is None:
        radius = max(1.0, overlap_band_width(layout) / 2.0)
    if not radius > 0:
        raise ParameterError(f"feather radius must be positive, got {radius}")
    n = layout.n_streams
    d = layout.zone_distance
    raw = []
    for i in range(n):
        nearest_other = np.full(layout.shape, np.inf)
        for j in range(n):
            if j != i:
                np.minimum(nearest_other, np.where(masks[j], d[j], np.inf), out=nearest_other)
        with np.errstate(invalid="ignore"):
            s = 0.5 * (nearest_other - d[i])
        s = np.nan_to_num(s, nan=-np.inf)
        r = np.clip(0.5 + s / (2.0 * radius), 0.0, 1.0)
        r[~masks[i]] = 0.0
        raw.append(r)
    total = np.sum(raw, axis=0)
    fallback = layout.coverage & (total <= 0)
    safe = np.where(total > 0, total, 1.0)
    weights = []
    for i in range(n):
        w = raw[i] / safe
        w[fallback] = layout.trimmed_masks[i][fallback]
        weights.append(w)
    return WeightMaps(weights, float(radius), layout.label_map)
