"""Image, mask and stream model plus the two composition pathways.

Frames are ``float64`` arrays of shape ``(H, W, C)`` holding intensities on
the ``[0, 1]`` scale.  Masks are boolean ``(H, W)`` arrays.  Offset maps use
the frame layout but may hold any finite signed value.

Direct blenders produce the panorama as a function of the mapped streams.
Offset blenders produce ``P = P' + P*`` where ``P'`` is the trimmed composite
and ``P*`` the combined offset map, both assembled under the trimmed masks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FrameRangeError, StructuralError


def as_frame(data) -> np.ndarray:
    """Convert an image-like array to the internal frame representation.

    8-bit input is mapped by ``v / 255``; float input is taken as already on
    the ``[0, 1]`` scale.  Grayscale ``(H, W)`` input gains a channel axis.
    """
    arr = np.asarray(data)
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float64) / 255.0
    else:
        arr = arr.astype(np.float64, copy=False)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise StructuralError(f"frame must be (H, W) or (H, W, C), got shape {arr.shape}")
    return arr


def as_mask(data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise StructuralError(f"mask must be 2-D, got shape {arr.shape}")
    if arr.dtype == bool:
        return arr
    if arr.dtype == np.uint8 and arr.max(initial=0) > 1:
        return arr >= 128
    vals = np.unique(arr)
    if not np.all(np.isin(vals, (0, 1))):
        raise StructuralError("mask values must be exactly 0 or 1")
    return arr.astype(bool)


def to_uint8(frame: np.ndarray) -> np.ndarray:
    """Export conversion: clamp to [0, 1], scale and round to nearest."""
    return np.rint(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)


@dataclass(frozen=True)
class MappedStream:
    """One camera stream already warped into panorama coordinates.

    ``frames`` may be any sequence (a list of arrays, or a lazy loader with
    ``__len__``/``__getitem__``).  Pixels outside ``mask`` carry no data and
    are never read by the blenders.
    """

    frames: Sequence[np.ndarray]
    mask: np.ndarray
    stream_index: int

    def __post_init__(self):
        object.__setattr__(self, "mask", as_mask(self.mask))
        if self.stream_index < 1:
            raise StructuralError(f"stream_index must be >= 1, got {self.stream_index}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    def __len__(self):
        return len(self.frames)

    def frame(self, k: int) -> np.ndarray:
        n = len(self.frames)
        if not 0 <= k < n:
            raise FrameRangeError(
                f"frame index {k} out of range for stream {self.stream_index} ({n} frames)"
            )
        f = as_frame(self.frames[k])
        if f.shape[:2] != self.mask.shape:
            raise StructuralError(
                f"stream {self.stream_index} frame {k} has size {f.shape[:2]}, "
                f"mask has {self.mask.shape}"
            )
        return f


def frames_at(streams: Sequence[MappedStream], frame_index: int) -> list[np.ndarray]:
    """Fetch frame ``frame_index`` of every stream, checking consistency."""
    frames = [s.frame(frame_index) for s in streams]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise StructuralError(f"streams disagree on frame shape: {sorted(shapes)}")
    return frames


def _check_partition_inputs(arrays, masks, what):
    if len(arrays) != len(masks):
        raise StructuralError(f"{len(arrays)} {what} for {len(masks)} trimmed masks")
    shape = masks[0].shape
    for i, a in enumerate(arrays):
        if a.shape[:2] != shape:
            raise StructuralError(f"{what} {i} has size {a.shape[:2]}, panorama is {shape}")


def mask_box(mask: np.ndarray):
    """Bounding-box slices of a mask (``None`` when empty)."""
    rows = np.flatnonzero(mask.any(axis=1))
    if len(rows) == 0:
        return None
    cols = np.flatnonzero(mask[rows[0]:rows[-1] + 1].any(axis=0))
    return slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1)


def compose_frames(frames: Sequence[np.ndarray], trimmed_masks: Sequence[np.ndarray], boxes=None) -> np.ndarray:
    """Trimmed composite ``sum_i M'_i P_i`` of already-fetched frames.

    ``boxes`` optionally holds precomputed :func:`mask_box` results.
    """
    _check_partition_inputs(frames, trimmed_masks, "frames")
    out = np.zeros(frames[0].shape, dtype=np.float64)
    for i, (f, m) in enumerate(zip(frames, trimmed_masks)):
        box = mask_box(m) if boxes is None else boxes[i]
        if box is not None:
            np.copyto(out[box], f[box], where=m[box][:, :, None])
    return out


def compose_trimmed(streams: Sequence[MappedStream], layout, frame_index: int) -> np.ndarray:
    """Composite ``P'`` copying each pixel from the stream that owns it.

    Pixels covered by no stream are 0 (see ``layout.coverage``).
    """
    if len(streams) != len(layout.trimmed_masks):
        raise StructuralError(
            f"{len(streams)} streams for a layout of {len(layout.trimmed_masks)}"
        )
    return compose_frames(frames_at(streams, frame_index), layout.trimmed_masks)


def apply_offset(composite: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """``P = P' + P*``; no clamping (clamping happens only on export)."""
    if composite.shape != offset.shape:
        raise StructuralError(f"composite {composite.shape} vs offset {offset.shape}")
    return composite + offset


def combine_offsets(offsets: Sequence[np.ndarray], layout) -> np.ndarray:
    """Combined offset ``P* = sum_i M'_i P*_i``."""
    masks = layout.trimmed_masks
    if len(offsets) != len(masks):
        raise StructuralError(f"{len(offsets)} offsets for a layout of {len(masks)} streams")
    _check_partition_inputs(offsets, masks, "offsets")
    out = np.zeros(offsets[0].shape, dtype=np.float64)
    for o, m in zip(offsets, masks):
        np.copyto(out, o, where=m[:, :, None] if o.ndim == 3 else m)
    return out
