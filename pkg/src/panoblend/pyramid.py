"""Gaussian and Laplacian pyramids with the 5-tap binomial kernel.

REDUCE blurs with ``[1, 4, 6, 4, 1] / 16`` (separable, edge-replicate) and
keeps every second sample, so level ``j`` has ``ceil(size / 2**j)`` pixels
per axis.  EXPAND replicates the coarse border, inserts zeros, blurs with
four times the same kernel and crops to the finer size; it maps constants to
constants, so Laplacian levels of a flat image are exactly zero.

All operations also work on a :class:`Patch`, a rectangular window of an
image that is zero everywhere outside the window.  Patch results are
identical to running the full-frame operation and cropping, which lets the
multi-band blender pyramid thin residual bands instead of whole frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass
class Patch:
    """Window ``data`` of a ``full_shape`` image placed at ``(y0, x0)``."""

    data: np.ndarray
    y0: int
    x0: int
    full_shape: tuple

    @property
    def y1(self):
        return self.y0 + self.data.shape[0]

    @property
    def x1(self):
        return self.x0 + self.data.shape[1]

    @classmethod
    def whole(cls, image):
        return cls(image, 0, 0, image.shape[:2])

    def to_full(self) -> np.ndarray:
        out = np.zeros(tuple(self.full_shape) + self.data.shape[2:], dtype=self.data.dtype)
        out[self.y0:self.y1, self.x0:self.x1] = self.data
        return out


@dataclass
class Pyramid:
    levels: list
    kind: str

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    def __getitem__(self, j):
        return self.levels[j]

    def __len__(self):
        return len(self.levels)


def level_shape(shape, j):
    return tuple(-(-s // (1 << j)) for s in shape[:2])


def default_levels(shape) -> int:
    """floor(log2(min side)) - 2, clamped to [2, 8]."""
    n = int(math.floor(math.log2(min(shape[:2])))) - 2
    return int(min(max(n, 2), 8))


def check_levels(shape, levels):
    if levels < 1:
        raise ParameterError(f"levels must be >= 1, got {levels}")
    top = level_shape(shape, levels - 1)
    if levels > 1 and min(top) < 2:
        raise ParameterError(
            f"{levels} levels too many for {shape[0]}x{shape[1]} (top level {top[0]}x{top[1]})"
        )


def _gather(data, start, length, lo, hi, full, axis):
    """Rows ``lo..hi`` (inclusive, global indices) of an axis-windowed image.

    Indices outside ``[0, full)`` replicate the image border; indices inside
    the image but outside the window read as zero.
    """
    if lo >= 0 and hi < full:
        # no border replication needed: copy the overlap, zeros elsewhere
        a, b = max(lo, start), min(hi + 1, start + length)
        if a == lo and b == hi + 1:
            return _slice(data, axis, a - start, b - start)
        shape = list(data.shape)
        shape[axis] = hi - lo + 1
        out = np.zeros(shape, dtype=data.dtype)
        if b > a:
            sl = [slice(None)] * data.ndim
            sl[axis] = slice(a - lo, b - lo)
            out[tuple(sl)] = _slice(data, axis, a - start, b - start)
        return out
    idx = np.clip(np.arange(lo, hi + 1), 0, full - 1) - start
    valid = (idx >= 0) & (idx < length)
    if valid.all():
        if idx[0] >= 0 and np.all(np.diff(idx) == 1):
            sl = [slice(None)] * data.ndim
            sl[axis] = slice(idx[0], idx[-1] + 1)
            return data[tuple(sl)]
        return np.take(data, idx, axis=axis)
    shape = list(data.shape)
    shape[axis] = len(idx)
    out = np.zeros(shape, dtype=data.dtype)
    sl = [slice(None)] * data.ndim
    sl[axis] = np.nonzero(valid)[0]
    out[tuple(sl)] = np.take(data, idx[valid], axis=axis)
    return out


def _slice(a, axis, start, stop, step=1):
    sl = [slice(None)] * a.ndim
    sl[axis] = slice(start, stop, step)
    return a[tuple(sl)]


def _reduce_axis(data, start, full, axis):
    """Blur-and-decimate one axis of a window; returns (array, new_start, new_full)."""
    length = data.shape[axis]
    new_full = -(-full // 2)
    lo = max(-(-(start - 2) // 2), 0)
    hi = min((start + length - 1 + 2) // 2, new_full - 1)
    count = hi - lo + 1
    g = _gather(data, start, length, 2 * lo - 2, 2 * hi + 2, full, axis)
    out = KERNEL[0] * _slice(g, axis, 0, 2 * count - 1, 2)
    for t in range(1, 5):
        out = out + KERNEL[t] * _slice(g, axis, t, t + 2 * count - 1, 2)
    return out, lo, new_full


def _expand_axis(data, start, full, fine_full, axis):
    """Polyphase EXPAND of one axis; returns (array, fine_start)."""
    length = data.shape[axis]
    lo = max(2 * start - 2, 0)
    hi = min(2 * (start + length), fine_full - 1)
    n_lo, n_hi = lo // 2, hi // 2
    # coarse samples n_lo-1 .. n_hi+1
    c = _gather(data, start, length, n_lo - 1, n_hi + 1, full, axis)
    m = n_hi - n_lo + 1
    prev, cur, nxt = _slice(c, axis, 0, m), _slice(c, axis, 1, m + 1), _slice(c, axis, 2, m + 2)
    even = (prev + 6.0 * cur + nxt) * 0.125
    odd = (cur + nxt) * 0.5
    shape = list(even.shape)
    shape[axis] = 2 * m
    out = np.empty(shape, dtype=even.dtype)
    sl_e = [slice(None)] * out.ndim
    sl_o = [slice(None)] * out.ndim
    sl_e[axis] = slice(0, None, 2)
    sl_o[axis] = slice(1, None, 2)
    out[tuple(sl_e)] = even
    out[tuple(sl_o)] = odd
    return _slice(out, axis, lo - 2 * n_lo, hi - 2 * n_lo + 1), lo


def reduce_patch(p: Patch) -> Patch:
    h, w = p.full_shape
    a, y0, nh = _reduce_axis(p.data, p.y0, h, 0)
    a, x0, nw = _reduce_axis(a, p.x0, w, 1)
    return Patch(a, y0, x0, (nh, nw))


def expand_patch(p: Patch, fine_shape) -> Patch:
    h, w = p.full_shape
    a, y0 = _expand_axis(p.data, p.y0, h, fine_shape[0], 0)
    a, x0 = _expand_axis(a, p.x0, w, fine_shape[1], 1)
    return Patch(a, y0, x0, tuple(fine_shape[:2]))


def reduce(image: np.ndarray) -> np.ndarray:
    return reduce_patch(Patch.whole(image)).data


def expand(image: np.ndarray, fine_shape) -> np.ndarray:
    return expand_patch(Patch.whole(image), fine_shape).data


def subtract_patches(a: Patch, b: Patch) -> Patch:
    """``a - b`` on the union window of two patches of the same image."""
    y0, x0 = min(a.y0, b.y0), min(a.x0, b.x0)
    y1, x1 = max(a.y1, b.y1), max(a.x1, b.x1)
    out = np.zeros((y1 - y0, x1 - x0) + a.data.shape[2:], dtype=np.float64)
    out[a.y0 - y0:a.y1 - y0, a.x0 - x0:a.x1 - x0] += a.data
    out[b.y0 - y0:b.y1 - y0, b.x0 - x0:b.x1 - x0] -= b.data
    return Patch(out, y0, x0, a.full_shape)


def gaussian_patches(p: Patch, levels: int) -> list:
    out = [p]
    for _ in range(levels - 1):
        out.append(reduce_patch(out[-1]))
    return out


def laplacian_patches(p: Patch, levels: int) -> list:
    g = gaussian_patches(p, levels)
    out = [subtract_patches(g[j], expand_patch(g[j + 1], g[j].full_shape)) for j in range(levels - 1)]
    out.append(g[-1])
    return out


def gaussian_pyramid(frame: np.ndarray, levels: int) -> Pyramid:
    """Gaussian pyramid; level 0 is the input itself."""
    frame = np.asarray(frame, dtype=np.float64)
    check_levels(frame.shape, levels)
    return Pyramid([q.data for q in gaussian_patches(Patch.whole(frame), levels)], "gaussian")


def laplacian_pyramid(frame: np.ndarray, levels: int) -> Pyramid:
    """``L_j = G_j - EXPAND(G_{j+1})``; the top level holds ``G_{l-1}``."""
    frame = np.asarray(frame, dtype=np.float64)
    check_levels(frame.shape, levels)
    g = gaussian_pyramid(frame, levels).levels
    lap = [g[j] - expand(g[j + 1], g[j].shape) for j in range(levels - 1)]
    lap.append(g[-1])
    return Pyramid(lap, "laplacian")


def collapse(pyr) -> np.ndarray:
    """Invert a Laplacian pyramid by expanding and summing from the top."""
    levels = pyr.levels if isinstance(pyr, Pyramid) else list(pyr)
    out = levels[-1]
    for lap in reversed(levels[:-1]):
        out = lap + expand(out, lap.shape)
    return out
