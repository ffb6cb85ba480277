"""Convolution pyramids: a large smooth kernel approximated by 5- and 3-tap filters.

Forward pass: zero-pad, filter with ``h1`` and keep every second sample,
repeatedly.  Backward pass: at the top apply ``g``; below, zero-insert the
coarser result, filter with ``h2``, crop the padding and add ``g`` applied to
the same level of the forward pass.  All filters are separable and applied
with zero boundary conditions, so the transform approximates a translation
invariant convolution on an unbounded domain in linear time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import ndimage

PAD = 5


@dataclass(frozen=True)
class ConvPyrFilters:
    h1: np.ndarray
    h2: np.ndarray
    g: np.ndarray

    @classmethod
    def load(cls, path=None) -> "ConvPyrFilters":
        if path is None:
            text = resources.files("panoblend.data").joinpath("convpyr_filters.json").read_text()
        else:
            with open(path) as fh:
                text = fh.read()
        d = json.loads(text)
        return cls(np.asarray(d["h1"], float), np.asarray(d["h2"], float), np.asarray(d["g"], float))


_DEFAULT = None


def default_filters() -> ConvPyrFilters:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = ConvPyrFilters.load()
    return _DEFAULT


def _sep(x, k):
    y = ndimage.convolve1d(x, k, axis=0, mode="constant")
    return ndimage.convolve1d(y, k, axis=1, mode="constant")


def num_levels(shape) -> int:
    return max(1, int(math.ceil(math.log2(max(shape[:2])))))


def convolve_pyramid(x: np.ndarray, filters: ConvPyrFilters | None = None, levels: int | None = None) -> np.ndarray:
    """Approximate convolution of ``x`` (2-D or ``(H, W, C)``) with the pyramid kernel."""
    f = default_filters() if filters is None else filters
    x = np.asarray(x, dtype=np.float64)
    if levels is None:
        levels = num_levels(x.shape)
    pad = [(PAD, PAD), (PAD, PAD)] + [(0, 0)] * (x.ndim - 2)
    forward = [x]
    for _ in range(levels):
        down = _sep(np.pad(forward[-1], pad), f.h1)[::2, ::2]
        forward.append(down)
    out = _sep(forward[-1], f.g)
    for a in reversed(forward[:-1]):
        ph, pw = a.shape[0] + 2 * PAD, a.shape[1] + 2 * PAD
        up = np.zeros((ph, pw) + a.shape[2:])
        up[::2, ::2] = out
        out = _sep(up, f.h2)[PAD:PAD + a.shape[0], PAD:PAD + a.shape[1]] + _sep(a, f.g)
    return out
