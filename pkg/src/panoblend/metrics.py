"""Bleeding metric: energy map, Otsu binarisation and bleeding degree.

The energy of an offset map is the per-pixel mean of absolute channel
offsets, in 8-bit intensity units.  Otsu's threshold splits the energy
histogram into a low and a high class; with ``E_h`` the summed energy and
``A_h`` the size of the high class, every pixel is shrunk by ``alpha``
times the mean high-class energy, ``B = max(0, e - alpha E_h / (A_h + delta))``,
and the degree of one frame is ``sum B**2``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, StructuralError

BINS = 256
DEFAULT_ALPHA = 2.0
DEFAULT_DELTA = 1e-6
SCALE = 255.0


class DegenerateInputError(ParameterError):
    """The energy map has fewer than two distinct values."""


def energy_map(offset: np.ndarray, reduce: str = "mean", scale: float = SCALE) -> np.ndarray:
    """Absolute offsets reduced over channels (``"mean"`` or ``"max"``), times ``scale``."""
    a = np.abs(np.asarray(offset, dtype=np.float64))
    if a.ndim == 2:
        a = a[:, :, None]
    if reduce == "mean":
        e = a.mean(axis=-1)
    elif reduce == "max":
        e = a.max(axis=-1)
    else:
        raise ParameterError(f"unknown channel reduction {reduce!r}")
    return e * scale


def _bin_index(energy, top):
    return np.minimum((energy / top * BINS).astype(np.int64), BINS - 1)


def otsu_bin(energy: np.ndarray) -> int:
    """First histogram bin of the high class (256 bins over ``[0, max]``)."""
    e = np.asarray(energy, dtype=np.float64)
    top = e.max(initial=0.0)
    if e.size == 0 or top <= 0 or e.min() == top:
        raise DegenerateInputError("energy map is constant")
    hist = np.bincount(_bin_index(e, top).ravel(), minlength=BINS).astype(np.float64)
    p = hist / hist.sum()
    centers = np.arange(BINS, dtype=np.float64)
    w0 = np.cumsum(p)[:-1]  # low class = bins < k for k = 1 .. BINS-1
    m0 = np.cumsum(p * centers)[:-1]
    total = float(np.sum(p * centers))
    w1 = 1.0 - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (total * w0 - m0) ** 2 / (w0 * w1)
    between[(w0 <= 0) | (w1 <= 0)] = -1.0
    return int(np.argmax(between)) + 1


def otsu_threshold(energy: np.ndarray) -> float:
    """Otsu threshold in energy units: pixels ``>=`` it form the high class."""
    top = float(np.max(energy))
    return otsu_bin(energy) * top / BINS


def _high_class(energy, k):
    top = energy.max()
    return _bin_index(energy, top) >= k


def bleeding_map(energy: np.ndarray, alpha: float = DEFAULT_ALPHA, delta: float = DEFAULT_DELTA,
                 high: np.ndarray | None = None) -> np.ndarray:
    """``B = max(0, e - alpha E_h / (A_h + delta))`` over the Otsu high class."""
    e = np.asarray(energy, dtype=np.float64)
    if high is None:
        high = _high_class(e, otsu_bin(e))
    a_h = int(np.count_nonzero(high))
    if a_h == 0:
        return np.zeros_like(e)
    e_h = float(e[high].sum())
    return np.maximum(0.0, e - alpha * e_h / (a_h + delta))


@dataclass
class FrameBleeding:
    threshold: float
    a_h: int
    e_h: float
    degree: float
    energy: np.ndarray = field(repr=False, default=None)
    bleeding: np.ndarray = field(repr=False, default=None)


def frame_bleeding(offset: np.ndarray, alpha: float = DEFAULT_ALPHA, delta: float = DEFAULT_DELTA,
                   reduce: str = "mean", keep_maps: bool = False) -> FrameBleeding:
    """Bleeding statistics of one offset map.

    Maps whose peak energy is below one 8-bit level (including all-zero
    maps) count as unblemished: degree 0 with an empty high class.
    """
    e = energy_map(offset, reduce)
    top = float(e.max(initial=0.0))
    if top < 1.0 or e.min() == top:
        b = np.zeros_like(e)
        return FrameBleeding(top, 0, 0.0, 0.0, e if keep_maps else None, b if keep_maps else None)
    k = otsu_bin(e)
    high = _high_class(e, k)
    b = bleeding_map(e, alpha, delta, high)
    return FrameBleeding(
        k * top / BINS,
        int(np.count_nonzero(high)),
        float(e[high].sum()),
        float(np.sum(b * b)),
        e if keep_maps else None,
        b if keep_maps else None,
    )


@dataclass
class BleedingReport:
    frames: list
    alpha: float
    delta: float

    @property
    def per_frame_degree(self) -> list:
        return [f.degree for f in self.frames]

    @property
    def averaged_degree(self) -> float:
        return float(np.mean(self.per_frame_degree))

    @property
    def energy_map(self):
        return self.frames[-1].energy

    @property
    def bleeding_map(self):
        return self.frames[-1].bleeding

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame", "threshold", "A_h", "E_h", "P_B"])
            for i, f in enumerate(self.frames):
                w.writerow([i, repr(f.threshold), f.a_h, repr(f.e_h), repr(f.degree)])


def bleeding_degree(offsets: Sequence[np.ndarray], alpha: float = DEFAULT_ALPHA, delta: float = DEFAULT_DELTA,
                    reduce: str = "mean", keep_maps: bool = False) -> BleedingReport:
    """Per-frame and averaged bleeding degree of a sequence of offset maps."""
    offsets = list(offsets)
    if not offsets:
        raise ParameterError("bleeding degree needs at least one offset map")
    shapes = {np.shape(o)[:2] for o in offsets}
    if len(shapes) != 1:
        raise StructuralError(f"offset maps differ in size: {sorted(shapes)}")
    frames = [frame_bleeding(o, alpha, delta, reduce, keep_maps) for o in offsets]
    return BleedingReport(frames, alpha, delta)
