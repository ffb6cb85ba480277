"""Benchmark runs: precompute once, time every frame, collect a report."""

from __future__ import annotations

import csv
import resource
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from ..core import compose_frames, frames_at
from ..direct import FeatherBlender, MultibandBlender
from ..errors import BlendError, ParameterError, StructuralError
from ..gradient import DEFAULT_EPSILON, DEFAULT_SPACING, ModifiedPoissonBlender, MultiSplineBlender
from ..membrane import MembraneBlender
from ..metrics import DEFAULT_ALPHA, DEFAULT_DELTA, bleeding_degree
from ..seams import SeamLayout, compute_seams
from .io import SceneManifest, load_layout, load_streams, write_frame

ALGORITHMS = ("fb", "mbb", "mvcb", "cpb", "msb", "mpb", "none")


@dataclass
class BlendParams:
    levels: int | None = None
    spline_spacing: int = DEFAULT_SPACING
    epsilon: float = DEFAULT_EPSILON
    alpha: float = DEFAULT_ALPHA
    delta: float = DEFAULT_DELTA
    anchor_order: list | None = None
    metrics: bool = False
    threads: int | None = None
    seed: int = 0
    cache_dir: str | None = None


class _Composite:
    """The ``none`` algorithm: trimmed composite without blending."""

    def __init__(self, layout):
        self.layout = layout

    def blend_frames(self, frames, return_offsets=False):
        out = compose_frames(frames, self.layout.trimmed_masks)
        return (out, np.zeros_like(out)) if return_offsets else out


class _Direct:
    """Adapter giving direct blenders the offset-returning interface."""

    def __init__(self, blender, layout):
        self.blender = blender
        self.layout = layout

    def blend_frames(self, frames, return_offsets=False):
        out = self.blender.blend_frames(frames)
        if not return_offsets:
            return out
        return out, out - compose_frames(frames, self.layout.trimmed_masks)


def make_blender(layout: SeamLayout, algorithm: str, params: BlendParams | None = None):
    """Blender object with ``blend_frames(frames, return_offsets=False)``."""
    p = params or BlendParams()
    if algorithm == "none":
        return _Composite(layout)
    if algorithm == "fb":
        return _Direct(FeatherBlender.from_layout(layout), layout)
    if algorithm == "mbb":
        return _Direct(MultibandBlender(layout, p.levels), layout)
    if algorithm in ("mvcb", "cpb"):
        method = "mvc" if algorithm == "mvcb" else "convpyr"
        return MembraneBlender(layout, method, p.anchor_order, cache_dir=p.cache_dir)
    if algorithm == "msb":
        return MultiSplineBlender(layout, p.spline_spacing)
    if algorithm == "mpb":
        return ModifiedPoissonBlender(layout, p.epsilon, workers=p.threads)
    raise ParameterError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")


def _peak_mb() -> float:
    # ru_maxrss is in kilobytes on Linux
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


@dataclass
class RunReport:
    algorithm: str
    params: dict
    shape: tuple
    precompute_ms: float
    frame_ms: list = field(default_factory=list)
    peak_mb: float = 0.0
    degrees: list | None = None

    @property
    def mean_frame_ms(self) -> float:
        return float(np.mean(self.frame_ms)) if self.frame_ms else 0.0

    def write_csv(self, path) -> None:
        keys = ("levels", "spline_spacing", "epsilon", "alpha", "delta", "anchor_order", "threads", "seed")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame", "algorithm", "width", "height", "time_ms", "precompute_ms", "peak_mb",
                        "bleeding_degree", *keys])
            for k, t in enumerate(self.frame_ms):
                deg = "" if self.degrees is None else repr(self.degrees[k])
                vals = []
                for key in keys:
                    v = self.params.get(key)
                    vals.append(" ".join(str(s) for s in v) if isinstance(v, (list, tuple)) else
                                ("" if v is None else v))
                w.writerow([k, self.algorithm, self.shape[1], self.shape[0], f"{t:.3f}",
                            f"{self.precompute_ms:.3f}", f"{self.peak_mb:.1f}", deg, *vals])


def _params_echo(algorithm, p: BlendParams, layout):
    d = asdict(p)
    d.pop("metrics")
    d.pop("cache_dir")
    if algorithm in ("mvcb", "cpb") and d["anchor_order"] is None:
        d["anchor_order"] = sorted(layout.stream_indices)
    if algorithm == "mbb" and d["levels"] is None:
        from ..pyramid import default_levels

        d["levels"] = default_levels(layout.shape)
    return d


def run_benchmark(
    source,
    algorithm: str,
    params: BlendParams | None = None,
    out_dir=None,
    layout: SeamLayout | None = None,
    keep_outputs: bool = True,
):
    """Blend every frame of a scene and time it.

    Args:
        source: a :class:`SceneManifest` or a list of mapped streams.
        algorithm: one of ``fb, mbb, mvcb, cpb, msb, mpb, none``.
        out_dir: if given, output frames are written there as PNG.
        layout: precomputed seam layout (otherwise loaded or computed).

    Returns:
        ``(RunReport, outputs)``; ``outputs`` is empty unless ``keep_outputs``.
    """
    if algorithm not in ALGORITHMS:
        raise ParameterError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    p = params or BlendParams()
    if p.threads is not None and p.threads < 1:
        raise ParameterError(f"threads must be >= 1, got {p.threads}")
    np.random.seed(p.seed)
    if isinstance(source, SceneManifest):
        streams = load_streams(source)
        if layout is None and source.layout_path is not None:
            layout = load_layout(source.layout_path, [s.mask for s in streams])
    else:
        streams = list(source)
    n_frames = min(len(s) for s in streams)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    outputs, offsets, times = [], [], []
    with threadpool_limits(limits=p.threads):
        t0 = time.perf_counter()
        if layout is None:
            layout = compute_seams([s.mask for s in streams], [s.stream_index for s in streams])
        blender = make_blender(layout, algorithm, p)
        precompute_ms = (time.perf_counter() - t0) * 1e3
        report = RunReport(algorithm, _params_echo(algorithm, p, layout), layout.shape, precompute_ms)
        for k in range(n_frames):
            try:
                frames = frames_at(streams, k)
                t1 = time.perf_counter()
                if p.metrics:
                    out, off = blender.blend_frames(frames, return_offsets=True)
                else:
                    out = blender.blend_frames(frames)
            except BlendError as exc:
                exc.frame_index = k
                raise
            times.append((time.perf_counter() - t1) * 1e3)
            if p.metrics:
                offsets.append(off)
            if out_dir is not None:
                write_frame(out_dir / f"{k:04d}.png", out)
            if keep_outputs:
                outputs.append(out)
            report.peak_mb = max(report.peak_mb, _peak_mb())
    report.frame_ms = times
    if p.metrics:
        report.degrees = bleeding_degree(offsets, p.alpha, p.delta).per_frame_degree
    return report, outputs


@dataclass
class DiffStats:
    mae: float
    max_abs: float
    per_frame_mae: list
    per_frame_max: list


def compare_outputs(frames_a: Sequence[np.ndarray], frames_b: Sequence[np.ndarray]) -> DiffStats:
    """Mean and maximum absolute differences between two frame sequences."""
    frames_a, frames_b = list(frames_a), list(frames_b)
    if len(frames_a) != len(frames_b):
        raise StructuralError(f"{len(frames_a)} frames against {len(frames_b)}")
    maes, maxes = [], []
    total, count = 0.0, 0
    for a, b in zip(frames_a, frames_b):
        a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise StructuralError(f"frame shapes differ: {a.shape} vs {b.shape}")
        d = np.abs(a - b)
        maes.append(float(d.mean()))
        maxes.append(float(d.max(initial=0.0)))
        total += float(d.sum())
        count += d.size
    return DiffStats(total / count if count else 0.0, max(maxes, default=0.0), maes, maxes)
