"""Seeded synthetic multi-stream scenes.

A shared ground-truth texture (smooth noise plus hard-edged bars and discs)
is cut into overlapping stream crops.  Each stream may add a constant
illuminance offset, and every second stream sees the content displaced by
``shift`` pixels along both axes, which misaligns every seam between
neighbouring strips.  Frames follow the texture as it drifts sideways.

Two layouts are available: ``"strips"`` (side-by-side vertical strips) and
``"rig"`` (a full-width top band for stream 1 above side-by-side strips for
the others, like a camera ring with an upward-facing camera).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy import ndimage

from ..core import MappedStream
from ..errors import ParameterError
from .io import save_layout, write_frame, write_manifest, write_mask


@dataclass
class SynthSpec:
    width: int = 256
    height: int = 128
    n_streams: int = 2
    overlap: float = 0.2
    offsets: list | None = None
    shift: float = 0.0
    seed: int = 0
    n_frames: int = 3
    drift: float = 2.0
    layout: str = "strips"
    channels: int = 3
    band_fraction: float = 0.4  # rig layout: height of the top band

    def validate(self):
        if self.width < 8 or self.height < 8:
            raise ParameterError("scene must be at least 8x8 pixels")
        if self.n_streams < 2:
            raise ParameterError("a scene needs at least 2 streams")
        if not 0 < self.overlap <= 0.5:
            raise ParameterError(f"overlap fraction must lie in (0, 0.5], got {self.overlap}")
        if self.shift < 0:
            raise ParameterError(f"shift must be >= 0, got {self.shift}")
        if self.offsets is not None and len(self.offsets) != self.n_streams:
            raise ParameterError(f"{len(self.offsets)} offsets for {self.n_streams} streams")
        if self.layout not in ("strips", "rig"):
            raise ParameterError(f"unknown layout {self.layout!r}")
        if self.layout == "rig" and not 0.1 <= self.band_fraction <= 0.7:
            raise ParameterError("band_fraction must lie in [0.1, 0.7]")
        if self.n_frames < 1 or self.channels not in (1, 3):
            raise ParameterError("need >= 1 frame and 1 or 3 channels")
        strips = self.n_streams - (1 if self.layout == "rig" else 0)
        if self.width / strips < 4:
            raise ParameterError("too many streams for the panorama width")
        return self

    @classmethod
    def from_dict(cls, d) -> "SynthSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown synth spec keys: {sorted(unknown)}")
        return cls(**d).validate()


@dataclass
class Scene:
    spec: SynthSpec
    masks: list
    streams: list
    ground_truth: list = field(repr=False)

    @property
    def shape(self):
        return self.spec.height, self.spec.width


def strip_spans(width: int, n: int, overlap: float) -> list:
    """Column spans ``[x0, x1)`` of ``n`` strips whose overlaps are ``overlap`` of a strip."""
    s = width / (n - (n - 1) * overlap)
    step = s * (1 - overlap)
    spans = []
    for i in range(n):
        x0 = int(round(i * step))
        x1 = width if i == n - 1 else int(round(i * step + s))
        spans.append((x0, x1))
    return spans


def scene_masks(spec: SynthSpec) -> list:
    h, w = spec.height, spec.width
    masks = []
    if spec.layout == "strips":
        for x0, x1 in strip_spans(w, spec.n_streams, spec.overlap):
            m = np.zeros((h, w), dtype=bool)
            m[:, x0:x1] = True
            masks.append(m)
        return masks
    band = int(round(h * spec.band_fraction))
    top = np.zeros((h, w), dtype=bool)
    top[:band] = True
    masks.append(top)
    spans = strip_spans(w, spec.n_streams - 1, spec.overlap)
    # the band overlap must be at least as tall as the strip overlaps are wide,
    # otherwise the top region reaches its mask edge where three streams meet
    strip_ov = max([a[1] - b[0] for a, b in zip(spans, spans[1:])], default=0)
    y0 = max(1, band - max(int(round(spec.overlap * band)), strip_ov + 2))
    for x0, x1 in spans:
        m = np.zeros((h, w), dtype=bool)
        m[y0:, x0:x1] = True
        masks.append(m)
    return masks


def _texture(rng, h, w, channels):
    big = ndimage.gaussian_filter(rng.random((h, w, channels)), (h / 16, w / 16, 0))
    fine = ndimage.gaussian_filter(rng.random((h, w, channels)), (2, 2, 0))
    tex = 0.5 + 3.0 * (big - big.mean()) + 0.6 * (fine - fine.mean())
    yy, xx = np.mgrid[:h, :w]
    # hard edges that cross seams in every direction
    for _ in range(max(2, (h * w) // 6000)):
        kind = rng.integers(3)
        val = rng.choice([0.08, 0.92]) + 0.03 * rng.standard_normal(channels)
        if kind == 0:
            y, t = rng.integers(0, h), rng.integers(2, max(3, h // 12))
            sel = (yy >= y) & (yy < y + t)
        elif kind == 1:
            a = rng.uniform(0, np.pi)
            off = rng.uniform(-0.5, 0.5) * (h + w)
            d = (xx - w / 2) * np.cos(a) + (yy - h / 2) * np.sin(a) - off
            sel = np.abs(d) < rng.uniform(1.5, 4)
        else:
            cy, cx = rng.uniform(0, h), rng.uniform(0, w)
            r = rng.uniform(3, max(4, min(h, w) / 6))
            sel = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
        tex[sel] = val
    return np.clip(tex, 0.0, 1.0)


def make_scene(spec: SynthSpec | dict) -> Scene:
    """Build a scene in memory."""
    if isinstance(spec, dict):
        spec = SynthSpec.from_dict(spec)
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    h, w = spec.height, spec.width
    margin = int(np.ceil(abs(spec.drift) * spec.n_frames + spec.shift)) + 2
    tex = _texture(rng, h + 2 * margin, w + 2 * margin, spec.channels)
    masks = scene_masks(spec)
    offsets = [0.0] * spec.n_streams if spec.offsets is None else [float(o) for o in spec.offsets]
    truth = []
    per_stream = [[] for _ in range(spec.n_streams)]
    for t in range(spec.n_frames):
        dx = margin + t * spec.drift
        gt = ndimage.shift(tex, (-margin, -dx, 0), order=1, mode="nearest")[:h, :w]
        truth.append(gt)
        for i, m in enumerate(masks):
            s = spec.shift if i % 2 == 1 else 0.0
            if s:
                view = ndimage.shift(tex, (-(margin + s), -(dx + s), 0), order=1, mode="nearest")[:h, :w]
            else:
                view = gt
            frame = np.where(m[:, :, None], view + offsets[i], 0.0)
            per_stream[i].append(frame)
    streams = [MappedStream(f, m, i + 1) for i, (f, m) in enumerate(zip(per_stream, masks))]
    return Scene(spec, masks, streams, truth)


def load_spec(path) -> SynthSpec:
    with open(path) as fh:
        return SynthSpec.from_dict(yaml.safe_load(fh) or {})


def synth_scene(spec: SynthSpec | dict, out_dir, with_layout: bool = False) -> Path:
    """Write a scene to ``out_dir`` (masks, frames, manifest); returns the manifest path."""
    from ..seams import compute_seams

    scene = make_scene(spec)
    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    entries = []
    for s in scene.streams:
        mask_rel = Path("masks") / f"stream{s.stream_index}.png"
        write_mask(out / mask_rel, s.mask)
        fdir = Path("frames") / f"stream{s.stream_index}"
        (out / fdir).mkdir(parents=True, exist_ok=True)
        for k in range(len(s.frames)):
            write_frame(out / fdir / f"{k:04d}.png", s.frames[k])
        entries.append(dict(stream_index=s.stream_index, mask=mask_rel, frames=fdir / "{:04d}.png"))
    gdir = out / "ground_truth"
    gdir.mkdir(exist_ok=True)
    for k, g in enumerate(scene.ground_truth):
        write_frame(gdir / f"{k:04d}.png", g)
    layout_rel = None
    if with_layout:
        save_layout(compute_seams(scene.masks, [s.stream_index for s in scene.streams]), out / "layout")
        layout_rel = Path("layout") / "layout.yaml"
    with open(out / "synth_spec.yaml", "w") as fh:
        yaml.safe_dump(asdict(scene.spec), fh, sort_keys=False)
    return write_manifest(out / "manifest.yaml", (scene.spec.width, scene.spec.height),
                          (0, scene.spec.n_frames - 1), entries, layout_rel)
