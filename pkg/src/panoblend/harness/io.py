"""Scene manifests, image files and layout sidecars.

A manifest is a YAML (or JSON) document::

    panorama_size: [320, 160]        # width, height
    frame_range: [0, 4]              # inclusive
    layout: layout/layout.yaml       # optional precomputed seam layout
    streams:
      - stream_index: 1
        mask: masks/stream1.png
        frames: frames/stream1/{:04d}.png

``frames`` is either a ``str.format`` pattern applied to the frame number
or a directory whose ``.png``/``.ppm`` files are taken in sorted order.
Relative paths are resolved against the manifest's directory.  Masks are
8-bit grayscale images where values ``>= 128`` mark covered pixels.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from PIL import Image

from ..core import MappedStream, as_frame, to_uint8
from ..errors import ManifestError, StructuralError
from ..seams import SeamLayout, layout_from_labels

FRAME_SUFFIXES = (".png", ".ppm")


@dataclass
class StreamEntry:
    stream_index: int
    mask_path: Path
    frame_paths: list


@dataclass
class SceneManifest:
    path: Path
    panorama_size: tuple  # (width, height)
    frame_range: tuple  # (first, last), inclusive
    streams: list
    layout_path: Path | None = None
    warnings: list = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.panorama_size[1], self.panorama_size[0]

    @property
    def n_frames(self) -> int:
        return self.frame_range[1] - self.frame_range[0] + 1


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) >= 128


def write_mask(path, mask) -> None:
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(path)


def read_frame(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        return as_frame(np.asarray(im))


def write_frame(path, frame) -> None:
    """Export a frame as 8-bit PNG or PPM (clamped and rounded here only)."""
    data = to_uint8(frame)
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[:, :, 0]
    Image.fromarray(data).save(path)


class FrameSequence:
    """Lazy frame list backed by image files."""

    def __init__(self, paths):
        self.paths = list(paths)

    def __len__(self):
        return len(self.paths)

    def __getitem__(self, k):
        return read_frame(self.paths[k])


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def _frame_paths(base, spec, first, last, name):
    if "{" in str(spec):
        return [_resolve(base, str(spec).format(k)) for k in range(first, last + 1)]
    d = _resolve(base, spec)
    if not d.is_dir():
        raise ManifestError(f"{name}: frame directory {d} does not exist")
    files = sorted(f for f in d.iterdir() if f.suffix.lower() in FRAME_SUFFIXES)
    if len(files) <= last:
        raise ManifestError(f"{name}: {d} holds {len(files)} frames, need index {last}")
    return files[first:last + 1]


def load_manifest(path) -> SceneManifest:
    """Parse and validate a manifest; every referenced file must exist."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest {path} does not exist")
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ManifestError(f"manifest {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a mapping")
    for key in ("panorama_size", "streams"):
        if key not in doc:
            raise ManifestError(f"manifest lacks {key!r}")
    try:
        width, height = (int(v) for v in doc["panorama_size"])
    except (TypeError, ValueError) as exc:
        raise ManifestError("panorama_size must be [width, height]") from exc
    first, last = (int(v) for v in doc.get("frame_range", [0, 0]))
    if first < 0 or last < first:
        raise ManifestError(f"invalid frame_range [{first}, {last}]")
    base = path.parent
    entries = doc["streams"]
    if not isinstance(entries, list) or len(entries) < 2:
        raise ManifestError("a manifest needs at least 2 streams")
    seen = set()
    streams = []
    for k, entry in enumerate(entries):
        try:
            idx = int(entry["stream_index"])
            mask_spec, frames_spec = entry["mask"], entry["frames"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"stream entry {k} needs stream_index, mask and frames") from exc
        name = f"stream {idx}"
        if idx in seen:
            raise ManifestError(f"duplicate stream_index {idx}")
        seen.add(idx)
        mask_path = _resolve(base, mask_spec)
        if not mask_path.is_file():
            raise ManifestError(f"{name}: mask {mask_path} does not exist")
        with Image.open(mask_path) as im:
            if im.size != (width, height):
                raise ManifestError(f"{name}: mask is {im.size[0]}x{im.size[1]}, panorama is {width}x{height}")
        frames = _frame_paths(base, frames_spec, first, last, name)
        for f in frames:
            if not Path(f).is_file():
                raise ManifestError(f"{name}: frame {f} does not exist")
        with Image.open(frames[0]) as im:
            if im.size != (width, height):
                raise ManifestError(f"{name}: frames are {im.size[0]}x{im.size[1]}, panorama is {width}x{height}")
        streams.append(StreamEntry(idx, mask_path, frames))
    layout_path = doc.get("layout")
    if layout_path is not None:
        layout_path = _resolve(base, layout_path)
        if not layout_path.is_file():
            raise ManifestError(f"layout sidecar {layout_path} does not exist")
    return SceneManifest(path, (width, height), (first, last), streams, layout_path)


def load_streams(manifest: SceneManifest) -> list:
    """Mapped streams with lazily decoded frames."""
    return [MappedStream(FrameSequence(s.frame_paths), read_mask(s.mask_path), s.stream_index)
            for s in manifest.streams]


def save_layout(layout: SeamLayout, directory) -> Path:
    """Write the label map as a PNG plus a YAML sidecar; returns the sidecar path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if layout.n_streams > 254:
        raise StructuralError("layout sidecars hold at most 254 streams")
    Image.fromarray((layout.label_map + 1).astype(np.uint8), mode="L").save(directory / "labels.png")
    for i, m in enumerate(layout.trimmed_masks):
        write_mask(directory / f"trimmed_{layout.stream_indices[i]}.png", m)
    side = directory / "layout.yaml"
    with open(side, "w") as fh:
        yaml.safe_dump(
            dict(labels="labels.png", stream_indices=list(layout.stream_indices),
                 shape=list(layout.shape), digest=layout.digest()),
            fh, sort_keys=False,
        )
    return side


def load_layout(path, masks) -> SeamLayout:
    """Read a layout sidecar written by :func:`save_layout` and check it against ``masks``."""
    path = Path(path)
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    with Image.open(_resolve(path.parent, doc["labels"])) as im:
        labels = np.asarray(im).astype(np.int32) - 1
    try:
        layout = layout_from_labels(masks, labels, doc["stream_indices"])
    except StructuralError as exc:
        raise ManifestError(f"layout {path}: {exc}") from exc
    if doc.get("digest") and doc["digest"] != layout.digest():
        raise ManifestError(f"layout {path} was computed for different masks")
    return layout


def write_manifest(path, panorama_size, frame_range, streams, layout=None) -> Path:
    """Write a manifest; ``streams`` holds dicts with stream_index, mask and frames."""
    doc = dict(panorama_size=list(panorama_size), frame_range=list(frame_range))
    if layout is not None:
        doc["layout"] = os.fspath(layout)
    doc["streams"] = [dict(stream_index=int(s["stream_index"]), mask=os.fspath(s["mask"]),
                           frames=os.fspath(s["frames"])) for s in streams]
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    return Path(path)
