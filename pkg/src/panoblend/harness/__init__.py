"""Scene I/O, synthetic scenes, benchmark runs and the command line."""

from .bench import ALGORITHMS, BlendParams, DiffStats, RunReport, compare_outputs, make_blender, run_benchmark
from .io import (
    SceneManifest,
    StreamEntry,
    load_layout,
    load_manifest,
    load_streams,
    read_frame,
    read_mask,
    save_layout,
    write_frame,
    write_manifest,
    write_mask,
)
from .synth import Scene, SynthSpec, make_scene, synth_scene
