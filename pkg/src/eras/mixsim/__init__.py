from .manifest import (
    MANIFEST_FILENAME,
    ManifestLoader,
    SceneEntry,
    SceneManifest,
    load_scenes,
    save_scene,
    write_manifest,
)
from .rir import RT60_MAX, RT60_MIN, Rir, RirParams, decay_envelope, estimate_rt60, synth_rir
from .scene import (
    MixtureScene,
    SceneConfig,
    SceneParams,
    crop_scene,
    draw_scene_params,
    generate_scene,
    random_crop,
    render_scene,
)
from .sources import speech_like
from .wav import WavFormat, WavFormatException, inspect_wav, load_wav, quantize_pcm16, save_wav

__all__ = [
    "MANIFEST_FILENAME",
    "ManifestLoader",
    "MixtureScene",
    "RT60_MAX",
    "RT60_MIN",
    "Rir",
    "RirParams",
    "SceneConfig",
    "SceneEntry",
    "SceneManifest",
    "SceneParams",
    "WavFormat",
    "WavFormatException",
    "crop_scene",
    "decay_envelope",
    "draw_scene_params",
    "estimate_rt60",
    "generate_scene",
    "inspect_wav",
    "load_scenes",
    "load_wav",
    "quantize_pcm16",
    "random_crop",
    "render_scene",
    "save_scene",
    "save_wav",
    "speech_like",
    "synth_rir",
    "write_manifest",
]
