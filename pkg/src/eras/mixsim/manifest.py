import dataclasses
import json
import os
import typing

import numpy as np

import eras.logging as logging

from ..helpers.exceptions import DataException
from .rir import Rir
from .scene import MixtureScene, SceneParams
from .wav import WavFormat, load_wav, save_wav

logger = logging.getLogger()

MANIFEST_FILENAME = "manifest.json"


@dataclasses.dataclass(frozen=True)
class SceneEntry:
    name: str
    seed: int
    sample_rate: int
    length: int
    delays: typing.List[typing.List[int]]
    files: typing.Dict[str, str]
    rt60: typing.Optional[typing.List[typing.List[float]]] = None
    drr_db: typing.Optional[typing.List[typing.List[float]]] = None

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class SceneManifest:
    scenes: typing.List[SceneEntry]
    scene_config: typing.Dict[str, typing.Any] = dataclasses.field(default_factory=dict)
    seed: typing.Optional[int] = None

    def to_json(self) -> str:
        payload = {
            "scene_config": self.scene_config,
            "scenes": [entry.to_dict() for entry in self.scenes],
            "seed": self.seed,
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def _component_files(n_sources: int, n_channels: int) -> typing.Dict[str, str]:
    files = {f"mixture_{m}": f"mixture_{m}.wav" for m in range(n_channels)}
    for n in range(n_sources):
        files[f"dry_{n}"] = f"dry_{n}.wav"
        for m in range(n_channels):
            for kind in ("image", "direct", "early", "rir"):
                files[f"{kind}_{n}_{m}"] = f"{kind}_{n}_{m}.wav"
    return files


def save_scene(scene: MixtureScene, directory: str, name: str) -> SceneEntry:
    """Write every scene component as a float32 WAV under ``directory/name``.

    Additive noise, when present, is written as ``noise_<m>.wav``. Loading
    rebuilds the mixtures from the stored images and noise, so a reloaded
    scene stays an exact sum of its components.
    """
    scene_dir = os.path.join(directory, name)
    os.makedirs(scene_dir, exist_ok=True)
    files = _component_files(scene.n_sources, scene.n_channels)
    components = {f"mixture_{m}": w for m, w in enumerate(scene.mixtures)}
    if scene.noise is not None:
        for m, w in enumerate(scene.noise):
            files[f"noise_{m}"] = f"noise_{m}.wav"
            components[f"noise_{m}"] = w
    for n in range(scene.n_sources):
        components[f"dry_{n}"] = scene.dry[n]
        for m in range(scene.n_channels):
            components[f"image_{n}_{m}"] = scene.images[n][m]
            components[f"direct_{n}_{m}"] = scene.direct_path[n][m]
            components[f"early_{n}_{m}"] = scene.early[n][m]
            rir = scene.rirs[n][m]
            components[f"rir_{n}_{m}"] = scene.dry[n].with_samples(rir.taps)
    for key, waveform in sorted(components.items()):
        save_wav(os.path.join(scene_dir, files[key]), waveform, WavFormat.Float32)

    params = scene.params
    entry = SceneEntry(
        name=name,
        seed=scene.seed,
        sample_rate=scene.sample_rate,
        length=scene.length,
        delays=[[r.delay_to_direct for r in row] for row in scene.rirs],
        files={k: os.path.join(name, v) for k, v in files.items()},
        rt60=None if params is None else params.rt60,
        drr_db=None if params is None else params.drr_db,
    )
    logger.info(f"Scene '{name}' written to {scene_dir}")
    return entry


def write_manifest(manifest: SceneManifest, directory: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, MANIFEST_FILENAME)
    with open(path, "w") as f:
        f.write(manifest.to_json())
        f.write("\n")
    logger.info(f"Manifest with {len(manifest.scenes)} scene(s) written to {path}")
    return path


class ManifestLoader:
    def __init__(self, path: str):
        if os.path.isdir(path):
            path = os.path.join(path, MANIFEST_FILENAME)
        self.filename = path
        self.dirname = os.path.dirname(os.path.abspath(path))

    def load(self) -> SceneManifest:
        if not os.path.isfile(self.filename):
            raise DataException(f"Manifest '{self.filename}' does not exist")
        with open(self.filename, "r") as file:
            try:
                data = json.load(file)
            except json.JSONDecodeError as e:
                raise DataException(f"Manifest '{self.filename}' is not valid JSON. Error '{e}'") from e
        if type(data) != dict or type(data.get("scenes")) != list:
            raise DataException(f"Expected {self.filename} to hold an object with a 'scenes' list")

        scenes = [self._create_entry(d) for d in data["scenes"]]
        return SceneManifest(scenes=scenes, scene_config=data.get("scene_config") or {}, seed=data.get("seed"))

    def _create_entry(self, d) -> SceneEntry:
        try:
            return SceneEntry(
                name=str(d["name"]).strip(),
                seed=int(d["seed"]),
                sample_rate=int(d["sample_rate"]),
                length=int(d["length"]),
                delays=[[int(x) for x in row] for row in d["delays"]],
                files={str(k): str(v) for k, v in d["files"].items()},
                rt60=d.get("rt60"),
                drr_db=d.get("drr_db"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataException(f"Invalid scene entry {d} in {self.filename}. Error '{e}'") from e

    def load_scene(self, entry: SceneEntry) -> MixtureScene:
        n_sources = len(entry.delays)
        n_channels = len(entry.delays[0]) if n_sources else 0
        expected = _component_files(n_sources, n_channels)
        missing = sorted(set(expected) - set(entry.files))
        if not n_sources or missing:
            raise DataException(f"Scene '{entry.name}' is missing components {missing}")

        def read(key: str):
            path = os.path.join(self.dirname, entry.files[key])
            if not os.path.isfile(path):
                raise DataException(f"Scene '{entry.name}' is missing component '{key}' ({path})")
            return load_wav(path)

        def grid(kind: str):
            return [[read(f"{kind}_{n}_{m}") for m in range(n_channels)] for n in range(n_sources)]

        rirs = [
            [Rir(read(f"rir_{n}_{m}").mono, entry.delays[n][m], entry.sample_rate) for m in range(n_channels)]
            for n in range(n_sources)
        ]
        params = None
        if entry.rt60 is not None and entry.drr_db is not None:
            params = SceneParams(entry.rt60, entry.drr_db, entry.delays, [], [])

        images = grid("image")
        noise = None
        if all(f"noise_{m}" in entry.files for m in range(n_channels)):
            noise = [read(f"noise_{m}") for m in range(n_channels)]
        mixtures = []
        for m in range(n_channels):
            stored = read(f"mixture_{m}")
            parts = [images[n][m].mono for n in range(n_sources)]
            if noise is not None:
                parts.append(noise[m].mono)
            if len({p.shape for p in parts} | {stored.mono.shape}) != 1:
                raise DataException(f"Scene '{entry.name}' mixture_{m} does not match its components in length")
            mixtures.append(stored.with_samples(np.sum(parts, axis=0)))

        return MixtureScene(
            dry=[read(f"dry_{n}") for n in range(n_sources)],
            rirs=rirs,
            images=images,
            direct_path=grid("direct"),
            early=grid("early"),
            mixtures=mixtures,
            noise=noise,
            seed=entry.seed,
            params=params,
        )

    def load_scenes(self) -> typing.List[MixtureScene]:
        manifest = self.load()
        if not manifest.scenes:
            raise DataException(f"Manifest '{self.filename}' lists no scenes")
        return [self.load_scene(entry) for entry in manifest.scenes]


def load_scenes(path: str) -> typing.List[MixtureScene]:
    return ManifestLoader(path).load_scenes()
