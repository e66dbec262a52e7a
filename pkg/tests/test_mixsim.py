import os
import struct
import tempfile
import unittest

import numpy as np
import soundfile

from eras.dsp import Waveform
from eras.helpers.exceptions import ConfigException, DataException
from eras.mixsim import (
    ManifestLoader,
    Rir,
    RirParams,
    SceneConfig,
    SceneManifest,
    WavFormat,
    WavFormatException,
    crop_scene,
    estimate_rt60,
    generate_scene,
    inspect_wav,
    load_scenes,
    load_wav,
    quantize_pcm16,
    random_crop,
    render_scene,
    save_scene,
    save_wav,
    speech_like,
    synth_rir,
    write_manifest,
)

SMALL = SceneConfig(duration=0.25, rir_length=512)


class TestRir(unittest.TestCase):
    def test_params_validation(self):
        for rt60 in (0.01, 1.5):
            with self.assertRaisesRegex(ConfigException, "rt60"):
                RirParams(rt60, 10)
        with self.assertRaises(ConfigException):
            RirParams(0.3, 100, length=50)

    def test_direct_tap_and_drr(self):
        rir = synth_rir(RirParams(0.3, 25, 2048, drr_db=3.0), seed=7)
        self.assertEqual(rir.delay_to_direct, 25)
        self.assertTrue(np.all(rir.taps[:25] == 0.0))
        self.assertEqual(rir.taps[25], 1.0)
        tail = rir.taps[26:]
        self.assertAlmostEqual(float(np.sum(tail**2)), 10.0 ** (-0.3), places=10)
        np.testing.assert_array_equal(rir.direct(), rir.taps[:26])
        self.assertEqual(rir.early(50.0).shape[0], 25 + 400 + 1)

    def test_estimated_rt60(self):
        for seed in range(8):
            rir = synth_rir(RirParams(0.2, 40, 4096), seed=seed)
            self.assertAlmostEqual(estimate_rt60(rir), 0.2, delta=0.01, msg=f"seed {seed}")

    def test_invalid_taps(self):
        with self.assertRaises(DataException):
            Rir(np.array([0.0, 0.5, 1.0]), 2, 8000)
        with self.assertRaises(DataException):
            Rir(np.array([1.0]), 3, 8000)
        with self.assertRaises(DataException):
            Rir(np.array([1.0, np.nan]), 0, 8000)


class TestSources(unittest.TestCase):
    def test_unit_variance_and_deterministic(self):
        a = speech_like(4000, 8000, np.random.default_rng(5))
        b = speech_like(4000, 8000, np.random.default_rng(5), speaker=0)
        self.assertEqual(a.shape, (4000,))
        self.assertAlmostEqual(float(np.std(a)), 1.0)
        np.testing.assert_array_equal(a, b)
        c = speech_like(4000, 8000, np.random.default_rng(5), speaker=1)
        self.assertFalse(np.allclose(a, c))


class TestScene(unittest.TestCase):
    def test_config_validation(self):
        with self.assertRaises(ConfigException):
            SceneConfig(rt60_range=(0.01, 0.5))
        with self.assertRaises(ConfigException):
            SceneConfig(overlap_ratio=0.0)
        with self.assertRaises(ConfigException):
            SceneConfig(rir_length=10)
        with self.assertRaisesRegex(ConfigException, "Unknown"):
            SceneConfig.from_dict({"rt60": 0.3})
        self.assertEqual(SceneConfig.from_dict(SMALL.to_dict()), SMALL)

    def test_mixture_is_sum_of_images(self):
        scene = generate_scene(SMALL, 11)
        self.assertEqual((scene.n_sources, scene.n_channels), (2, 2))
        self.assertEqual(scene.length, SMALL.length)
        for m in range(2):
            total = sum(w.mono for w in scene.images_at(m))
            np.testing.assert_allclose(scene.mixtures[m].mono, total, atol=1e-12)

    def test_direct_path_is_delayed_source(self):
        scene = generate_scene(SMALL, 12)
        for n in range(2):
            for m in range(2):
                delay = scene.rirs[n][m].delay_to_direct
                direct = scene.direct_path[n][m].mono
                np.testing.assert_allclose(direct[:delay], 0.0, atol=1e-9)
                np.testing.assert_allclose(direct[delay:], scene.dry[n].mono[: scene.length - delay], atol=1e-9)

    def test_microphone_offsets(self):
        for seed in range(5):
            scene = generate_scene(SMALL, seed)
            for row in scene.rirs:
                self.assertLessEqual(abs(row[1].delay_to_direct - row[0].delay_to_direct), SMALL.mic_offset_max)

    def test_deterministic_by_seed(self):
        a, b, c = generate_scene(SMALL, 4), generate_scene(SMALL, 4), generate_scene(SMALL, 5)
        np.testing.assert_array_equal(a.mixtures[0].mono, b.mixtures[0].mono)
        np.testing.assert_array_equal(a.images[1][1].mono, b.images[1][1].mono)
        self.assertFalse(np.allclose(a.mixtures[0].mono, c.mixtures[0].mono))

    def test_partial_overlap(self):
        scene = generate_scene(SceneConfig(duration=0.5, rir_length=512, overlap_ratio=0.5), 2)
        self.assertTrue(np.all(scene.dry[0].mono[-100:] == 0.0))
        self.assertTrue(np.all(scene.dry[1].mono[:100] == 0.0))

    def test_noise(self):
        scene = generate_scene(SceneConfig(duration=0.5, rir_length=512, noise_snr_db=20.0), 8)
        self.assertIsNotNone(scene.noise)
        for m in range(2):
            clean = sum(w.mono for w in scene.images_at(m))
            noise = scene.mixtures[m].mono - clean
            np.testing.assert_allclose(noise, scene.noise[m].mono, atol=1e-12)
            snr = 10 * np.log10(np.mean(clean**2) / np.mean(noise**2))
            self.assertAlmostEqual(snr, 20.0, delta=1.0)

    def test_render_pads_short_sources(self):
        dry = [Waveform(np.ones(10), 8000), Waveform(np.ones(6), 8000)]
        rirs = [[Rir.identity(), Rir.identity()], [Rir.identity(), Rir.identity()]]
        scene = render_scene(dry, rirs)
        self.assertEqual(scene.length, 10)
        np.testing.assert_allclose(scene.mixtures[1].mono, [2.0] * 6 + [1.0] * 4, atol=1e-12)
        with self.assertRaises(DataException):
            render_scene([], rirs)
        with self.assertRaises(DataException):
            render_scene([Waveform(np.ones(4), 16000)], [[Rir.identity()]])

    def test_render_matches_direct_convolution(self):
        rng = np.random.default_rng(5)
        dry = [Waveform(rng.standard_normal(300), 8000), Waveform(rng.standard_normal(300), 8000)]
        rirs = [[synth_rir(RirParams(0.2, 3 + n + m, 64), seed=10 * n + m) for m in range(2)] for n in range(2)]
        scene = render_scene(dry, rirs)
        for n in range(2):
            for m in range(2):
                expected = np.convolve(dry[n].mono, rirs[n][m].taps)[:300]
                error = np.linalg.norm(scene.images[n][m].mono - expected) / np.linalg.norm(expected)
                self.assertLess(error, 1e-9)

    def test_scene_shape_checks(self):
        scene = generate_scene(SMALL, 1)
        with self.assertRaisesRegex(DataException, "images"):
            fields = dict(
                dry=scene.dry,
                rirs=scene.rirs,
                images=scene.images[:1],
                direct_path=scene.direct_path,
                early=scene.early,
                mixtures=scene.mixtures,
                seed=1,
            )
            type(scene)(**fields)

    def test_crop(self):
        scene = generate_scene(SMALL, 3)
        cropped = crop_scene(scene, 100, 50)
        self.assertEqual(cropped.length, 100)
        np.testing.assert_array_equal(cropped.mixtures[1].mono, scene.mixtures[1].mono[50:150])
        np.testing.assert_array_equal(cropped.early[0][1].mono, scene.early[0][1].mono[50:150])
        with self.assertRaises(DataException):
            crop_scene(scene, 100, scene.length - 50)
        self.assertIs(random_crop(scene, scene.length + 1, np.random.default_rng(0)), scene)
        self.assertEqual(random_crop(scene, 200, np.random.default_rng(0)).length, 200)


class TestWav(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def test_quantize(self):
        q = quantize_pcm16(np.array([0.0, 0.5 / 32768, -0.5 / 32768, 0.4 / 32768, -1.0, 1.0, 2.0]))
        np.testing.assert_array_equal(q, [0, 1, -1, 0, -32768, 32767, 32767])
        self.assertEqual(q.dtype, np.int16)

    def test_float32_and_pcm16(self):
        x = np.random.default_rng(0).uniform(-0.9, 0.9, (2, 500))
        w = Waveform(x, 8000)
        save_wav(self.path("f.wav"), w, WavFormat.Float32)
        save_wav(self.path("p.wav"), w, WavFormat.Pcm16)

        f = load_wav(self.path("f.wav"))
        self.assertEqual((f.channels, f.length, f.sample_rate), (2, 500, 8000))
        np.testing.assert_allclose(f.samples, x, atol=1e-7)

        p = load_wav(self.path("p.wav"))
        np.testing.assert_allclose(p.samples, x, atol=1.0 / 32768)
        self.assertEqual(inspect_wav(self.path("p.wav")).bits, 16)

        with self.assertRaises(ConfigException):
            save_wav(self.path("x.wav"), w, "mp3")
        with self.assertRaises(DataException):
            save_wav(self.path("x.wav"), Waveform(np.zeros((3, 10)), 8000))

    def test_malformed_files(self):
        with open(self.path("junk.wav"), "wb") as f:
            f.write(b"not a wav file at all")
        with self.assertRaisesRegex(WavFormatException, "RIFF"):
            load_wav(self.path("junk.wav"))

        fmt = struct.pack("<HHIIHH", 1, 1, 8000, 16000, 2, 16)
        blob = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
        with open(self.path("nodata.wav"), "wb") as f:
            f.write(b"RIFF" + struct.pack("<I", len(blob)) + blob)
        with self.assertRaisesRegex(WavFormatException, "'data'"):
            inspect_wav(self.path("nodata.wav"))

        soundfile.write(self.path("u8.wav"), np.zeros(100), 8000, subtype="PCM_U8", format="WAV")
        with self.assertRaisesRegex(WavFormatException, "unsupported codec"):
            load_wav(self.path("u8.wav"))

        with self.assertRaisesRegex(DataException, "does not exist"):
            load_wav(self.path("missing.wav"))


class TestManifest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def test_save_and_load(self):
        scene = generate_scene(SMALL, 21)
        entry = save_scene(scene, self.dir, "scene-0000")
        write_manifest(SceneManifest([entry], SMALL.to_dict(), 21), self.dir)

        manifest = ManifestLoader(self.dir).load()
        self.assertEqual(manifest.seed, 21)
        self.assertEqual(manifest.scenes[0], entry)
        self.assertEqual(SceneConfig.from_dict(manifest.scene_config), SMALL)

        (loaded,) = load_scenes(self.dir)
        self.assertEqual(loaded.seed, 21)
        self.assertEqual([r.delay_to_direct for r in loaded.rirs[1]], [r.delay_to_direct for r in scene.rirs[1]])
        np.testing.assert_allclose(loaded.mixtures[0].mono, scene.mixtures[0].mono, atol=1e-5)
        np.testing.assert_allclose(loaded.rirs[0][1].taps, scene.rirs[0][1].taps, atol=1e-6)
        self.assertEqual(loaded.params.rt60, scene.params.rt60)

    def test_reloaded_mixture_is_sum_of_components(self):
        noisy = SceneConfig(duration=0.25, rir_length=512, noise_snr_db=20.0)
        for name, scene in (("clean", generate_scene(SMALL, 23)), ("noisy", generate_scene(noisy, 24))):
            entry = save_scene(scene, self.dir, name)
            write_manifest(SceneManifest([entry]), self.dir)
            (loaded,) = load_scenes(self.dir)
            self.assertEqual(loaded.noise is None, scene.noise is None)
            for m in range(2):
                total = sum(w.mono for w in loaded.images_at(m))
                if loaded.noise is not None:
                    total = total + loaded.noise[m].mono
                np.testing.assert_allclose(loaded.mixtures[m].mono, total, rtol=0.0, atol=1e-12)
                np.testing.assert_allclose(loaded.mixtures[m].mono, scene.mixtures[m].mono, atol=1e-5)

    def test_missing_component_names_scene(self):
        entry = save_scene(generate_scene(SMALL, 22), self.dir, "scene-0007")
        write_manifest(SceneManifest([entry]), self.dir)
        os.remove(os.path.join(self.dir, "scene-0007", "early_1_0.wav"))
        with self.assertRaisesRegex(DataException, "scene-0007.*early_1_0"):
            load_scenes(self.dir)

    def test_invalid_manifests(self):
        write_manifest(SceneManifest([]), self.dir)
        with self.assertRaisesRegex(DataException, "no scenes"):
            load_scenes(self.dir)

        with open(os.path.join(self.dir, "bad.json"), "w") as f:
            f.write("{not json")
        with self.assertRaisesRegex(DataException, "not valid JSON"):
            ManifestLoader(os.path.join(self.dir, "bad.json")).load()

        with open(os.path.join(self.dir, "entry.json"), "w") as f:
            f.write('{"scenes": [{"name": "s"}]}')
        with self.assertRaisesRegex(DataException, "Invalid scene entry"):
            ManifestLoader(os.path.join(self.dir, "entry.json")).load()

        with self.assertRaisesRegex(DataException, "does not exist"):
            ManifestLoader(os.path.join(self.dir, "nothing.json")).load()


if __name__ == "__main__":
    unittest.main()
