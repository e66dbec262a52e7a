import itertools
import json
import os
import tempfile
import unittest

import numpy as np
import scipy.signal

from eras.dsp import Waveform
from eras.helpers.exceptions import DataException
from eras.metrics import (
    DB_CAP,
    ISMS_ROWS,
    ORACLE_ROWS,
    Check,
    EvalResult,
    aligned_eval,
    best_permutation,
    energy_ratio_db,
    eval_rows,
    format_eval_report,
    format_isms_table,
    format_oracle_table,
    format_table,
    frequency_permuted,
    isms_table,
    oracle_table,
    sdr_filtered,
    si_snr,
    si_snr_improvement,
    write_csv,
    write_json,
)
from eras.mixsim import SceneConfig, generate_scene
from eras.relative_rir import MappingMethod
from eras.workers import WorkerPool

SCENES = SceneConfig(duration=0.5, rir_length=512)


class TestSiSnr(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(0)
        self.ref = rng.standard_normal(2000)
        self.noise = rng.standard_normal(2000)

    def test_scale_invariant(self):
        est = self.ref + 0.1 * self.noise
        base = si_snr(self.ref, est)
        for scale in (0.01, 3.0, 1e4):
            self.assertAlmostEqual(si_snr(self.ref, scale * est), base, places=9)
            self.assertAlmostEqual(si_snr(scale * self.ref, est), base, places=9)

    def test_value(self):
        est = self.ref + 0.1 * self.noise
        target = np.dot(est, self.ref) / np.dot(self.ref, self.ref) * self.ref
        residual = est - target
        expected = 10 * np.log10(np.dot(target, target) / np.dot(residual, residual))
        self.assertAlmostEqual(si_snr(self.ref, est), expected, places=9)
        self.assertAlmostEqual(si_snr(Waveform(self.ref, 8000), Waveform(est, 8000)), expected, places=9)

    def test_capped(self):
        self.assertEqual(si_snr(self.ref, self.ref), DB_CAP)
        self.assertEqual(energy_ratio_db(np.zeros(4), np.ones(4)), -DB_CAP)
        self.assertEqual(energy_ratio_db(1e-40 * np.ones(4), np.ones(4)), -DB_CAP)

    def test_invalid_pairs(self):
        with self.assertRaisesRegex(DataException, "zero reference"):
            si_snr(np.zeros(10), np.ones(10))
        with self.assertRaises(DataException):
            si_snr(np.ones(10), np.ones(11))
        with self.assertRaises(DataException):
            sdr_filtered(np.ones((2, 10)), np.ones((2, 10)))

    def test_single_tap_sdr_matches_si_snr(self):
        est = 0.5 * self.ref + 0.2 * self.noise
        self.assertAlmostEqual(sdr_filtered(self.ref, est, taps=1), si_snr(self.ref, est), places=6)

    def test_sdr_allows_short_filter(self):
        distorted = scipy.signal.lfilter([0.7, 0.2, -0.1], [1.0], self.ref)
        est = distorted + 1e-3 * self.noise
        self.assertGreater(sdr_filtered(self.ref, est, taps=8), 40.0)
        self.assertLess(si_snr(self.ref, est), sdr_filtered(self.ref, est, taps=8))

    def test_improvement(self):
        mixture = self.ref + self.noise
        est = self.ref + 0.1 * self.noise
        self.assertAlmostEqual(
            si_snr_improvement(self.ref, est, mixture), si_snr(self.ref, est) - si_snr(self.ref, mixture)
        )
        self.assertGreater(si_snr_improvement(self.ref, est, mixture), 15.0)


class TestPermutation(unittest.TestCase):
    def test_against_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(2, 5))
            scores = rng.standard_normal((n, n))
            chosen = best_permutation(scores)
            best = max(sum(scores[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))
            self.assertAlmostEqual(sum(scores[i, chosen[i]] for i in range(n)), best)

    def test_tie_keeps_identity(self):
        self.assertEqual(best_permutation(np.zeros((2, 2))), (0, 1))
        self.assertEqual(best_permutation(np.array([[0.0, 5.0], [5.0, 0.0]])), (1, 0))


class TestAlignedEval(unittest.TestCase):
    def test_oracle_images_score_high(self):
        scene = generate_scene(SCENES, 5)
        refs = scene.images_at(0)
        result = aligned_eval(refs, list(reversed(refs)), scene.mixtures)
        self.assertEqual(result.permutation, (1, 0))
        for value in result.si_snr:
            self.assertGreater(value, 20.0)
        self.assertEqual(len(result.si_snr_matrix), 2)
        d = result.to_dict()
        self.assertEqual(d["permutation"], [1, 0])
        self.assertAlmostEqual(d["mean_sdr"], float(np.mean(result.sdr)))

    def test_mixture_scores_lower_than_images(self):
        scene = generate_scene(SCENES, 6)
        refs = scene.images_at(0)
        oracle = aligned_eval(refs, refs, scene.mixtures)
        mixed = aligned_eval(refs, [scene.mixtures[0], scene.mixtures[0]], scene.mixtures)
        self.assertGreater(oracle.mean_si_snr, mixed.mean_si_snr)

    def test_improvement_over_reference_mixture(self):
        scene = generate_scene(SCENES, 8)
        refs = scene.images_at(0)
        result = aligned_eval(refs, refs, scene.mixtures)
        for i in range(2):
            expected = result.si_snr[i] - si_snr(refs[i], scene.mixtures[0])
            self.assertAlmostEqual(result.si_snri[i], expected, places=9)
            self.assertGreater(result.si_snri[i], 0.0)
        self.assertAlmostEqual(result.to_dict()["mean_si_snri"], float(np.mean(result.si_snri)))

        other = aligned_eval(scene.images_at(1), scene.images_at(1), scene.mixtures, reference_channel=1)
        self.assertAlmostEqual(other.si_snri[0], other.si_snr[0] - si_snr(scene.images[0][1], scene.mixtures[1]), places=9)

    def test_two_sources_only(self):
        scene = generate_scene(SCENES, 7)
        with self.assertRaises(DataException):
            aligned_eval(scene.images_at(0), scene.images_at(0) * 2, scene.mixtures)


class TestTables(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.scenes = [generate_scene(SCENES, seed) for seed in (0, 1)]

    def test_isms_table(self):
        table = isms_table(self.scenes, seed=3, pool=WorkerPool(2))
        self.assertEqual(set(table.values), set(ISMS_ROWS))
        self.assertAlmostEqual(table.values[ISMS_ROWS[0]], 1.0, places=6)
        self.assertAlmostEqual(table.values[ISMS_ROWS[1]], 0.5, places=6)
        self.assertAlmostEqual(table.values[ISMS_ROWS[2]], 0.0, places=6)
        self.assertGreater(table.values[ISMS_ROWS[3]], 0.0)
        for check in table.checks[:3]:
            self.assertTrue(check.passed, check)
        self.assertEqual([s["seed"] for s in table.per_scene], [0, 1])

        text = format_isms_table(table)
        self.assertIn("Oracle ISMS loss value, mean over 2 scene(s)", text)
        self.assertIn("PASS  Mixture, mixture = 1.00", text)

    def test_isms_table_deterministic(self):
        a = isms_table(self.scenes, seed=3)
        b = isms_table(self.scenes, seed=3, pool=WorkerPool(2))
        self.assertEqual(a.values, b.values)

    def test_oracle_table(self):
        methods = (MappingMethod.Wiener, MappingMethod.Fcp)
        table = oracle_table(self.scenes, methods, pool=WorkerPool(2))
        self.assertEqual(table.methods, methods)
        for method in methods:
            self.assertEqual(set(table.values[method]), set(ORACLE_ROWS))
            for value in table.values[method].values():
                self.assertTrue(np.isfinite(value))
                self.assertLessEqual(value, DB_CAP)
        self.assertEqual(len(table.per_scene), 2)
        self.assertEqual(len(table.checks), 5)

        text = format_oracle_table(table)
        self.assertIn("mean over 2 scene(s) and both directions", text)
        self.assertIn("FCP", text.splitlines()[1])
        self.assertTrue(text.rstrip().endswith("capped at ±60 dB."))

    def test_invalid_inputs(self):
        with self.assertRaises(DataException):
            oracle_table([])
        with self.assertRaises(DataException):
            oracle_table(self.scenes, ["kalman"])
        with self.assertRaises(DataException):
            isms_table([])

    def test_frequency_permuted(self):
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal((4, 9)), rng.standard_normal((4, 9))
        a2, b2 = frequency_permuted(a, b, np.random.default_rng(2))
        swapped = [f for f in range(9) if np.array_equal(a2[:, f], b[:, f])]
        self.assertEqual(len(swapped), 4)
        np.testing.assert_array_equal(a2 + b2, a + b)


class TestReports(unittest.TestCase):
    def test_format_table(self):
        text = format_table(
            "Title",
            ["Name", "Value"],
            [["a", 1.234], ["longer name", 10.0]],
            [Check("ok", True), Check("bad", False, "why")],
            footer="foot",
        )
        lines = text.splitlines()
        self.assertEqual(lines[0], "Title")
        self.assertEqual(lines[1], "Name         Value")
        self.assertEqual(lines[2], "-" * 18)
        self.assertEqual(lines[3], "a             1.23")
        self.assertEqual(lines[4], "longer name  10.00")
        self.assertEqual(lines[6:], ["PASS  ok", "FAIL  bad (why)", "", "foot"])

    def test_eval_report(self):
        results = [
            ("s0", EvalResult([10.0, 12.0], [4.0, 6.0], [11.0, 13.0], (0, 1), [[10.0, 0.0], [0.0, 12.0]])),
            ("s1", EvalResult([6.0, 8.0], [2.0, 4.0], [7.0, 9.0], (1, 0), [[0.0, 6.0], [8.0, 0.0]])),
        ]
        header, rows = eval_rows(results)
        self.assertEqual(header[0], "Scene")
        self.assertEqual(header[3:5], ["SI-SNRi 1", "SI-SNRi 2"])
        self.assertEqual(rows[0][1:7], [10.0, 12.0, 4.0, 6.0, 11.0, 13.0])
        self.assertEqual(rows[1][-1], "21")
        text = format_eval_report(results)
        mean = [line for line in text.splitlines() if line.startswith("Mean")][0]
        self.assertIn("9.00", mean)
        self.assertIn("4.00", mean)
        self.assertIn("10.00", mean)

    def test_writers(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_csv(os.path.join(tmp, "a", "t.csv"), ["x", "y"], [[1, 2.5]])
            write_json(os.path.join(tmp, "b", "t.json"), {"b": 1, "a": [1, 2]})
            with open(os.path.join(tmp, "a", "t.csv")) as f:
                self.assertEqual(f.read().splitlines(), ["x,y", "1,2.5"])
            with open(os.path.join(tmp, "b", "t.json")) as f:
                self.assertEqual(json.load(f), {"a": [1, 2], "b": 1})


if __name__ == "__main__":
    unittest.main()
