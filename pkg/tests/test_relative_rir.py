import json
import unittest

import numpy as np
import scipy.signal

from eras.autograd import ComplexTensor, Tape, grad_check, ops
from eras.dsp import StftConfig, Waveform, stft
from eras.helpers.exceptions import ConfigException, DataException
from eras.relative_rir import (
    FcpConfig,
    FcpMapper,
    LambdaWeights,
    MappingException,
    MappingMethod,
    WienerConfig,
    WienerMapper,
    compute_lambda,
    create_mapper,
    cross_correlation,
    fcp_map,
    fcp_map_tensor,
    filters_to_json,
    gram_matrix,
    map_sources,
    normal_equations,
    solve_hermitian,
    stack_frames,
    tikhonov_eps,
    weighted_residual,
    wiener_map,
)
from eras.workers import WorkerPool


def _complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _dense_fcp(est, target, lam, k_past, k_future):
    """Per-frequency weighted least squares through lstsq on the explicit frame matrix."""
    T, F = est.shape
    K = k_past + 1 + k_future
    filters = np.zeros((F, K), dtype=complex)
    for f in range(F):
        P = np.zeros((T, K), dtype=complex)
        for t in range(T):
            for k in range(K):
                src = t - k_past + k
                if 0 <= src < T:
                    P[t, k] = est[src, f]
        w = np.sqrt(1.0 / lam[:, f])
        h, *_ = np.linalg.lstsq(w[:, None] * P, w * target[:, f], rcond=None)
        filters[f] = h.conj()
    return filters


def _dense_wiener(est, target, filter_length, anticausal):
    L = est.shape[0]
    M = np.zeros((L, filter_length))
    for j in range(filter_length):
        s = j - anticausal
        for l in range(L):
            if 0 <= l - s < L:
                M[l, j] = est[l - s]
    taps, *_ = np.linalg.lstsq(M, target, rcond=None)
    return taps, M


class TestSolver(unittest.TestCase):
    def test_matches_dense_solve(self):
        rng = np.random.default_rng(0)
        B = _complex(rng, (6, 5, 5))
        A = B @ np.conj(np.swapaxes(B, -1, -2)) + np.eye(5)
        b = _complex(rng, (6, 5))
        x = solve_hermitian(A, b, eps_rel=0.0)
        np.testing.assert_allclose(x, np.linalg.solve(A, b[..., None])[..., 0], rtol=1e-10)
        np.testing.assert_allclose(solve_hermitian(A[0], b[0], eps_rel=0.0), x[0])

    def test_pool_matches_sequential(self):
        rng = np.random.default_rng(1)
        B = rng.standard_normal((9, 4, 4))
        A = B @ np.swapaxes(B, -1, -2)
        b = rng.standard_normal((9, 4))
        np.testing.assert_array_equal(solve_hermitian(A, b), solve_hermitian(A, b, pool=WorkerPool(3)))

    def test_zero_system(self):
        x = solve_hermitian(np.zeros((2, 3, 3)), np.ones((2, 3)))
        np.testing.assert_array_equal(x, np.zeros((2, 3)))
        np.testing.assert_array_equal(tikhonov_eps(np.zeros((1, 3, 3)), 1e-10), [1.0])

    def test_eps_loading(self):
        A = np.diag([2.0, 4.0])
        self.assertAlmostEqual(float(tikhonov_eps(A, 1e-3)), 3e-3)

    def test_singular_falls_back_to_eigendecomposition(self):
        A = np.diag([2.0, 0.0])
        with self.assertLogs(level="WARNING"):
            x = solve_hermitian(A, np.array([4.0, 0.0]), eps_rel=0.0)
        np.testing.assert_allclose(x, [2.0, 0.0])

    def test_shape_errors(self):
        with self.assertRaises(ValueError):
            solve_hermitian(np.zeros((3, 3)), np.zeros(2))


class TestLambda(unittest.TestCase):
    def test_compute_lambda(self):
        a = np.array([[1.0, 2.0], [0.0, 0.0]])
        b = np.array([[3.0, 0.0], [0.0, 1.0]])
        lam = compute_lambda([a, b], floor_coeff=0.1)
        power = (np.abs(a) ** 2 + np.abs(b) ** 2) / 2
        np.testing.assert_allclose(lam.values, power + 0.1 * power.max())
        np.testing.assert_allclose(lam.inverse, 1.0 / lam.values)

    def test_degenerate(self):
        with self.assertRaisesRegex(DataException, "degenerate λ"):
            compute_lambda([np.zeros((3, 2)), np.zeros((3, 2))])
        with self.assertRaises(DataException):
            compute_lambda([])
        with self.assertRaises(DataException):
            compute_lambda([np.ones((3, 2)), np.ones((2, 2))])
        with self.assertRaises(DataException):
            LambdaWeights(np.array([[1.0, 0.0]]))
        with self.assertRaises(DataException):
            LambdaWeights(np.ones(3))


class TestFcp(unittest.TestCase):
    def test_config(self):
        self.assertEqual(FcpConfig().taps, 21)
        with self.assertRaises(ConfigException):
            FcpConfig(k_past=-1)
        with self.assertRaises(ConfigException):
            FcpConfig(lambda_floor_coeff=0.0)

    def test_stack_frames(self):
        bins = np.arange(12).reshape(4, 3).astype(complex)
        P = stack_frames(bins, 2, 1)
        self.assertEqual(P.shape, (3, 4, 4))
        self.assertEqual(P[1, 0, 2], bins[0, 1])
        self.assertEqual(P[1, 0, 0], 0)
        self.assertEqual(P[2, 3, 3], 0)
        self.assertEqual(P[2, 2, 3], bins[3, 2])

    def test_matches_dense_least_squares(self):
        rng = np.random.default_rng(10)
        for trial in range(50):
            T = int(rng.integers(40, 200))
            F = int(rng.integers(1, 4))
            k_past = int(rng.integers(0, 15))
            k_future = int(rng.integers(0, 21 - k_past))
            cfg = FcpConfig(k_past=k_past, k_future=k_future, regularizer_eps=0.0)
            est, target = _complex(rng, (T, F)), _complex(rng, (T, F))
            lam = LambdaWeights(rng.uniform(0.5, 2.0, size=(T, F)))

            result = fcp_map(est, target, lam, cfg)
            expected = _dense_fcp(est, target, lam.values, k_past, k_future)
            scale = np.linalg.norm(expected)
            self.assertLess(np.linalg.norm(result.filters - expected) / scale, 1e-8, f"trial {trial}")

    def test_filters_minimize_weighted_residual(self):
        rng = np.random.default_rng(11)
        est, target = _complex(rng, (60, 4)), _complex(rng, (60, 4))
        lam = LambdaWeights(rng.uniform(0.5, 2.0, size=(60, 4)))
        cfg = FcpConfig(k_past=3, k_future=1, regularizer_eps=0.0)
        filters = fcp_map(est, target, lam, cfg).filters
        best = weighted_residual(est, target, lam, filters, cfg)
        for k in range(cfg.taps):
            for delta in (1e-4, -1e-4, 1e-4j, -1e-4j):
                perturbed = np.array(filters)
                perturbed[:, k] += delta
                residual = weighted_residual(est, target, lam, perturbed, cfg)
                self.assertTrue(np.all(residual >= best - 1e-12 * best), f"tap {k}, delta {delta}")

    def test_target_delayed_by_one_frame(self):
        rng = np.random.default_rng(15)
        est = _complex(rng, (80, 5))
        target = np.zeros_like(est)
        target[1:] = est[:-1]
        lam = LambdaWeights(rng.uniform(0.5, 2.0, size=(80, 5)))
        result = fcp_map(est, target, lam, FcpConfig(k_past=1, k_future=0))
        self.assertLess(np.linalg.norm(result.mapped - target) / np.linalg.norm(target), 1e-8)
        np.testing.assert_allclose(result.filters[:, 0], 1.0, atol=1e-6)

    def test_normal_equations_are_hermitian(self):
        rng = np.random.default_rng(12)
        est = _complex(rng, (30, 2))
        lam = LambdaWeights(np.ones((30, 2)))
        A, b, P = normal_equations(est, _complex(rng, (30, 2)), lam, FcpConfig(k_past=2, k_future=1))
        self.assertEqual(A.shape, (2, 4, 4))
        self.assertEqual(b.shape, (2, 4))
        self.assertEqual(P.shape, (2, 30, 4))
        np.testing.assert_allclose(A, np.conj(np.swapaxes(A, -1, -2)))

    def test_identity_mapping(self):
        rng = np.random.default_rng(13)
        est = _complex(rng, (50, 3))
        lam = LambdaWeights(np.abs(est) ** 2 + 0.1)
        result = fcp_map(est, est, lam, FcpConfig(k_past=4, k_future=1))
        np.testing.assert_allclose(result.mapped, est, atol=1e-6)
        np.testing.assert_allclose(result.filters[:, 4], 1.0, atol=1e-6)

    def test_spectrogram_inputs_and_errors(self):
        rng = np.random.default_rng(14)
        x = stft(rng.standard_normal(3000))
        y = stft(rng.standard_normal(3000))
        lam = compute_lambda([x, y])
        mapped = fcp_map(x, y, lam).mapped
        self.assertEqual(mapped.shape, x.shape)
        self.assertEqual(mapped.original_length, 3000)

        with self.assertRaises(MappingException):
            fcp_map(x.bins[:-1], y.bins, lam)
        bad = np.array(x.bins)
        bad[0, 0] = np.nan
        with self.assertRaises(MappingException):
            fcp_map(bad, y.bins, lam)

    def test_filters_to_json(self):
        filters = np.array([[1 + 2j, 0.5j]])
        payload = json.loads(filters_to_json(filters, FcpConfig(k_past=1, k_future=0), "L->R"))
        self.assertEqual(payload["label"], "L->R")
        self.assertEqual(payload["freqs"], 1)
        self.assertEqual(payload["real"], [[1.0, 0.0]])
        self.assertEqual(payload["imag"], [[2.0, 0.5]])


class TestFcpTensor(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(20)
        self.T, self.F = 12, 2
        self.est = _complex(rng, (self.T, self.F))
        self.target = _complex(rng, (self.T, self.F))
        self.lam = LambdaWeights(rng.uniform(0.5, 2.0, size=(self.T, self.F)))
        self.w_re = rng.standard_normal((self.T, self.F))
        self.w_im = rng.standard_normal((self.T, self.F))

    def _unpack(self, t):
        n = self.T * self.F
        re = ops.reshape(ops.getitem(t, slice(0, n)), (self.T, self.F))
        im = ops.reshape(ops.getitem(t, slice(n, 2 * n)), (self.T, self.F))
        return ComplexTensor(re, im)

    def _packed(self):
        return np.concatenate([self.est.real.ravel(), self.est.imag.ravel()])

    def _probe(self, mapped: ComplexTensor):
        return ops.add(ops.sum(ops.scale(mapped.re, self.w_re)), ops.sum(ops.scale(mapped.im, self.w_im)))

    def test_matches_numpy(self):
        cfg = FcpConfig(k_past=3, k_future=1)
        mapped = fcp_map_tensor(self.est, self.target, self.lam, cfg).numpy()
        expected = fcp_map(self.est, self.target, self.lam, cfg).mapped
        np.testing.assert_allclose(mapped, expected, rtol=1e-8, atol=1e-10)

    def test_gradient_through_filters(self):
        cfg = FcpConfig(k_past=1, k_future=0)
        target = ComplexTensor.from_array(self.target)

        def f(t):
            return self._probe(fcp_map_tensor(self._unpack(t), target, self.lam, cfg))

        self.assertLess(grad_check(f, self._packed()), 1e-4)

    def test_gradient_with_detached_filters(self):
        cfg = FcpConfig(k_past=1, k_future=0, detach_fcp_filters=True)
        filters = fcp_map(self.est, self.target, self.lam, cfg).filters

        with Tape() as tape:
            x = tape.watch(self._packed())
            y = self._probe(fcp_map_tensor(self._unpack(x), ComplexTensor.from_array(self.target), self.lam, cfg))
        (analytic,) = tape.gradient(y, [x])

        def fixed_filter_probe(packed):
            n = self.T * self.F
            est = (packed[:n] + 1j * packed[n:]).reshape(self.T, self.F)
            mapped = np.einsum("ftk,fk->tf", stack_frames(est, 1, 0), filters.conj())
            return float(np.sum(mapped.real * self.w_re) + np.sum(mapped.imag * self.w_im))

        base, h = self._packed(), 1e-6
        numeric = np.zeros_like(base)
        for i in range(base.size):
            e = np.zeros_like(base)
            e[i] = h
            numeric[i] = (fixed_filter_probe(base + e) - fixed_filter_probe(base - e)) / (2 * h)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-8)

    def test_shape_mismatch(self):
        with self.assertRaises(MappingException):
            fcp_map_tensor(self.est[:-1], self.target, self.lam)


class TestWiener(unittest.TestCase):
    def test_config(self):
        with self.assertRaises(ConfigException):
            WienerConfig(filter_length=0)
        with self.assertRaises(ConfigException):
            WienerConfig(filter_length=4, anticausal_taps=4)
        np.testing.assert_array_equal(WienerConfig(4, 1).shifts(), [-1, 0, 1, 2])

    def test_gram_and_correlation_match_explicit_matrix(self):
        rng = np.random.default_rng(30)
        est, target = rng.standard_normal(120), rng.standard_normal(120)
        for cfg in (WienerConfig(32, 0), WienerConfig(32, 7), WienerConfig(130, 3)):
            _, M = _dense_wiener(est, target, cfg.filter_length, cfg.anticausal_taps)
            np.testing.assert_allclose(gram_matrix(est, cfg), M.T @ M, atol=1e-9)
            np.testing.assert_allclose(cross_correlation(est, target, cfg), M.T @ target, atol=1e-9)

    def test_matches_dense_least_squares(self):
        rng = np.random.default_rng(31)
        for trial in range(50):
            L = int(rng.integers(200, 400))
            n = int(rng.integers(1, 65))
            anticausal = int(rng.integers(0, n))
            est, target = rng.standard_normal(L), rng.standard_normal(L)
            result = wiener_map(est, target, WienerConfig(n, anticausal, regularizer_eps=0.0))
            expected, M = _dense_wiener(est, target, n, anticausal)
            self.assertLess(np.linalg.norm(result.filter - expected) / np.linalg.norm(expected), 1e-8, f"trial {trial}")
            np.testing.assert_allclose(result.mapped, M @ result.filter, atol=1e-9)

    def test_delayed_and_scaled_target(self):
        est = np.random.default_rng(32).standard_normal(2000)
        target = np.zeros_like(est)
        target[3:] = 2.0 * est[:-3]
        result = wiener_map(Waveform(est, 8000), Waveform(target, 8000))
        self.assertEqual(int(np.argmax(np.abs(result.filter))), 3)
        self.assertAlmostEqual(float(result.filter[3]), 2.0, places=6)
        np.testing.assert_allclose(result.mapped.mono, target, atol=1e-6)

    def test_shift_covariance(self):
        rng = np.random.default_rng(33)

        def relative_residual(est, target, cfg):
            mapped = wiener_map(est, target, cfg).mapped
            return float(np.sum((target - mapped) ** 2) / np.sum(target**2))

        def delayed(x, d):
            return np.concatenate((np.zeros(d), x[: x.shape[0] - d]))

        est = np.zeros(600)
        est[:500] = rng.standard_normal(500)
        in_span = scipy.signal.lfilter([0.7, -0.2, 0.1], [1.0], est)
        noisy = np.zeros(600)
        noisy[:500] = rng.standard_normal(500)
        base_span = relative_residual(est, in_span, WienerConfig(3))
        base_noisy = relative_residual(est, noisy, WienerConfig(16))
        self.assertLess(base_span, 1e-9)
        for d in (1, 3):
            shifted = relative_residual(est, delayed(in_span, d), WienerConfig(3 + d))
            self.assertAlmostEqual(shifted, base_span, delta=1e-9)
            both = relative_residual(delayed(est, d), delayed(noisy, d), WienerConfig(16))
            self.assertAlmostEqual(both, base_noisy, delta=1e-9)

    def test_silence(self):
        with self.assertRaisesRegex(MappingException, "cannot filter silence"):
            wiener_map(np.zeros(100), np.ones(100))
        result = wiener_map(np.zeros(100), np.zeros(100))
        np.testing.assert_array_equal(result.mapped, np.zeros(100))

    def test_mismatched_inputs(self):
        with self.assertRaises(MappingException):
            wiener_map(np.ones(10), np.ones(11))
        with self.assertRaises(MappingException):
            wiener_map(Waveform(np.ones(10), 8000), Waveform(np.ones(10), 16000))


class TestMappers(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(40)
        self.mixtures = [Waveform(rng.standard_normal(2000), 8000) for _ in range(2)]

    def test_factory(self):
        self.assertIsInstance(create_mapper(MappingMethod.Fcp, self.mixtures), FcpMapper)
        self.assertIsInstance(create_mapper(MappingMethod.Wiener), WienerMapper)
        with self.assertRaises(ConfigException):
            create_mapper("least squares", self.mixtures)
        with self.assertRaises(MappingException):
            create_mapper(MappingMethod.Fcp, [])

    def test_map_sources(self):
        for method in MappingMethod.get_methods():
            mapped = map_sources(self.mixtures, self.mixtures, 1, method)
            self.assertEqual(len(mapped), 2)
            for w in mapped:
                self.assertEqual(w.length, 2000)
            # a channel mapped onto itself is reproduced
            error = np.linalg.norm(mapped[1].mono - self.mixtures[1].mono) / np.linalg.norm(self.mixtures[1].mono)
            self.assertLess(error, 1e-4)
        with self.assertRaises(MappingException):
            map_sources(self.mixtures, self.mixtures, 2, MappingMethod.Fcp)

    def test_fcp_mapper_keeps_filters(self):
        mapper = create_mapper(MappingMethod.Fcp, self.mixtures, stft_config=StftConfig())
        self.assertIsNone(mapper.last_filters)
        mapper.map(self.mixtures[0], self.mixtures[1])
        self.assertEqual(mapper.last_filters.shape, (129, 21))


if __name__ == "__main__":
    unittest.main()
