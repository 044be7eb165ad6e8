import math
import unittest
from concurrent.futures import ThreadPoolExecutor
from unittest.mock import patch

import numpy as np

from wavemask.errors import EnumerationCapError
from wavemask.optics import MaskSpec, SeidelCoefficients, make_pupil, seidel_phase_1d, sample_mask, apply_mask
from wavemask.transfer import Mtf, MtfEnsemble, mtf, mtf_batch, diffraction_limit, uniform_mtf_sample, \
    uniform_mtf_samples, binary_mtf_sample, masked_mtf_samples, coupling_vector, binary_mtf_law, \
    binary_mtf_expectation_exact, binary_mtf_expectation_pairwise, binary_mtf_expectation_lower_bound, \
    binary_mtf_second_moment, monte_carlo_mtf


def sphere_pupil(n: int, strength: float):
    return make_pupil(n, seidel_phase_1d(SeidelCoefficients(sphere=strength), n))


def random_pupil(n: int, seed: int):
    phase = np.zeros(n)
    phase[:n // 2] = np.random.default_rng(seed).uniform(-np.pi, np.pi, n // 2)
    return make_pupil(n, phase)


def brute_force_mtf(field: np.ndarray) -> np.ndarray:
    n = field.size
    r = np.array([sum(field[m] * np.conj(field[(m - k) % n]) for m in range(n)) for k in range(n)])
    return np.abs(r) / np.abs(r[0])


class MtfTest(unittest.TestCase):
    def test_zero_aberration(self):
        expected = [1.0, 0.75, 0.5, 0.25, 0.0, 0.25, 0.5, 0.75]
        np.testing.assert_allclose(mtf(make_pupil(8)).values, expected, atol=1e-12)
        np.testing.assert_allclose(mtf(make_pupil(8), method='direct').values, expected, atol=1e-12)

    def test_constant_phase(self):
        np.testing.assert_allclose(mtf(make_pupil(8, np.full(8, 1.7))).values,
                                   mtf(make_pupil(8)).values, atol=1e-12)

    def test_methods_agree(self):
        pupil = sphere_pupil(8, 3.0)
        np.testing.assert_allclose(mtf(pupil).values, mtf(pupil, method='direct').values, atol=1e-10)
        np.testing.assert_allclose(mtf(pupil).values, brute_force_mtf(pupil.field), atol=1e-10)

    def test_unit_at_zero_and_symmetric(self):
        values = mtf(random_pupil(64, 5)).values
        self.assertAlmostEqual(1.0, values[0], places=12)
        np.testing.assert_allclose(values[1:], values[:0:-1], atol=1e-12)
        self.assertTrue(np.all(values >= 0.0) and np.all(values <= 1.0 + 1e-12))

    def test_zero_at_support_edge(self):
        self.assertAlmostEqual(0.0, mtf(random_pupil(16, 6))[8], places=12)

    def test_invalid_method(self):
        with self.assertRaises(ValueError):
            mtf(make_pupil(8), method='dft')

    def test_raw_values(self):
        self.assertEqual([1.0 + 1e-9, 0.5], Mtf([1.0 + 1e-9, 0.5]).values.tolist())

    def test_overshoot_is_not_hidden(self):
        r = np.array([2.0, 3.0, 1.0, 3.0])
        with patch('wavemask.transfer._autocorrelation_fft', return_value=r):
            self.assertEqual([1.0, 1.5, 0.5, 1.5], mtf(make_pupil(4)).values.tolist())
        with patch('wavemask.transfer._autocorrelation_fft', return_value=r[np.newaxis, :]):
            self.assertEqual([[1.0, 1.5, 0.5, 1.5]], mtf_batch(np.ones(4), np.zeros((1, 4))).tolist())

    def test_batch_matches_single(self):
        rng = np.random.default_rng(9)
        pupil = make_pupil(16)
        phases = rng.uniform(0, 2 * np.pi, (4, 16))
        batch = mtf_batch(pupil.amplitude, phases)
        for k in range(4):
            np.testing.assert_allclose(batch[k], mtf(make_pupil(16, phases[k])).values, atol=1e-12)


class DiffractionLimitTest(unittest.TestCase):
    def test_values(self):
        np.testing.assert_allclose(diffraction_limit(8).values, [1.0, 0.75, 0.5, 0.25, 0.0, 0.25, 0.5, 0.75])
        np.testing.assert_allclose(diffraction_limit(4).values, [1.0, 0.5, 0.0, 0.5])

    def test_bound_holds_for_random_profiles(self):
        n = 64
        rng = np.random.default_rng(10)
        phases = np.zeros((1000, n))
        phases[:, :n // 2] = rng.uniform(-10, 10, (1000, n // 2))
        values = mtf_batch(make_pupil(n).amplitude, phases)
        self.assertTrue(np.all(values <= diffraction_limit(n).values + 1e-12))

    def test_equality_for_zero_aberration(self):
        np.testing.assert_allclose(mtf(make_pupil(32)).values, diffraction_limit(32).values, atol=1e-12)


class UniformMaskTest(unittest.TestCase):
    def test_matches_masked_pupil(self):
        n = 16
        sample = uniform_mtf_sample(n, np.random.default_rng(21))
        mask = sample_mask(MaskSpec.uniform(), n, np.random.default_rng(21))
        np.testing.assert_allclose(sample.values, mtf(apply_mask(make_pupil(n), mask)).values, atol=1e-10)

    def test_last_frequency_is_deterministic(self):
        for seed in range(5):
            values = uniform_mtf_sample(16, np.random.default_rng(seed)).values
            self.assertAlmostEqual(1.0, values[0], places=12)
            self.assertAlmostEqual(1.0 / 8.0, values[7], places=12)
            self.assertAlmostEqual(1.0 / 8.0, values[9], places=12)

    def test_samples_shape(self):
        self.assertEqual((7, 16), uniform_mtf_samples(16, 7, np.random.default_rng(0)).shape)

    def test_aberration_invariance(self):
        n = 64
        k = 2000
        pupil = sphere_pupil(n, 5.0)
        aberrated = masked_mtf_samples(pupil, MaskSpec.uniform(), k, np.random.default_rng(31))
        clean = masked_mtf_samples(make_pupil(n), MaskSpec.uniform(), k, np.random.default_rng(32))
        stderr = np.sqrt(np.var(aberrated, axis=0, ddof=1) / k + np.var(clean, axis=0, ddof=1) / k)
        head = slice(1, n // 2 - 1)
        z = np.abs(np.mean(aberrated, axis=0)[head] - np.mean(clean, axis=0)[head]) / stderr[head]
        self.assertLess(np.max(z), 4.5)


class BinaryMaskTest(unittest.TestCase):
    def test_p_zero_is_unmasked(self):
        pupil = sphere_pupil(16, 2.0)
        sample = binary_mtf_sample(pupil, 0.0, np.random.default_rng(1))
        np.testing.assert_allclose(sample.values, mtf(pupil).values, atol=1e-12)

    def test_p_one_with_zero_aberration(self):
        sample = binary_mtf_sample(make_pupil(8), 1.0, np.random.default_rng(1))
        np.testing.assert_allclose(sample.values, mtf(make_pupil(8)).values, atol=1e-12)

    def test_last_support_frequency(self):
        pupil = sphere_pupil(8, 3.0)
        for seed in range(5):
            self.assertAlmostEqual(0.25, binary_mtf_sample(pupil, 0.5, np.random.default_rng(seed))[3], places=12)


class CouplingVectorTest(unittest.TestCase):
    def test_zero_aberration(self):
        vector = coupling_vector(make_pupil(16), 2)
        self.assertEqual(6, vector.support)
        self.assertEqual(15, vector.pair_count)
        np.testing.assert_allclose(vector.entries, np.ones(15))
        self.assertEqual((2, 3), vector.pairs[0])

    def test_last_frequency_is_empty(self):
        self.assertEqual(0, len(coupling_vector(random_pupil(16, 1), 7)))

    def test_linear_phase(self):
        vector = coupling_vector(make_pupil(8, np.arange(8.0)), 1)
        np.testing.assert_allclose(vector.entries, np.ones(3), atol=1e-12)

    def test_entries_in_unit_interval(self):
        entries = coupling_vector(random_pupil(32, 2), 3).entries
        self.assertTrue(np.all(entries >= 0.0) and np.all(entries <= 1.0))

    def test_out_of_range(self):
        with self.assertRaises(ValueError):
            coupling_vector(make_pupil(8), 0)
        with self.assertRaises(ValueError):
            coupling_vector(make_pupil(8), 4)


class BinaryExpectationTest(unittest.TestCase):
    def test_zero_aberration_values(self):
        pupil = make_pupil(8)
        self.assertAlmostEqual(0.375, binary_mtf_expectation_exact(pupil, 1), places=12)
        self.assertAlmostEqual(0.25, binary_mtf_expectation_exact(pupil, 2), places=12)
        self.assertAlmostEqual(0.25, binary_mtf_expectation_exact(pupil, 3), places=12)
        self.assertEqual(1.0, binary_mtf_expectation_exact(pupil, 0))

    def test_last_frequency_for_any_aberration(self):
        for seed in range(5):
            self.assertAlmostEqual(0.125, binary_mtf_expectation_exact(random_pupil(16, seed), 7), places=12)

    def test_law(self):
        pupil = random_pupil(16, 3)
        values, clipped = binary_mtf_law(pupil, 4)
        self.assertEqual(16, values.size)
        self.assertTrue(np.all(values >= 0.0))
        self.assertAlmostEqual(binary_mtf_expectation_exact(pupil, 4), float(np.mean(values)), places=14)

    def test_law_matches_monte_carlo(self):
        pupil = sphere_pupil(8, 3.0)
        draws = masked_mtf_samples(pupil, MaskSpec.bernoulli(0.5), 100000, np.random.default_rng(4))
        for n in (1, 2):
            exact = binary_mtf_expectation_exact(pupil, n)
            stderr = np.std(draws[:, n], ddof=1) / math.sqrt(draws.shape[0])
            self.assertLess(abs(np.mean(draws[:, n]) - exact), 4.0 * stderr + 1e-12)

    def test_cap(self):
        with self.assertRaises(EnumerationCapError) as cm:
            binary_mtf_expectation_exact(make_pupil(16), 1, cap=2)
        self.assertIsInstance(cm.exception, ValueError)

    def test_pairwise_matches_exact_for_two_terms(self):
        pupil = random_pupil(8, 8)
        value, _ = binary_mtf_expectation_pairwise(pupil, 2)
        self.assertAlmostEqual(binary_mtf_expectation_exact(pupil, 2), value, places=12)

    def test_pairwise_clips(self):
        value, clipped = binary_mtf_expectation_pairwise(make_pupil(8), 1)
        self.assertGreater(clipped, 0)
        self.assertGreaterEqual(value, 0.0)


class LowerBoundTest(unittest.TestCase):
    def test_values(self):
        self.assertEqual(1.0, binary_mtf_expectation_lower_bound(8, 0))
        self.assertAlmostEqual(0.375, binary_mtf_expectation_lower_bound(8, 1), places=12)
        self.assertAlmostEqual(0.25, binary_mtf_expectation_lower_bound(8, 2), places=12)
        self.assertAlmostEqual(0.25, binary_mtf_expectation_lower_bound(8, 3), places=12)

    def test_bounds_exact_expectation(self):
        for seed in range(100):
            pupil = random_pupil(8, seed)
            for n in (1, 2, 3):
                self.assertLessEqual(binary_mtf_expectation_lower_bound(8, n),
                                     binary_mtf_expectation_exact(pupil, n) + 1e-12)

    def test_out_of_range(self):
        with self.assertRaises(ValueError):
            binary_mtf_expectation_lower_bound(8, 4)


class SecondMomentTest(unittest.TestCase):
    def test_zero_frequency(self):
        self.assertEqual(1.0, binary_mtf_second_moment(random_pupil(16, 1), 0, 0.3))

    def test_unmasked_equals_squared_mtf(self):
        for n_period in (8, 16):
            pupil = random_pupil(n_period, 12)
            values = mtf(pupil).values
            for n in range(1, n_period // 2):
                self.assertAlmostEqual(values[n] ** 2, binary_mtf_second_moment(pupil, n, 0.0), places=10)

    def test_fair_mask(self):
        pupil = random_pupil(16, 13)
        for n in range(1, 8):
            self.assertAlmostEqual((8 - n) / 64.0, binary_mtf_second_moment(pupil, n, 0.5), places=12)

    def test_linear_variant(self):
        self.assertAlmostEqual(3.0 / 4.0, binary_mtf_second_moment(make_pupil(8), 1, 0.5, variant='linear'),
                               places=12)

    def test_matches_monte_carlo(self):
        pupil = random_pupil(8, 14)
        k = 100000
        draws = masked_mtf_samples(pupil, MaskSpec.bernoulli(0.25), k, np.random.default_rng(15)) ** 2
        for n in (1, 2, 3):
            stderr = np.std(draws[:, n], ddof=1) / math.sqrt(k)
            self.assertLess(abs(np.mean(draws[:, n]) - binary_mtf_second_moment(pupil, n, 0.25)),
                            4.0 * stderr + 1e-12)

    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            binary_mtf_second_moment(make_pupil(8), 1, 0.5, variant='lemma')
        with self.assertRaises(ValueError):
            binary_mtf_second_moment(make_pupil(8), 1, 1.5)
        with self.assertRaises(ValueError):
            binary_mtf_second_moment(make_pupil(8), 4, 0.5)


class MonteCarloTest(unittest.TestCase):
    def test_degenerate_mask(self):
        pupil = sphere_pupil(16, 2.0)
        ensemble = monte_carlo_mtf(pupil, MaskSpec.bernoulli(0.0), 10, master_seed=1)
        expected = mtf(pupil).values
        np.testing.assert_allclose(ensemble.mean, expected, atol=1e-12)
        np.testing.assert_allclose(ensemble.q05, expected, atol=1e-12)
        np.testing.assert_allclose(ensemble.q95, expected, atol=1e-12)
        self.assertEqual(10, ensemble.draws)
        self.assertEqual((10, 16), ensemble.raw.shape)

    def test_single_draw(self):
        ensemble = monte_carlo_mtf(make_pupil(16), MaskSpec.uniform(), 1, master_seed=2)
        np.testing.assert_array_equal(ensemble.q05, ensemble.raw[0])
        np.testing.assert_array_equal(ensemble.q95, ensemble.raw[0])
        np.testing.assert_array_equal(ensemble.stderr, np.zeros(16))

    def test_parallel_schedule_is_reproducible(self):
        pupil = sphere_pupil(16, 4.0)
        serial = monte_carlo_mtf(pupil, MaskSpec.uniform(), 3000, master_seed=3)
        with ThreadPoolExecutor(max_workers=3) as executor:
            parallel = monte_carlo_mtf(pupil, MaskSpec.uniform(), 3000, master_seed=3, executor=executor)
        np.testing.assert_array_equal(serial.mean, parallel.mean)
        np.testing.assert_array_equal(serial.q50, parallel.q50)
        np.testing.assert_array_equal(serial.raw, parallel.raw)

    def test_raw_cap(self):
        ensemble = monte_carlo_mtf(make_pupil(8), MaskSpec.uniform(), 20, master_seed=4, raw_cap=10)
        self.assertIsNone(ensemble.raw)
        self.assertEqual(['period', 'draws', 'mean', 'stderr', 'q05', 'q50', 'q95'], list(ensemble.to_dict()))

    def test_invalid_trials(self):
        with self.assertRaises(ValueError):
            monte_carlo_mtf(make_pupil(8), MaskSpec.uniform(), 0, master_seed=5)

    def test_from_draws(self):
        ensemble = MtfEnsemble.from_draws(np.array([[1.0, 0.2], [1.0, 0.4]]))
        np.testing.assert_allclose(ensemble.mean, [1.0, 0.3])
        np.testing.assert_allclose(ensemble.stderr, [0.0, 0.1])
