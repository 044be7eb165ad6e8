import math
import unittest

import numpy as np

from test.helpers import new_rng, direct_circular_convolution
from wavemask.errors import WienerNullFrequencyError
from wavemask.im import NoiseSpec, ReconRecord, check_image, embed_pupil, pupil_diameter, psf_from_pupil_2d, \
    otf, mtf_2d, convolve_2d, add_gaussian_noise, default_nsr, wiener_deconvolve, ssim, make_system, \
    simulate_recon, make_test_scene
from wavemask.optics import SeidelCoefficients, disk_aperture


def unaberrated_psf(side: int, diameter: int) -> np.ndarray:
    return psf_from_pupil_2d(*make_system(SeidelCoefficients(), side, diameter))


def windowed_ssim(a: np.ndarray, b: np.ndarray, size: int = 8) -> float:
    """Mean SSIM over every size x size window lying inside the image, one window at a time."""
    lo, hi = np.min(a), np.max(a)
    a = (a - lo) / (hi - lo)
    b = (b - lo) / (hi - lo)
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    scores = []
    for y in range(a.shape[0] - size + 1):
        for x in range(a.shape[1] - size + 1):
            wa = a[y:y + size, x:x + size]
            wb = b[y:y + size, x:x + size]
            mu_a, mu_b = np.mean(wa), np.mean(wb)
            var_a = np.mean(wa * wa) - mu_a * mu_a
            var_b = np.mean(wb * wb) - mu_b * mu_b
            cov = np.mean(wa * wb) - mu_a * mu_b
            scores.append(((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                          / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)))
    return float(np.mean(scores))


class PupilGridTest(unittest.TestCase):
    def test_embed_pupil(self):
        embedded = embed_pupil(np.ones((8, 8)), 16)
        self.assertEqual((16, 16), embedded.shape)
        self.assertEqual(64.0, np.sum(embedded))
        self.assertEqual(1.0, embedded[4, 4])
        self.assertEqual(0.0, embedded[3, 4])
        self.assertEqual(1.0, embedded[11, 11])
        with self.assertRaises(ValueError):
            embed_pupil(np.ones((32, 32)), 16)

    def test_pupil_diameter(self):
        self.assertEqual(128, pupil_diameter(256, 0.5))
        self.assertEqual(32, pupil_diameter(64, 0.5))
        self.assertEqual(24, pupil_diameter(100, 0.25))
        with self.assertRaises(ValueError):
            pupil_diameter(16, 0.25)

    def test_make_system(self):
        amplitude, phase = make_system(SeidelCoefficients(defocus=1.0), 64, 32)
        self.assertEqual((64, 64), amplitude.shape)
        self.assertEqual(np.sum(disk_aperture(32)), np.sum(amplitude))
        np.testing.assert_array_equal(phase[amplitude == 0.0], 0.0)
        with self.assertRaises(ValueError):
            make_system(SeidelCoefficients(), 64, 32, mask_phases=np.zeros((16, 16)))


class PsfTest(unittest.TestCase):
    def test_unit_sum_and_center(self):
        psf = unaberrated_psf(32, 16)
        self.assertAlmostEqual(1.0, float(np.sum(psf)), places=12)
        self.assertEqual((16, 16), np.unravel_index(np.argmax(psf), psf.shape))
        self.assertTrue(np.all(psf >= 0.0))

    def test_symmetry(self):
        psf = unaberrated_psf(32, 16)
        np.testing.assert_allclose(psf, psf.T, atol=1e-14)
        np.testing.assert_allclose(psf[1:, 1:], psf[1:, 1:][::-1, ::-1], atol=1e-14)

    def test_constant_phase(self):
        amplitude, _ = make_system(SeidelCoefficients(), 32, 16)
        np.testing.assert_allclose(psf_from_pupil_2d(amplitude, np.full((32, 32), 2.5)),
                                   psf_from_pupil_2d(amplitude, np.zeros((32, 32))), atol=1e-14)

    def test_tilt_shifts_psf(self):
        side, diameter, shift = 64, 32, 3
        radius = diameter // 2 - 1
        tilt = 2.0 * math.pi * shift * radius / side
        reference = unaberrated_psf(side, diameter)
        tilted = psf_from_pupil_2d(*make_system(SeidelCoefficients(tilt=tilt), side, diameter))
        overlaps = [np.sum(tilted * np.roll(reference, s, axis=1)) for s in range(side)]
        self.assertEqual(shift, int(np.argmax(overlaps)))
        np.testing.assert_allclose(tilted, np.roll(reference, shift, axis=1), atol=1e-12)

    def test_otf_at_zero_frequency(self):
        self.assertAlmostEqual(1.0, abs(otf(unaberrated_psf(32, 16))[0, 0]), places=12)

    def test_mtf_2d(self):
        amplitude, phase = make_system(SeidelCoefficients(sphere=3.0), 32, 16)
        values = mtf_2d(amplitude, phase)
        self.assertEqual(1.0, values[0, 0])
        self.assertTrue(np.all(values <= 1.0 + 1e-12))
        np.testing.assert_allclose(values, np.abs(otf(psf_from_pupil_2d(amplitude, phase))), atol=1e-12)


class ConvolveTest(unittest.TestCase):
    def test_delta_psf(self):
        scene = new_rng(1).random((16, 16))
        psf = np.zeros((16, 16))
        psf[8, 8] = 1.0
        np.testing.assert_allclose(convolve_2d(scene, psf), scene, atol=1e-10)

    def test_constant_image(self):
        psf = unaberrated_psf(32, 16)
        np.testing.assert_allclose(convolve_2d(np.full((32, 32), 0.7), psf), np.full((32, 32), 0.7), atol=1e-12)

    def test_matches_spatial_convolution(self):
        rng = new_rng(2)
        scene = rng.random((16, 16))
        psf = rng.random((16, 16))
        psf /= np.sum(psf)
        np.testing.assert_allclose(convolve_2d(scene, psf), direct_circular_convolution(scene, psf), atol=1e-10)

    def test_preserves_mean(self):
        scene = make_test_scene(64)
        blurred = convolve_2d(scene, unaberrated_psf(64, 32))
        self.assertAlmostEqual(float(np.mean(scene)), float(np.mean(blurred)), places=9)

    def test_invalid_shapes(self):
        with self.assertRaises(ValueError):
            convolve_2d(np.zeros((16, 16)), np.zeros((8, 8)))
        with self.assertRaises(ValueError):
            convolve_2d(np.zeros((4, 4)), np.zeros((4, 4)))
        with self.assertRaises(ValueError):
            check_image(np.zeros(64))


class NoiseTest(unittest.TestCase):
    def test_zero_sigma(self):
        img = new_rng(3).random((32, 32))
        np.testing.assert_array_equal(add_gaussian_noise(img, NoiseSpec(0.0), new_rng(4)), img)

    def test_sigma(self):
        img = np.zeros((256, 256))
        noise = add_gaussian_noise(img, NoiseSpec(0.1), new_rng(5))
        tolerance = 4.0 * 0.1 / math.sqrt(2.0 * img.size)
        self.assertLess(abs(float(np.std(noise)) - 0.1), tolerance)

    def test_deterministic(self):
        img = np.zeros((16, 16))
        np.testing.assert_array_equal(add_gaussian_noise(img, NoiseSpec(0.2), new_rng(6)),
                                      add_gaussian_noise(img, NoiseSpec(0.2), new_rng(6)))

    def test_negative_sigma(self):
        with self.assertRaises(ValueError):
            NoiseSpec(-0.1)

    def test_default_nsr(self):
        self.assertAlmostEqual(0.01 / 0.25, default_nsr(np.full((8, 8), 0.5), 0.1))
        self.assertEqual(0.0, default_nsr(np.zeros((8, 8)), 0.1))


class WienerTest(unittest.TestCase):
    def test_inverts_well_conditioned_blur(self):
        scene = new_rng(7).random((32, 32))
        psf = np.zeros((32, 32))
        psf[16, 16] = 0.6
        psf[16, 17] = 0.2
        psf[17, 16] = 0.2
        recon = wiener_deconvolve(convolve_2d(scene, psf), psf, 0.0)
        np.testing.assert_allclose(recon, scene, atol=1e-9)

    def test_null_frequency(self):
        with self.assertRaises(WienerNullFrequencyError) as cm:
            wiener_deconvolve(np.ones((16, 16)), np.zeros((16, 16)), 0.0)
        self.assertIsInstance(cm.exception, ZeroDivisionError)
        self.assertEqual((0, 0), cm.exception.frequency)

    def test_regularized_null_frequency(self):
        recon = wiener_deconvolve(np.ones((16, 16)), np.zeros((16, 16)), 0.1)
        np.testing.assert_array_equal(recon, np.zeros((16, 16)))

    def test_negative_nsr(self):
        with self.assertRaises(ValueError):
            wiener_deconvolve(np.ones((16, 16)), np.ones((16, 16)) / 256.0, -1.0)

    def test_improves_ssim_over_measurement(self):
        rng = new_rng(8)
        scene = make_test_scene(128)
        psf = unaberrated_psf(128, 32)
        measurement = add_gaussian_noise(convolve_2d(scene, psf), NoiseSpec(1e-3), rng)
        noisy_psf = add_gaussian_noise(psf, NoiseSpec(1e-8), rng)
        noisy_psf /= np.sum(noisy_psf)
        recon = wiener_deconvolve(measurement, noisy_psf, 1e-3)
        self.assertGreater(ssim(scene, recon), ssim(scene, measurement))


class SsimTest(unittest.TestCase):
    def test_identical(self):
        scene = make_test_scene(64)
        self.assertAlmostEqual(1.0, ssim(scene, scene), places=12)

    def test_inverted(self):
        scene = make_test_scene(64)
        score = ssim(scene, 1.0 - scene)
        self.assertLess(score, 1.0)
        self.assertGreaterEqual(score, -1.0)

    def test_noise_lowers_score(self):
        scene = make_test_scene(64)
        slightly = ssim(scene, add_gaussian_noise(scene, NoiseSpec(0.01), new_rng(9)))
        strongly = ssim(scene, add_gaussian_noise(scene, NoiseSpec(0.2), new_rng(9)))
        self.assertLess(strongly, slightly)
        self.assertLess(slightly, 1.0)

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            ssim(np.zeros((16, 16)), np.zeros((16, 8)))

    def test_scores_interior_windows_only(self):
        rng = new_rng(16)
        a = rng.random((16, 16))
        b = a + 0.2 * rng.standard_normal((16, 16))
        self.assertAlmostEqual(windowed_ssim(a, b), ssim(a, b), places=10)
        # the first and last rows change reflected padding but not any interior window
        c = b.copy()
        c[0, :] += 0.5
        c[-1, :] -= 0.5
        self.assertNotAlmostEqual(ssim(a, b), ssim(a, c), places=6)
        self.assertAlmostEqual(windowed_ssim(a, c), ssim(a, c), places=10)


class SimulateReconTest(unittest.TestCase):
    def test_record(self):
        scene = make_test_scene(64)
        record = simulate_recon(scene, 'sphere', 4.0, 0.01, new_rng(10))
        self.assertIsInstance(record, ReconRecord)
        self.assertEqual('sphere', record.aberration)
        self.assertEqual(4.0, record.strength)
        self.assertFalse(record.masked)
        self.assertEqual({'measurement', 'psf', 'recon'}, set(record.images))
        self.assertAlmostEqual(1.0, float(np.sum(record.images['psf'])), places=12)
        self.assertTrue(-1.0 <= record.ssim_recon <= 1.0)
        self.assertTrue(0.0 <= record.passband_mtf_min <= 1.0)
        self.assertEqual(['aberration', 'strength', 'masked', 'sigma', 'nsr', 'psf_sigma', 'ssim',
                          'ssim_measurement', 'passband_mtf_min', 'files', 'stream_key'],
                         list(record.to_dict()))

    def test_noise_parameters(self):
        scene = make_test_scene(64)
        record = simulate_recon(scene, 'astigmatism', 2.0, 0.01, new_rng(11))
        psf = record.images['psf']
        self.assertEqual(0.01 * float(np.max(psf)) / float(np.max(scene)), record.psf_sigma)
        self.assertEqual(default_nsr(convolve_2d(scene, psf), 0.01), record.nsr)
        explicit = simulate_recon(scene, 'astigmatism', 2.0, 0.01, new_rng(11), nsr=0.5)
        self.assertEqual(0.5, explicit.nsr)

    def test_reproducible(self):
        scene = make_test_scene(64)
        mask = new_rng(12).uniform(0.0, 2.0 * np.pi, (32, 32))
        a = simulate_recon(scene, 'sphere', 8.0, 0.003, new_rng(13), mask_phases=mask)
        b = simulate_recon(scene, 'sphere', 8.0, 0.003, new_rng(13), mask_phases=mask)
        self.assertTrue(a.masked)
        np.testing.assert_array_equal(a.images['recon'], b.images['recon'])
        self.assertEqual(a.ssim_recon, b.ssim_recon)

    def test_zero_aberration_passband(self):
        record = simulate_recon(make_test_scene(64), 'none', 0.0, 0.01, new_rng(14))
        self.assertGreater(record.passband_mtf_min, 1e-3)

    def test_mask_lifts_passband_minimum(self):
        scene = make_test_scene(256)
        mask = new_rng(17).uniform(0.0, 2.0 * np.pi, (128, 128))
        unmasked = simulate_recon(scene, 'sphere', 32.0, 1e-5, new_rng(18))
        masked = simulate_recon(scene, 'sphere', 32.0, 1e-5, new_rng(18), mask_phases=mask)
        self.assertLess(unmasked.passband_mtf_min, 1e-3)
        self.assertGreater(masked.passband_mtf_min, unmasked.passband_mtf_min)

    def test_masked_score_falls_with_noise(self):
        scene = make_test_scene(256)
        mask = new_rng(19).uniform(0.0, 2.0 * np.pi, (128, 128))
        scores = [simulate_recon(scene, 'sphere', 12.0, sigma, new_rng(20), mask_phases=mask).ssim_recon
                  for sigma in (3e-6, 1e-5, 3e-5, 1e-4, 3e-4)]
        for louder, quieter in zip(scores[1:], scores):
            self.assertLessEqual(louder, quieter, msg=str(scores))

    def test_invalid_scene(self):
        with self.assertRaises(ValueError):
            simulate_recon(np.zeros((64, 32)), 'sphere', 1.0, 0.01, new_rng(15))
