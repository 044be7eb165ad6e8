# The MIT License (MIT)
# Copyright (c) 2024 by the wavemask development team and contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy of
# this software and associated documentation files (the "Software"), to deal in
# the Software without restriction, including without limitation the rights to
# use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies
# of the Software, and to permit persons to whom the Software is furnished to do
# so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""
2-D imaging simulation: pupil -> PSF -> blurred measurement -> noise -> Wiener deconvolution -> SSIM.

All transforms are circular and shift-invariant. PSFs are stored centered, with the origin at
pixel (side // 2, side // 2). Nothing on the numeric path clips values.
"""

import logging
import math
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.ndimage

from ..errors import WienerNullFrequencyError
from ..optics import SeidelCoefficients, disk_aperture, seidel_phase_2d, MIN_SIDE
from ..perf import measure_time

_LOG = logging.getLogger('wavemask')

Image2D = np.ndarray
Psf2D = np.ndarray

SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03


class NoiseSpec:
    """
    White additive Gaussian noise of standard deviation *sigma*, in scene-intensity units.
    """

    def __init__(self, sigma: float = 0.0):
        sigma = float(sigma)
        if not sigma >= 0.0:
            raise ValueError(f'noise sigma must be >= 0, but was {sigma!r}')
        self.sigma = sigma

    def __repr__(self):
        return f'NoiseSpec(sigma={self.sigma!r})'


def check_image(img: Image2D, name: str = 'image') -> Image2D:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < MIN_SIDE or img.shape[1] < MIN_SIDE:
        raise ValueError(f'{name} must be a 2-D array of at least {MIN_SIDE}x{MIN_SIDE} pixels, '
                         f'but has shape {img.shape}')
    if not np.all(np.isfinite(img)):
        raise ValueError(f'{name} must have finite entries')
    return img


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str):
    if a.shape != b.shape:
        raise ValueError(f'{what}: shape mismatch {a.shape} vs {b.shape}')


def embed_pupil(pupil: np.ndarray, side: int) -> np.ndarray:
    """
    Zero-pad a square pupil grid into a *side* x *side* grid with coinciding centers.
    """
    d = pupil.shape[0]
    if pupil.shape != (d, d) or d > side:
        raise ValueError(f'pupil of shape {pupil.shape} does not fit into a {side}x{side} grid')
    out = np.zeros((side, side), dtype=pupil.dtype)
    offset = side // 2 - d // 2
    out[offset:offset + d, offset:offset + d] = pupil
    return out


def pupil_diameter(side: int, fraction: float) -> int:
    """Even pupil grid diameter of at least MIN_SIDE pixels for a *side* x *side* image grid."""
    d = int(side * fraction) // 2 * 2
    if d < MIN_SIDE or d > side:
        raise ValueError(f'pupil fraction {fraction!r} gives unusable pupil diameter {d} for grid side {side}')
    return d


def max_sphere_strength(diameter: int) -> float:
    """
    Largest sphere strength whose geometric PSF half-width 4 s side / (pi diameter) stays within
    a quarter of the grid side. Beyond it circular convolution wraps the blur around the scene.
    """
    return math.pi * diameter / 16.0


def psf_from_pupil_2d(amplitude: np.ndarray, phase: np.ndarray) -> Psf2D:
    """
    PSF = |centered DFT of amplitude * exp(i phase)|^2, normalized to unit sum.
    """
    amplitude = np.asarray(amplitude, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.float64)
    _check_same_shape(amplitude, phase, 'psf_from_pupil_2d')
    field = amplitude * np.exp(1j * phase)
    psf = np.abs(np.fft.fftshift(np.fft.fft2(field))) ** 2
    return psf / np.sum(psf)


def otf(psf: Psf2D) -> np.ndarray:
    """Transfer function of a centered PSF."""
    return np.fft.fft2(np.fft.ifftshift(psf))


def mtf_2d(amplitude: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """
    2-D MTF: magnitude of the pupil autocorrelation normalized to 1 at zero frequency.
    Frequencies are in FFT order (zero frequency at index (0, 0)).
    """
    _check_same_shape(np.asarray(amplitude), np.asarray(phase), 'mtf_2d')
    field = amplitude * np.exp(1j * phase)
    spectrum = np.fft.fft2(field)
    r = np.abs(np.fft.ifft2(spectrum * np.conj(spectrum)))
    return r / r[0, 0]


def convolve_2d(scene: Image2D, psf: Psf2D) -> Image2D:
    """
    Circular convolution of *scene* with the centered *psf*, computed in the frequency domain.
    """
    scene = check_image(scene, 'scene')
    _check_same_shape(scene, psf, 'convolve_2d')
    return np.real(np.fft.ifft2(np.fft.fft2(scene) * otf(psf)))


def add_gaussian_noise(img: Image2D, spec: NoiseSpec, rng: np.random.Generator) -> Image2D:
    """
    Add i.i.d. N(0, sigma^2) noise to every pixel. The stream always advances by one draw per pixel.
    """
    img = np.asarray(img, dtype=np.float64)
    return img + spec.sigma * rng.standard_normal(img.shape)


def default_nsr(clean_measurement: Image2D, sigma: float) -> float:
    """Noise-to-signal power ratio sigma^2 / mean(y^2) of a clean measurement y."""
    power = float(np.mean(np.square(clean_measurement)))
    return sigma * sigma / power if power > 0.0 else 0.0


def wiener_deconvolve(measurement: Image2D, psf: Psf2D, nsr: float) -> Image2D:
    """
    Wiener estimate X = Y conj(H) / (|H|^2 + nsr), H the transfer function of the (possibly noisy) PSF.

    :raise WienerNullFrequencyError: if nsr is 0 and H has an exact zero
    """
    measurement = check_image(measurement, 'measurement')
    _check_same_shape(measurement, psf, 'wiener_deconvolve')
    nsr = float(nsr)
    if not nsr >= 0.0:
        raise ValueError(f'nsr must be >= 0, but was {nsr!r}')
    h = otf(psf)
    denominator = np.abs(h) ** 2 + nsr
    if nsr == 0.0:
        nulls = np.argwhere(denominator == 0.0)
        if nulls.size:
            raise WienerNullFrequencyError(tuple(int(i) for i in nulls[0]))
    estimate = np.fft.fft2(measurement) * np.conj(h) / denominator
    return np.real(np.fft.ifft2(estimate))


def ssim_range(reference: Image2D) -> Tuple[float, float]:
    """
    The affine map applied before scoring sends [min, max] of the reference image to [0, 1];
    a constant reference leaves values unchanged.
    """
    lo = float(np.min(reference))
    hi = float(np.max(reference))
    return (lo, hi) if hi > lo else (0.0, 1.0)


def ssim(a: Image2D, b: Image2D) -> float:
    """
    Mean SSIM over 8x8 sliding windows with C1 = (0.01 L)^2, C2 = (0.03 L)^2 and L = 1.
    Both images are rescaled with the map of ssim_range(a); windows touching the border are excluded.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b, 'ssim')
    lo, hi = ssim_range(a)
    a = (a - lo) / (hi - lo)
    b = (b - lo) / (hi - lo)

    def local_mean(x):
        return scipy.ndimage.uniform_filter(x, size=SSIM_WINDOW, mode='reflect')

    mu_a = local_mean(a)
    mu_b = local_mean(b)
    var_a = local_mean(a * a) - mu_a * mu_a
    var_b = local_mean(b * b) - mu_b * mu_b
    cov = local_mean(a * b) - mu_a * mu_b
    c1 = SSIM_K1 ** 2
    c2 = SSIM_K2 ** 2
    s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
    # a window of even size covers i - size // 2 .. i + size // 2 - 1
    lead = SSIM_WINDOW // 2
    trail = SSIM_WINDOW - 1 - lead
    return float(np.clip(np.mean(s[lead:-trail, lead:-trail]), -1.0, 1.0))


class ReconRecord:
    """
    One imaging trial: the aberration, whether the mask was inserted, the noise level,
    the scores and the images produced on the way.
    """

    def __init__(self,
                 aberration: str,
                 strength: float,
                 masked: bool,
                 sigma: float,
                 nsr: float,
                 psf_sigma: float,
                 ssim_recon: float,
                 ssim_measurement: float,
                 passband_mtf_min: float,
                 images: Dict[str, Image2D]):
        self.aberration = aberration
        self.strength = strength
        self.masked = masked
        self.sigma = sigma
        self.nsr = nsr
        self.psf_sigma = psf_sigma
        self.ssim_recon = ssim_recon
        self.ssim_measurement = ssim_measurement
        self.passband_mtf_min = passband_mtf_min
        self.images = images
        self.files = {}
        self.stream_key = None

    def to_dict(self) -> Dict[str, Any]:
        return dict(aberration=self.aberration,
                    strength=self.strength,
                    masked=self.masked,
                    sigma=self.sigma,
                    nsr=self.nsr,
                    psf_sigma=self.psf_sigma,
                    ssim=self.ssim_recon,
                    ssim_measurement=self.ssim_measurement,
                    passband_mtf_min=self.passband_mtf_min,
                    files=dict(self.files),
                    stream_key=self.stream_key.to_dict() if self.stream_key is not None else None)


def make_system(coeffs: SeidelCoefficients,
                side: int,
                diameter: int,
                mask_phases: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Amplitude and phase of the (optionally masked) aberrated pupil embedded in the image grid.
    *mask_phases* is a *diameter* x *diameter* array added to the aberration phase.
    """
    amplitude = disk_aperture(diameter)
    phase = seidel_phase_2d(coeffs, diameter)
    if mask_phases is not None:
        _check_same_shape(phase, np.asarray(mask_phases), 'make_system')
        phase = phase + mask_phases
    return embed_pupil(amplitude, side), embed_pupil(phase * amplitude, side)


def simulate_recon(scene: Image2D,
                   aberration: str,
                   strength: float,
                   sigma: float,
                   rng: np.random.Generator,
                   mask_phases: Optional[np.ndarray] = None,
                   pupil_fraction: float = 0.5,
                   psf_noise_scale: float = 1.0,
                   nsr: Optional[float] = None) -> ReconRecord:
    """
    Run one imaging trial.

    The same realized mask enters PSF generation and the deconvolution PSF. Noise is added to the
    measurement at *sigma* and to the PSF at sigma * psf_noise_scale * max(psf) / max(scene); the
    noisy PSF is renormalized to unit sum. If *nsr* is None it defaults to sigma^2 / mean(y^2) of the
    clean measurement y.
    """
    scene = check_image(scene, 'scene')
    side = scene.shape[0]
    if scene.shape != (side, side):
        raise ValueError(f'scene must be square, but has shape {scene.shape}')
    diameter = pupil_diameter(side, pupil_fraction)
    coeffs = SeidelCoefficients.of(aberration, strength)
    masked = mask_phases is not None

    with measure_time(tag=f'recon {aberration}={strength} sigma={sigma} masked={masked}', logger=_LOG):
        amplitude, phase = make_system(coeffs, side, diameter, mask_phases)
        psf = psf_from_pupil_2d(amplitude, phase)
        clean = convolve_2d(scene, psf)
        used_nsr = default_nsr(clean, sigma) if nsr is None else float(nsr)

        measurement = add_gaussian_noise(clean, NoiseSpec(sigma), rng)
        psf_sigma = sigma * psf_noise_scale * float(np.max(psf)) / float(np.max(scene))
        noisy_psf = add_gaussian_noise(psf, NoiseSpec(psf_sigma), rng)
        noisy_psf = noisy_psf / np.sum(noisy_psf)

        recon = wiener_deconvolve(measurement, noisy_psf, used_nsr)

        transfer = mtf_2d(amplitude, phase)
        unaberrated = mtf_2d(amplitude, np.zeros_like(phase))
        passband = unaberrated > 1e-3
        passband_mtf_min = float(np.min(transfer[passband]))

    return ReconRecord(aberration, float(strength), masked, float(sigma), used_nsr, psf_sigma,
                       ssim(scene, recon), ssim(scene, measurement), passband_mtf_min,
                       images=dict(measurement=measurement, psf=psf, recon=recon))
