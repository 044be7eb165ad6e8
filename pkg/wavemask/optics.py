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
Pupil functions, Seidel aberration phase profiles and random phase masks.

The 1-D aperture is the half-support rectangle: A_n = 1 for 0 <= n < N/2, A_n = 0 otherwise.
The 2-D aperture is the disk inscribed in the grid. Pupil coordinates are normalized so that
|x| = 1 (1-D) and rho = 1 (2-D) at the aperture edge, hence a coefficient equals the peak phase
in radians contributed by its term.
"""

import math
from typing import Any, Dict, Sequence

import numpy as np

UNIFORM = 'uniform'
BERNOULLI = 'bernoulli'

MASK_KINDS = (UNIFORM, BERNOULLI)

SEIDEL_TERMS = ('sphere', 'coma', 'astigmatism', 'defocus', 'tilt')

MIN_PERIOD = 4
MIN_SIDE = 8


def _check_period(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValueError(f'period N must be an integer, but was {n!r}')
    if n < MIN_PERIOD or n % 2 != 0:
        raise ValueError(f'period N must be even and >= {MIN_PERIOD}, but was {n}')
    return int(n)


def support_size(n: int) -> int:
    """Number of aperture points, floor(N/2)."""
    return n // 2


class PupilFunction:
    """
    Discrete 1-D pupil P_n = A_n exp(i phi_n) of period N.

    Phases are kept as given; consumers treat them modulo 2 pi.
    """

    def __init__(self, amplitude: np.ndarray, phase: np.ndarray):
        amplitude = np.array(amplitude, dtype=np.float64)
        phase = np.array(phase, dtype=np.float64)
        if amplitude.ndim != 1 or amplitude.shape != phase.shape:
            raise ValueError(f'amplitude and phase must be 1-D sequences of equal length, '
                             f'but got shapes {amplitude.shape} and {phase.shape}')
        if not np.all(np.isfinite(phase)):
            raise ValueError('phase entries must be finite')
        self._amplitude = amplitude
        self._phase = phase
        self._amplitude.flags.writeable = False
        self._phase.flags.writeable = False

    @property
    def period(self) -> int:
        return self._phase.size

    @property
    def support(self) -> int:
        return support_size(self.period)

    @property
    def amplitude(self) -> np.ndarray:
        return self._amplitude

    @property
    def phase(self) -> np.ndarray:
        return self._phase

    @property
    def field(self) -> np.ndarray:
        """The complex pupil A_n exp(i phi_n)."""
        return self._amplitude * np.exp(1j * self._phase)

    def __eq__(self, other):
        return isinstance(other, PupilFunction) \
               and np.array_equal(self._amplitude, other._amplitude) \
               and np.array_equal(self._phase, other._phase)

    def __repr__(self):
        return f'PupilFunction(period={self.period})'


def aperture(n: int) -> np.ndarray:
    n = _check_period(n)
    a = np.zeros(n, dtype=np.float64)
    a[:support_size(n)] = 1.0
    return a


def make_pupil(n: int, phase: Sequence[float] = None) -> PupilFunction:
    """
    Make a pupil of period *n* with the half-support aperture.

    :param n: the period N, even and >= 4
    :param phase: the aberration phase phi_n in radians, length N. Defaults to zero phase.
    :return: the pupil
    :raise ValueError: if N is odd or too small or the phase length differs from N
    """
    n = _check_period(n)
    phase = np.zeros(n) if phase is None else np.array(phase, dtype=np.float64)
    if phase.shape != (n,):
        raise ValueError(f'phase must have length {n}, but has shape {phase.shape}')
    return PupilFunction(aperture(n), phase)


class SeidelCoefficients:
    """
    Seidel aberration strengths, each in radians of peak phase at the aperture edge.
    """

    def __init__(self,
                 sphere: float = 0.0,
                 coma: float = 0.0,
                 astigmatism: float = 0.0,
                 defocus: float = 0.0,
                 tilt: float = 0.0):
        values = dict(sphere=sphere, coma=coma, astigmatism=astigmatism, defocus=defocus, tilt=tilt)
        for name, value in values.items():
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f'Seidel coefficient {name!r} must be finite, but was {value!r}')
            setattr(self, name, value)

    @classmethod
    def of(cls, kind: str, strength: float) -> 'SeidelCoefficients':
        """
        Coefficients with a single nonzero term *kind* of given *strength*.
        The kind "none" gives the zero aberration.
        """
        if kind == 'none':
            return cls()
        if kind not in SEIDEL_TERMS:
            raise ValueError(f'unknown aberration type {kind!r}, must be one of {SEIDEL_TERMS + ("none",)}')
        return cls(**{kind: strength})

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> 'SeidelCoefficients':
        unknown = set(d) - set(SEIDEL_TERMS)
        if unknown:
            raise ValueError(f'unknown Seidel terms {sorted(unknown)}')
        return cls(**d)

    def to_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in SEIDEL_TERMS}

    def __add__(self, other: 'SeidelCoefficients') -> 'SeidelCoefficients':
        return SeidelCoefficients(**{name: getattr(self, name) + getattr(other, name) for name in SEIDEL_TERMS})

    def __eq__(self, other):
        return isinstance(other, SeidelCoefficients) and self.to_dict() == other.to_dict()

    def __repr__(self):
        terms = ', '.join(f'{k}={v!r}' for k, v in self.to_dict().items() if v != 0.0)
        return f'SeidelCoefficients({terms})'


def pupil_coordinate_1d(n: int) -> np.ndarray:
    """
    Normalized coordinate x_n = (n - c) / c, c = (N/2 - 1) / 2, on the aperture support.
    """
    m = support_size(_check_period(n))
    c = (m - 1) / 2.0
    return (np.arange(m, dtype=np.float64) - c) / c


def seidel_phase_1d(coeffs: SeidelCoefficients, n: int) -> np.ndarray:
    """
    Radial restriction of the Seidel expansion to the 1-D aperture,
    phi = sphere x^4 + coma x^3 + (astigmatism + defocus) x^2 + tilt x on the support, zero outside.
    """
    n = _check_period(n)
    x = pupil_coordinate_1d(n)
    x2 = x * x
    phase = np.zeros(n, dtype=np.float64)
    phase[:x.size] = (coeffs.sphere * x2 * x2
                      + coeffs.coma * x2 * x
                      + coeffs.astigmatism * x2
                      + coeffs.defocus * x2
                      + coeffs.tilt * x)
    return phase


def pupil_grid_2d(side: int):
    """
    Normalized pupil coordinates (x, y) of a *side* x *side* grid.

    The center is the pixel (side // 2, side // 2), the unit radius spans side // 2 - 1 pixels,
    so the disk is inscribed in the grid and samples rho = 1 exactly along the axes.
    Index i and side - i are mirror images for 1 <= i < side.
    """
    if not isinstance(side, (int, np.integer)) or side < MIN_SIDE:
        raise ValueError(f'grid side must be an integer >= {MIN_SIDE}, but was {side!r}')
    c = side // 2
    r = c - 1
    coords = (np.arange(side, dtype=np.float64) - c) / r
    x, y = np.meshgrid(coords, coords)
    return x, y


def disk_aperture(side: int) -> np.ndarray:
    x, y = pupil_grid_2d(side)
    return ((x * x + y * y) <= 1.0 + 1e-12).astype(np.float64)


def seidel_phase_2d(coeffs: SeidelCoefficients, side: int) -> np.ndarray:
    """
    On-axis Seidel expansion on the inscribed unit disk, with x = rho cos(theta):
    phi = sphere rho^4 + coma rho^2 x + astigmatism x^2 + defocus rho^2 + tilt x; zero outside the disk.
    """
    x, y = pupil_grid_2d(side)
    rho2 = x * x + y * y
    phase = (coeffs.sphere * rho2 * rho2
             + coeffs.coma * rho2 * x
             + coeffs.astigmatism * x * x
             + coeffs.defocus * rho2
             + coeffs.tilt * x)
    phase[rho2 > 1.0 + 1e-12] = 0.0
    return phase


class MaskSpec:
    """
    Distribution of a random phase mask: i.i.d. Unif[0, 2 pi) or i.i.d. pi * Bern(p).
    """

    def __init__(self, kind: str = UNIFORM, p: float = 0.5):
        if kind not in MASK_KINDS:
            raise ValueError(f'mask kind must be one of {MASK_KINDS}, but was {kind!r}')
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f'Bernoulli probability p must be in [0, 1], but was {p!r}')
        self.kind = kind
        self.p = p

    @classmethod
    def uniform(cls) -> 'MaskSpec':
        return cls(UNIFORM)

    @classmethod
    def bernoulli(cls, p: float = 0.5) -> 'MaskSpec':
        return cls(BERNOULLI, p)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> 'MaskSpec':
        return cls(d.get('kind', UNIFORM), d.get('p', 0.5))

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == UNIFORM:
            return dict(kind=self.kind)
        return dict(kind=self.kind, p=self.p)

    def __eq__(self, other):
        return isinstance(other, MaskSpec) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f'MaskSpec({self.kind!r}, p={self.p!r})' if self.kind == BERNOULLI else 'MaskSpec(uniform)'


class MaskSample:
    """
    One realized mask: the phases W_n in radians.
    """

    def __init__(self, phases: np.ndarray):
        self._phases = np.array(phases, dtype=np.float64)
        self._phases.flags.writeable = False

    @property
    def phases(self) -> np.ndarray:
        return self._phases

    def __len__(self):
        return self._phases.size


def sample_mask_block(spec: MaskSpec, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw *count* masks of length *n* as the rows of a float array.
    """
    if spec.kind == UNIFORM:
        return rng.uniform(0.0, 2.0 * np.pi, size=(count, n))
    return np.pi * (rng.random(size=(count, n)) < spec.p)


def sample_mask(spec: MaskSpec, n: int, rng: np.random.Generator) -> MaskSample:
    """
    Draw one mask of length *n*; only *rng* is advanced.
    """
    return MaskSample(sample_mask_block(spec, n, 1, rng)[0])


def apply_mask(pupil: PupilFunction, mask: MaskSample) -> PupilFunction:
    """
    Masked pupil A_n exp(i (phi_n + W_n)).
    """
    if len(mask) != pupil.period:
        raise ValueError(f'mask length {len(mask)} does not match pupil period {pupil.period}')
    return PupilFunction(pupil.amplitude, pupil.phase + mask.phases)
