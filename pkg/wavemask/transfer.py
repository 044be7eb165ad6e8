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
Modulation transfer functions of 1-D pupils and the laws of masked MTFs.

Exact identities are checked to EXACT_TOLERANCE; the theory is stated for frequencies
0 <= n < N/2 and extended to the rest of the period by circular symmetry.
"""

import logging
from concurrent.futures import Executor
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.stats

from .defaults import DEFAULT_ENUMERATION_CAP, DEFAULT_RAW_CAP
from .errors import EnumerationCapError
from .optics import PupilFunction, MaskSpec, sample_mask, sample_mask_block, apply_mask, support_size, \
    _check_period
from .perf import measure_time
from .randstats import StreamKey

_LOG = logging.getLogger('wavemask')

MTF_METHODS = ('fft', 'direct')

SECOND_MOMENT_VARIANTS = ('squared', 'linear')

_ENSEMBLE_CHUNK_SIZE = 1024
_ENUMERATION_CHUNK_BITS = 16


class Mtf:
    """
    MTF H_n of period N, normalized so that H_0 = 1.
    Values are kept as computed; rounding may leave them slightly outside [0, 1].
    """

    def __init__(self, values: np.ndarray):
        values = np.array(values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError(f'MTF values must be a 1-D sequence, but got shape {values.shape}')
        values.flags.writeable = False
        self._values = values

    @property
    def period(self) -> int:
        return self._values.size

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __getitem__(self, n: int) -> float:
        return float(self._values[n])

    def __len__(self):
        return self._values.size

    def __repr__(self):
        return f'Mtf({self._values.tolist()!r})'


class MtfEnsemble:
    """
    Per-frequency statistics of masked MTFs over *draws* mask realizations.
    *raw* holds the draws as a draws x N matrix if it was retained.
    """

    def __init__(self, period: int, draws: int, mean: np.ndarray,
                 q05: np.ndarray, q50: np.ndarray, q95: np.ndarray,
                 raw: Optional[np.ndarray] = None,
                 stderr: Optional[np.ndarray] = None):
        self.period = period
        self.draws = draws
        self.mean = mean
        self.stderr = stderr if stderr is not None else np.zeros_like(mean)
        self.q05 = q05
        self.q50 = q50
        self.q95 = q95
        self.raw = raw

    @classmethod
    def from_draws(cls, draws: np.ndarray, raw_cap: int = DEFAULT_RAW_CAP) -> 'MtfEnsemble':
        draws = np.asarray(draws, dtype=np.float64)
        k, n = draws.shape
        # Summation runs in fixed row order, so the result does not depend on how draws were scheduled
        mean = np.clip(np.mean(draws, axis=0), 0.0, 1.0)
        q05, q50, q95 = np.quantile(draws, [0.05, 0.5, 0.95], axis=0)
        stderr = np.std(draws, axis=0, ddof=1) / np.sqrt(k) if k > 1 else np.zeros(n)
        return cls(n, k, mean, q05, q50, q95, raw=draws if k <= raw_cap else None, stderr=stderr)

    def to_dict(self) -> Dict[str, Any]:
        return dict(period=self.period,
                    draws=self.draws,
                    mean=self.mean.tolist(),
                    stderr=self.stderr.tolist(),
                    q05=self.q05.tolist(),
                    q50=self.q50.tolist(),
                    q95=self.q95.tolist())


class AberrationCouplingVector:
    """
    Couplings |cos(delta_jk)| of the unordered aperture pairs j < k at frequency *source_n*,
    where delta_jk = phi_j - phi_{j-n} - phi_k + phi_{k-n}.
    *cosines* keeps the signed values cos(delta_jk) in the same pair order.
    """

    def __init__(self, source_n: int, support: int, pairs: List[Tuple[int, int]], cosines: np.ndarray):
        self.source_n = source_n
        self.support = support
        self.pairs = pairs
        self.cosines = cosines
        self.entries = np.abs(cosines)

    @property
    def pair_count(self) -> int:
        return len(self.pairs)

    def __len__(self):
        return len(self.pairs)


def _autocorrelation_fft(field: np.ndarray) -> np.ndarray:
    spectrum = np.fft.fft(field, axis=-1)
    return np.fft.ifft(spectrum * np.conj(spectrum), axis=-1)


def _autocorrelation_direct(field: np.ndarray) -> np.ndarray:
    return np.array([np.sum(field * np.conj(np.roll(field, n))) for n in range(field.size)])


def mtf(pupil: PupilFunction, method: str = 'fft') -> Mtf:
    """
    MTF of *pupil*: the magnitude of its circular autocorrelation sum_m P_m P*_{m-n},
    normalized by the value at n = 0.

    :param pupil: the pupil
    :param method: "fft" for the frequency-domain route, "direct" for the O(N^2) sum
    :return: the MTF
    """
    if method == 'fft':
        r = _autocorrelation_fft(pupil.field)
    elif method == 'direct':
        r = _autocorrelation_direct(pupil.field)
    else:
        raise ValueError(f'method must be one of {MTF_METHODS}, but was {method!r}')
    return Mtf(np.abs(r) / np.abs(r[0]))


def mtf_batch(amplitude: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """
    MTFs of the pupils amplitude * exp(i phases[k]) for every row k of *phases*.
    """
    fields = amplitude[np.newaxis, :] * np.exp(1j * np.atleast_2d(phases))
    r = np.abs(_autocorrelation_fft(fields))
    return r / r[:, :1]


def diffraction_limit(n: int) -> Mtf:
    """
    Upper bound |1 - d_n / (N/2)| of every MTF of period *n*, with d_n = min(n, N - n),
    clipped at zero beyond the aperture support. Equality holds for zero aberration.
    """
    n = _check_period(n)
    m = support_size(n)
    k = np.arange(n)
    distance = np.minimum(k, n - k)
    return Mtf(np.maximum(0.0, 1.0 - distance / m))


def _symmetric_extension(head: np.ndarray, n: int) -> np.ndarray:
    """Extend H_0..H_{M-1} to a full period using H_M = 0 and H_n = H_{N-n}."""
    m = head.shape[-1]
    values = np.zeros(head.shape[:-1] + (n,), dtype=np.float64)
    values[..., :m] = head
    values[..., n - m + 1:] = head[..., :0:-1]
    return values


def uniform_mtf_from_mask(mask_phases: np.ndarray) -> np.ndarray:
    """
    Closed-form MTF of the zero-aberration pupil under the mask phases W (rows of *mask_phases*):
    H_n = |sum_{j=n}^{M-1} exp(i (W_j - W_{j-n}))| / M for 0 <= n < M, extended by symmetry.
    """
    w = np.atleast_2d(mask_phases)
    n = w.shape[-1]
    m = support_size(n)
    z = np.exp(1j * w[:, :m])
    head = np.empty((w.shape[0], m), dtype=np.float64)
    for lag in range(m):
        head[:, lag] = np.abs(np.sum(z[:, lag:] * np.conj(z[:, :m - lag]), axis=1)) / m
    return _symmetric_extension(head, n)


def uniform_mtf_sample(n: int, rng: np.random.Generator) -> Mtf:
    """
    Draw the MTF of a uniform-masked pupil from its aberration-free closed form.

    The mask is drawn exactly as sample_mask(MaskSpec.uniform(), n, rng) draws it, so
    for equal streams the result equals mtf(apply_mask(make_pupil(n), mask)).
    """
    n = _check_period(n)
    w = sample_mask(MaskSpec.uniform(), n, rng).phases
    return Mtf(uniform_mtf_from_mask(w)[0])


def uniform_mtf_samples(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """*count* closed-form uniform-mask MTF draws as the rows of a matrix."""
    n = _check_period(n)
    return uniform_mtf_from_mask(sample_mask_block(MaskSpec.uniform(), n, count, rng))


def binary_mtf_sample(pupil: PupilFunction, p: float, rng: np.random.Generator) -> Mtf:
    """
    MTF of *pupil* under one Bernoulli-*p* phase mask.
    """
    mask = sample_mask(MaskSpec.bernoulli(p), pupil.period, rng)
    return mtf(apply_mask(pupil, mask))


def masked_mtf_samples(pupil: PupilFunction, spec: MaskSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """*count* MTF draws of *pupil* under masks of distribution *spec*, as the rows of a matrix."""
    masks = sample_mask_block(spec, pupil.period, count, rng)
    return mtf_batch(pupil.amplitude, pupil.phase[np.newaxis, :] + masks)


def _check_frequency(pupil: PupilFunction, n: int, lowest: int = 1) -> int:
    m = pupil.support
    if not isinstance(n, (int, np.integer)) or not lowest <= n <= m - 1:
        raise ValueError(f'frequency index n must be in [{lowest}, {m - 1}], but was {n!r}')
    return int(n)


def _lag_phases(pupil: PupilFunction, n: int) -> np.ndarray:
    """theta_j = phi_j - phi_{j-n} for j = n, ..., M - 1."""
    m = pupil.support
    phi = pupil.phase
    return phi[n:m] - phi[0:m - n]


def coupling_vector(pupil: PupilFunction, n: int) -> AberrationCouplingVector:
    """
    Aberration coupling vector of frequency *n*: one entry per unordered pair j < k of
    {n, ..., M - 1}, C (C - 1) / 2 entries for C = M - n.
    """
    n = _check_frequency(pupil, n)
    theta = _lag_phases(pupil, n)
    c = theta.size
    jj, kk = np.triu_indices(c, k=1)
    cosines = np.cos(theta[jj] - theta[kk])
    pairs = [(int(j) + n, int(k) + n) for j, k in zip(jj, kk)]
    return AberrationCouplingVector(n, c, pairs, cosines)


def _hypercube_vertices(bits: int, start: int, stop: int) -> np.ndarray:
    """Sign vectors of the vertices start..stop-1 of the hypercube {-1, 1}^bits."""
    codes = np.arange(start, stop, dtype=np.int64)[:, np.newaxis]
    return 1.0 - 2.0 * ((codes >> np.arange(bits, dtype=np.int64)) & 1)


def _check_cap(bits: int, cap: int):
    if bits > cap:
        raise EnumerationCapError(bits, cap)


def binary_mtf_law(pupil: PupilFunction, n: int,
                   cap: int = DEFAULT_ENUMERATION_CAP) -> Tuple[np.ndarray, int]:
    """
    Exact law of H_n under a Bernoulli-0.5 mask.

    The lagged signs S_j = R_j R_{j-n}, j = n..M-1, are uniform on the C-dimensional hypercube, and
    H_n = (sqrt(C) / M) sqrt(1 + 2 sum_{j<k} S_j S_k cos(delta_jk) / C).
    All 2^C vertices are equally likely.

    :return: the values of H_n at all vertices and the number of radicands clipped at zero
    :raise EnumerationCapError: if C exceeds *cap*
    """
    n = _check_frequency(pupil, n)
    m = pupil.support
    theta = _lag_phases(pupil, n)
    c = theta.size
    _check_cap(c, cap)
    gram = np.cos(theta[:, np.newaxis] - theta[np.newaxis, :])
    num_vertices = 1 << c
    chunk = 1 << _ENUMERATION_CHUNK_BITS
    values = np.empty(num_vertices, dtype=np.float64)
    clipped = 0
    for start in range(0, num_vertices, chunk):
        stop = min(num_vertices, start + chunk)
        s = _hypercube_vertices(c, start, stop)
        radicand = np.einsum('ij,jk,ik->i', s, gram, s) / c
        clipped += int(np.count_nonzero(radicand < 0.0))
        values[start:stop] = np.sqrt(c) / m * np.sqrt(np.maximum(0.0, radicand))
    return values, clipped


def binary_mtf_expectation_exact(pupil: PupilFunction, n: int,
                                 cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """
    Exact E[H_n] under a Bernoulli-0.5 mask by hypercube enumeration.

    :raise EnumerationCapError: if the enumeration exceeds 2^cap vertices
    """
    if n == 0:
        return 1.0
    values, _ = binary_mtf_law(pupil, n, cap=cap)
    return float(np.mean(values))


def binary_mtf_expectation_pairwise(pupil: PupilFunction, n: int,
                                    cap: int = DEFAULT_ENUMERATION_CAP) -> Tuple[float, int]:
    """
    E[H_n] from the pair-indexed representation 2 a^T U with U uniform on {-1, 1}^{pairs},
    i.e. treating the pair signs as independent. Negative radicands are clipped at zero.

    This matches the exact law while C(N, n) <= 2 and departs from it for larger C,
    where the pair signs are dependent.

    :return: the expectation and the number of clipped vertices
    """
    vector = coupling_vector(pupil, n)
    m = pupil.support
    c = vector.support
    bits = vector.pair_count
    _check_cap(bits, cap)
    if bits == 0:
        return np.sqrt(c) / m, 0
    u = _hypercube_vertices(bits, 0, 1 << bits)
    radicand = 1.0 + 2.0 * (u @ vector.entries) / c
    clipped = int(np.count_nonzero(radicand < 0.0))
    return float(np.sqrt(c) / m * np.mean(np.sqrt(np.maximum(0.0, radicand)))), clipped


def binary_mtf_expectation_lower_bound(n: int, freq: int, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """
    Aberration-invariant lower bound of E[H_freq] under a Bernoulli-0.5 mask: the exact
    expectation at a = 1, which reduces to E|S_1 + ... + S_C| / M for i.i.d. signs S.
    """
    n = _check_period(n)
    m = support_size(n)
    if not 0 <= freq <= m - 1:
        raise ValueError(f'frequency index n must be in [0, {m - 1}], but was {freq!r}')
    if freq == 0:
        return 1.0
    c = m - freq
    _check_cap(c, cap)
    k = np.arange(c + 1)
    pmf = scipy.stats.binom.pmf(k, c, 0.5)
    return float(np.sum(pmf * np.abs(2 * k - c)) / m)


def binary_mtf_second_moment(pupil: PupilFunction, n: int, p: float, variant: str = 'squared') -> float:
    """
    Closed-form E[H_n^2] under a Bernoulli-*p* phase mask, 0 <= n < M.

    With mu = 1 - 2p and theta_j = phi_j - phi_{j-n}:
    E[H_n^2] = C / M^2
               + mu^2 / M^2 * (sum_{j=n}^{M-n-1} e^{i(2phi_j - phi_{j-n} - phi_{j+n})}
                               + sum_{j=2n}^{M-1} e^{i(phi_j - 2phi_{j-n} + phi_{j-2n})})
               + mu^4 / M^2 * sum_j sum_{k != j, j +- n} e^{i(theta_j - theta_k)}.

    The variant "linear" normalizes by M instead of M^2; it is kept as a negative control.
    """
    if variant not in SECOND_MOMENT_VARIANTS:
        raise ValueError(f'variant must be one of {SECOND_MOMENT_VARIANTS}, but was {variant!r}')
    if not 0.0 <= p <= 1.0:
        raise ValueError(f'Bernoulli probability p must be in [0, 1], but was {p!r}')
    n = _check_frequency(pupil, n, lowest=0)
    if n == 0:
        return 1.0
    m = pupil.support
    c = m - n
    phi = pupil.phase
    mu = 1.0 - 2.0 * p

    j = np.arange(n, m - n)
    triple = np.sum(np.exp(1j * (2.0 * phi[j] - phi[j - n] - phi[j + n])))
    j = np.arange(2 * n, m)
    triple += np.sum(np.exp(1j * (phi[j] - 2.0 * phi[j - n] + phi[j - 2 * n])))

    theta = _lag_phases(pupil, n)
    index = np.arange(n, m)
    distance = np.abs(index[:, np.newaxis] - index[np.newaxis, :])
    keep = (distance != 0) & (distance != n)
    quad = np.sum(np.exp(1j * (theta[:, np.newaxis] - theta[np.newaxis, :]))[keep])

    total = c + mu ** 2 * triple + mu ** 4 * quad
    norm = m if variant == 'linear' else m * m
    return float(np.real(total)) / norm


def _ensemble_chunk(pupil: PupilFunction, spec: MaskSpec, master_seed: int, start: int, stop: int) -> np.ndarray:
    masks = np.empty((stop - start, pupil.period), dtype=np.float64)
    for row, trial in enumerate(range(start, stop)):
        rng = StreamKey(master_seed, trial).generator()
        masks[row] = sample_mask_block(spec, pupil.period, 1, rng)[0]
    return mtf_batch(pupil.amplitude, pupil.phase[np.newaxis, :] + masks)


def monte_carlo_mtf(pupil: PupilFunction,
                    spec: MaskSpec,
                    trials: int,
                    master_seed: int,
                    raw_cap: int = DEFAULT_RAW_CAP,
                    executor: Executor = None) -> MtfEnsemble:
    """
    Monte Carlo ensemble of masked MTFs.

    Trial k draws its mask from the substream StreamKey(master_seed, k); chunks of trials may run
    on *executor*, and results are gathered in trial order, so the ensemble is bit-reproducible
    whatever the schedule.

    :param pupil: the aberrated pupil
    :param spec: the mask distribution
    :param trials: number of mask draws K >= 1
    :param master_seed: the master seed
    :param raw_cap: retain the raw K x N draws if K <= raw_cap
    :param executor: optional executor for parallel chunks
    :return: the ensemble
    """
    if trials < 1:
        raise ValueError(f'trials must be positive, but was {trials!r}')
    bounds = [(start, min(trials, start + _ENSEMBLE_CHUNK_SIZE))
              for start in range(0, trials, _ENSEMBLE_CHUNK_SIZE)]
    with measure_time(tag=f'monte carlo ensemble of {trials} {spec.kind} masks, N={pupil.period}', logger=_LOG):
        if executor is None:
            chunks = [_ensemble_chunk(pupil, spec, master_seed, start, stop) for start, stop in bounds]
        else:
            chunks = list(executor.map(lambda b: _ensemble_chunk(pupil, spec, master_seed, *b), bounds))
    return MtfEnsemble.from_draws(np.concatenate(chunks, axis=0), raw_cap=raw_cap)
