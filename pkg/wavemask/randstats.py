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
Deterministic random streams and the small statistical test kit used by the theory checks.
"""

import math
from typing import Any, Dict, Sequence, Tuple

import numpy as np
import scipy.stats

from .defaults import DEFAULT_ALPHA

PASS = 'pass'
FAIL = 'fail'

_UINT64_MASK = (1 << 64) - 1


class StreamKey:
    """
    Key of a counter-based random substream.

    Streams are Philox generators keyed by the 128-bit pair (*master_seed*, *trial_index*).
    Equal keys always give identical draw sequences, distinct keys give independent streams,
    whatever the order in which they are created.
    """

    def __init__(self, master_seed: int, trial_index: int):
        self._master_seed = int(master_seed) & _UINT64_MASK
        self._trial_index = int(trial_index) & _UINT64_MASK

    @property
    def master_seed(self) -> int:
        return self._master_seed

    @property
    def trial_index(self) -> int:
        return self._trial_index

    def generator(self) -> np.random.Generator:
        key = np.array([self._master_seed, self._trial_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> 'StreamKey':
        """Derive the key of a sub-cell, e.g. one trial inside an experiment cell."""
        return StreamKey(hash_seed(self._master_seed, self._trial_index), index)

    def to_dict(self) -> Dict[str, int]:
        return dict(master_seed=self._master_seed, trial_index=self._trial_index)

    def __eq__(self, other):
        return isinstance(other, StreamKey) \
               and self._master_seed == other._master_seed \
               and self._trial_index == other._trial_index

    def __hash__(self):
        return hash((self._master_seed, self._trial_index))

    def __repr__(self):
        return f'StreamKey({self._master_seed}, {self._trial_index})'


def hash_seed(*values: int) -> int:
    """
    Mix integers into a single 64-bit seed using numpy's SeedSequence.
    """
    seq = np.random.SeedSequence([int(v) & _UINT64_MASK for v in values])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


class TestReport:
    """
    Outcome of a statistical test at significance level *alpha*.
    """

    # not a test case, keep pytest from collecting it
    __test__ = False

    def __init__(self,
                 name: str,
                 statistic: float,
                 p_value: float,
                 sample_sizes: Tuple[int, int],
                 alpha: float = DEFAULT_ALPHA,
                 details: Dict[str, Any] = None):
        if not 0.0 <= p_value <= 1.0:
            raise ValueError(f'p_value must be in [0, 1], but was {p_value!r}')
        self.name = name
        self.statistic = float(statistic)
        self.p_value = float(p_value)
        self.sample_sizes = (int(sample_sizes[0]), int(sample_sizes[1]))
        self.alpha = float(alpha)
        self.details = dict(details or {})

    @property
    def decision(self) -> str:
        return PASS if self.p_value > self.alpha else FAIL

    @property
    def passed(self) -> bool:
        return self.decision == PASS

    def to_dict(self) -> Dict[str, Any]:
        return dict(name=self.name,
                    statistic=self.statistic,
                    p_value=self.p_value,
                    sample_sizes=list(self.sample_sizes),
                    alpha=self.alpha,
                    decision=self.decision,
                    details=self.details)


def bonferroni_alpha(alpha: float, num_tests: int) -> float:
    if num_tests < 1:
        raise ValueError(f'num_tests must be positive, but was {num_tests!r}')
    return alpha / num_tests


def ks_two_sample(x: Sequence[float], y: Sequence[float],
                  alpha: float = DEFAULT_ALPHA, name: str = 'ks_two_sample') -> TestReport:
    """
    Two-sample Kolmogorov-Smirnov test with asymptotic p-value.

    :param x: first sample
    :param y: second sample
    :param alpha: significance level
    :param name: name recorded in the report
    :return: the test report
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise ValueError('ks_two_sample requires two nonempty samples')
    result = scipy.stats.ks_2samp(x, y, method='asymp')
    return TestReport(name, result.statistic, min(1.0, max(0.0, float(result.pvalue))),
                      (x.size, y.size), alpha=alpha)


def chi_square_uniform(counts: Sequence[int],
                       alpha: float = DEFAULT_ALPHA, name: str = 'chi_square_uniform') -> TestReport:
    """
    Pearson chi-square test of *counts* against the uniform distribution over its categories.

    :param counts: observed counts per category
    :param alpha: significance level
    :param name: name recorded in the report
    :return: the test report
    :raise ValueError: if there are less than two categories or the expected count is below 5
    """
    counts = np.asarray(counts, dtype=np.int64).ravel()
    k = counts.size
    if k < 2:
        raise ValueError(f'chi_square_uniform requires at least 2 categories, but got {k}')
    total = int(counts.sum())
    expected = total / k
    if expected < 5:
        raise ValueError(f'underpowered design: expected count per category is {expected:.3g} < 5')
    result = scipy.stats.chisquare(counts)
    return TestReport(name, result.statistic, min(1.0, max(0.0, float(result.pvalue))),
                      (total, k), alpha=alpha, details=dict(degrees_of_freedom=k - 1))


def proportion_test(successes: int, trials: int, p: float,
                    alpha: float = DEFAULT_ALPHA, name: str = 'proportion_test') -> TestReport:
    """
    Two-sided normal-approximation test of an observed frequency against probability *p*.
    """
    if trials < 1:
        raise ValueError(f'trials must be positive, but was {trials!r}')
    if not 0.0 < p < 1.0:
        raise ValueError(f'p must be in (0, 1), but was {p!r}')
    sigma = math.sqrt(p * (1.0 - p) / trials)
    z = (successes / trials - p) / sigma
    p_value = float(2.0 * scipy.stats.norm.sf(abs(z)))
    return TestReport(name, z, min(1.0, p_value), (successes, trials), alpha=alpha,
                      details=dict(expected=p, observed=successes / trials, sigma=sigma))


def mean_with_stderr(x: Sequence[float]) -> Tuple[float, float]:
    """
    Sample mean and its standard error sqrt(s^2 / K).

    :raise ValueError: if the sample has less than two values
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError(f'mean_with_stderr requires at least 2 values, but got {x.size}')
    return float(np.mean(x)), float(np.sqrt(np.var(x, ddof=1) / x.size))


def within_standard_errors(value: float, estimate: float, stderr: float, k: float = 3.0) -> bool:
    return abs(value - estimate) <= k * stderr
