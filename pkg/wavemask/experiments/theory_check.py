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
Verification suite for the random-mask MTF theory.

Every check draws from its own stream key, derived from its position in THEORY_CHECKS, and
returns a TestReport. Checks that compare many frequencies or profiles at once combine their
p-values with a Bonferroni correction. Identities that hold exactly are decided against
EXACT_TOLERANCE; their reports carry p_value 1 (holds) or 0 (violated).
"""

import itertools
import logging
import os
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import scipy.stats

from ..config import THEORY_CHECK, THEORY_CHECKS
from ..context import ExperimentContext, RunManifest
from ..dataio import write_json
from ..defaults import EXACT_TOLERANCE
from ..errors import WavemaskCheckError, WavemaskConfigError
from ..optics import MaskSpec, MaskSample, PupilFunction, SeidelCoefficients, aperture, apply_mask, make_pupil, \
    sample_mask_block, seidel_phase_1d, pupil_coordinate_1d, support_size
from ..randstats import StreamKey, TestReport, chi_square_uniform, ks_two_sample, proportion_test
from ..transfer import binary_mtf_expectation_exact, binary_mtf_expectation_lower_bound, \
    binary_mtf_expectation_pairwise, binary_mtf_second_moment, diffraction_limit, mtf, mtf_batch, \
    uniform_mtf_from_mask, uniform_mtf_samples

_LOG = logging.getLogger('wavemask')

# Draw counts relative to the configured number of trials K
BINARY_DRAWS_FACTOR = 100
MOMENT_DRAWS_FACTOR = 10

BLOCK_SIZE = 1 << 16
SMALL_PERIOD_LIMIT = 16
CLOSED_FORM_PERIOD = 16
BOUND_PROFILES = 1000
INVARIANCE_STRENGTH = 5.0
BOUND_SLACK = 1e-12
SECOND_MOMENT_PROBABILITIES = (0.1, 0.25, 0.5)
RADEMACHER_PROBABILITIES = (0.1, 0.25, 0.5)
# Rademacher signs R_0 .. R_4 give the four lagged products R_1 R_0, ..., R_4 R_3
HYPERCUBE_SIGNS = 5
NULL_LEVEL = 1e-3
NULL_FREE_MIN_TERMS = 4
NULL_FREE_MIN_NULLS = 3
NULL_FREE_STRENGTHS = np.arange(0.5, 200.5, 0.5)

Check = Callable[[ExperimentContext, StreamKey], Optional[TestReport]]


def _block_bounds(count: int) -> List[range]:
    return [range(start, min(count, start + BLOCK_SIZE)) for start in range(0, count, BLOCK_SIZE)]


def masked_draws(ctx: ExperimentContext, pupil: PupilFunction, spec: MaskSpec, count: int,
                 key: StreamKey) -> np.ndarray:
    """
    *count* masked MTFs of *pupil* as the rows of a matrix. Block b draws from key.child(b).
    """

    def draw_block(item) -> np.ndarray:
        index, block = item
        masks = sample_mask_block(spec, pupil.period, len(block), key.child(index).generator())
        return mtf_batch(pupil.amplitude, pupil.phase[np.newaxis, :] + masks)

    return np.concatenate(ctx.map(draw_block, enumerate(_block_bounds(count))), axis=0)


def masked_power_sums(ctx: ExperimentContext, pupil: PupilFunction, spec: MaskSpec, count: int,
                      key: StreamKey, powers: Sequence[int] = (1, 2, 4)) -> Dict[int, np.ndarray]:
    """
    Per-frequency sums of H_n^k over *count* masked MTFs, for every k in *powers*.
    Blocks are drawn as in masked_draws and reduced in block order.
    """

    def block_sums(item) -> Dict[int, np.ndarray]:
        index, block = item
        masks = sample_mask_block(spec, pupil.period, len(block), key.child(index).generator())
        h = mtf_batch(pupil.amplitude, pupil.phase[np.newaxis, :] + masks)
        return {k: np.sum(h ** k, axis=0) for k in powers}

    partial = ctx.map(block_sums, enumerate(_block_bounds(count)))
    return {k: np.sum([sums[k] for sums in partial], axis=0) for k in powers}


def mean_and_stderr(sum_1: np.ndarray, sum_2: np.ndarray, count: int):
    """Mean and standard error of a sample from its sum and sum of squares."""
    mean = sum_1 / count
    variance = np.maximum(0.0, (sum_2 - count * mean * mean) / (count - 1))
    return mean, np.sqrt(variance / count)


def z_test_p_value(estimate: float, stderr: float, target: float) -> float:
    """
    Two-sided p-value of *estimate* against *target*. Estimates without spread are compared
    exactly, giving 1 or 0.
    """
    tolerance = EXACT_TOLERANCE * max(1.0, abs(target))
    if stderr <= tolerance:
        return 1.0 if abs(estimate - target) <= tolerance else 0.0
    return float(2.0 * scipy.stats.norm.sf(abs(estimate - target) / stderr))


def bonferroni_report(name: str, p_values: Sequence[float], statistic: float, sample_sizes,
                      alpha: float, exact_ok: bool = True, details: Dict[str, Any] = None) -> TestReport:
    """
    Combine a family of p-values: the report's p-value is min(1, m * min(p)).
    A violated exact identity in the same check forces p-value 0.
    """
    p_values = np.asarray(p_values, dtype=np.float64)
    details = dict(details or {})
    details.update(num_tests=int(p_values.size),
                   min_p_value=float(np.min(p_values)) if p_values.size else 1.0,
                   exact_identities_hold=bool(exact_ok))
    p_value = min(1.0, float(np.min(p_values)) * p_values.size) if p_values.size else 1.0
    return TestReport(name, statistic, p_value if exact_ok else 0.0, sample_sizes, alpha=alpha, details=details)


def exact_report(name: str, ok: bool, statistic: float, sample_sizes, alpha: float,
                 details: Dict[str, Any] = None) -> TestReport:
    details = dict(details or {})
    details.update(exact=True)
    return TestReport(name, statistic, 1.0 if ok else 0.0, sample_sizes, alpha=alpha, details=details)


def _random_profile(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2.0 * np.pi, size=n)


def check_diffraction_bound(ctx: ExperimentContext, key: StreamKey) -> TestReport:
    """Random pupils never beat the diffraction limit, and zero aberration attains it."""
    rng = key.generator()
    alpha = ctx.config.alpha
    worst_violation = -np.inf
    worst_equality = 0.0
    for n in ctx.config.periods:
        limit = diffraction_limit(n).values
        h = mtf_batch(aperture(n), rng.uniform(0.0, 2.0 * np.pi, size=(BOUND_PROFILES, n)))
        worst_violation = max(worst_violation, float(np.max(h - limit[np.newaxis, :])))
        worst_equality = max(worst_equality, float(np.max(np.abs(mtf(make_pupil(n)).values - limit))))
    ok = worst_violation <= BOUND_SLACK and worst_equality <= EXACT_TOLERANCE
    return exact_report('diffraction_bound', ok, worst_violation,
                        (BOUND_PROFILES * len(ctx.config.periods), len(ctx.config.periods)), alpha,
                        details=dict(periods=list(ctx.config.periods),
                                     profiles_per_period=BOUND_PROFILES,
                                     max_violation=worst_violation,
                                     max_deviation_at_zero_aberration=worst_equality))


def _check_single_phasor(draws: np.ndarray, m: int) -> float:
    """Largest deviation of H_{M-1} from 1/M, which holds for every mask."""
    return float(np.max(np.abs(draws[:, m - 1] - 1.0 / m)))


def check_uniform_invariance(ctx: ExperimentContext, key: StreamKey) -> TestReport:
    """
    Under a uniform mask the MTF law does not depend on the aberration: per-frequency KS tests
    between zero, sphere and astigmatism profiles.
    """
    config = ctx.config
    n = max(config.periods)
    m = support_size(n)
    trials = config.trials
    profiles = ('none', 'sphere', 'astigmatism')
    draws = {}
    for i, kind in enumerate(profiles):
        coeffs = SeidelCoefficients.of(kind, INVARIANCE_STRENGTH)
        pupil = make_pupil(n, seidel_phase_1d(coeffs, n))
        draws[kind] = masked_draws(ctx, pupil, MaskSpec.uniform(), trials, key.child(i))

    p_values = []
    statistic = 0.0
    max_mean_z = 0.0
    for a, b in itertools.combinations(profiles, 2):
        for freq in range(1, m - 1):
            report = ks_two_sample(draws[a][:, freq], draws[b][:, freq], alpha=config.alpha)
            p_values.append(report.p_value)
            statistic = max(statistic, report.statistic)
            x, y = draws[a][:, freq], draws[b][:, freq]
            pooled = np.sqrt(np.var(x, ddof=1) / x.size + np.var(y, ddof=1) / y.size) if trials > 1 else 0.0
            if pooled > 0.0:
                max_mean_z = max(max_mean_z, abs(float(np.mean(x) - np.mean(y))) / pooled)
    deviation = max(_check_single_phasor(d, m) for d in draws.values())
    return bonferroni_report('uniform_invariance', p_values, statistic, (trials, trials), config.alpha,
                             exact_ok=deviation <= EXACT_TOLERANCE,
                             details=dict(period=n,
                                          profiles=list(profiles),
                                          strength=INVARIANCE_STRENGTH,
                                          frequencies=list(range(1, m - 1)),
                                          max_mean_z=max_mean_z,
                                          single_phasor_deviation=deviation))


def check_closed_form(ctx: ExperimentContext, key: StreamKey) -> TestReport:
    """
    The aberration-free closed form of the uniform-mask MTF agrees with the direct pipeline:
    exactly for equal masks, and in law for independent draws.
    """
    config = ctx.config
    n = min(max(config.periods), CLOSED_FORM_PERIOD)
    m = support_size(n)
    pupil = make_pupil(n)
    direct = masked_draws(ctx, pupil, MaskSpec.uniform(), config.trials, key.child(0))
    closed = uniform_mtf_samples(n, config.trials, key.child(1).generator())

    masks = sample_mask_block(MaskSpec.uniform(), n, 16, key.child(2).generator())
    exact_deviation = max(float(np.max(np.abs(uniform_mtf_from_mask(w)[0]
                                              - mtf(apply_mask(pupil, MaskSample(w))).values)))
                          for w in masks)

    p_values = []
    statistic = 0.0
    for freq in range(1, m - 1):
        report = ks_two_sample(direct[:, freq], closed[:, freq], alpha=config.alpha)
        p_values.append(report.p_value)
        statistic = max(statistic, report.statistic)
    return bonferroni_report('closed_form', p_values, statistic, (config.trials, config.trials), config.alpha,
                             exact_ok=exact_deviation <= EXACT_TOLERANCE,
                             details=dict(period=n,
                                          frequencies=list(range(1, m - 1)),
                                          exact_deviation=exact_deviation))


def check_binary_expectation(ctx: ExperimentContext, key: StreamKey) -> Optional[TestReport]:
    """
    Exact E[H_n] under a fair binary mask, by hypercube enumeration, against Monte Carlo means;
    the aberration-invariant lower bound never exceeds the exact value.
    Runs for every configured period whose largest hypercube fits the enumeration cap.
    """
    config = ctx.config
    periods = [n for n in sorted(config.periods) if support_size(n) - 1 <= config.enumeration_cap]
    if not periods:
        return None
    count = config.trials * BINARY_DRAWS_FACTOR
    spec = MaskSpec.bernoulli(0.5)
    rng = key.generator()
    p_values = []
    statistic = 0.0
    bound_ok = True
    enumerated = []
    rows = []
    cell = 0
    for n in periods:
        m = support_size(n)
        for profile, phase in (('zero', np.zeros(n)), ('random', _random_profile(n, rng))):
            pupil = make_pupil(n, phase)
            cell += 1
            sums = masked_power_sums(ctx, pupil, spec, count, key.child(cell), powers=(1, 2))
            mean, stderr = mean_and_stderr(sums[1], sums[2], count)
            for freq in range(1, m):
                exact = binary_mtf_expectation_exact(pupil, freq, cap=config.enumeration_cap)
                bound = binary_mtf_expectation_lower_bound(n, freq, cap=config.enumeration_cap)
                c = m - freq
                if c * (c - 1) // 2 <= config.enumeration_cap:
                    pairwise, clipped = binary_mtf_expectation_pairwise(pupil, freq, cap=config.enumeration_cap)
                else:
                    pairwise, clipped = None, None
                p_value = z_test_p_value(mean[freq], stderr[freq], exact)
                p_values.append(p_value)
                if stderr[freq] > 0.0:
                    statistic = max(statistic, abs(mean[freq] - exact) / stderr[freq])
                bound_ok = bound_ok and bound <= exact + BOUND_SLACK
                enumerated.append(dict(period=n, n=freq, vertices=1 << c))
                rows.append(dict(period=n, profile=profile, n=freq, exact=exact, lower_bound=bound,
                                 pairwise=pairwise, pairwise_clipped=clipped,
                                 monte_carlo_mean=float(mean[freq]), monte_carlo_stderr=float(stderr[freq]),
                                 p_value=p_value))
    details = dict(draws=count, enumerated=enumerated, results=rows, lower_bound_holds=bound_ok)
    if 8 in periods:
        details['hand_value'] = dict(period=8, n=2, profile='zero',
                                     exact=binary_mtf_expectation_exact(make_pupil(8), 2), expected=0.25)
    return bonferroni_report('binary_expectation', p_values, statistic, (count, len(rows)), config.alpha,
                             exact_ok=bound_ok, details=details)


def check_second_moment(ctx: ExperimentContext, key: StreamKey) -> Optional[TestReport]:
    """
    Closed-form E[H_n^2] under binary masks against Monte Carlo, for several flip probabilities.
    At p = 0.5 the second moment must not depend on the aberration.
    """
    config = ctx.config
    variant = config.second_moment_variant
    periods = [n for n in sorted(config.periods) if n <= SMALL_PERIOD_LIMIT]
    if not periods:
        return None
    count = config.trials * MOMENT_DRAWS_FACTOR
    rng = key.generator()
    p_values = []
    statistic = 0.0
    identity_deviation = 0.0
    variant_z = {'squared': 0.0, 'linear': 0.0}
    rows = []
    cell = 0
    for n in periods:
        m = support_size(n)
        zero = make_pupil(n)
        aberrated = make_pupil(n, _random_profile(n, rng))
        unmasked = mtf(zero).values
        identity_deviation = max(identity_deviation,
                                 max(abs(binary_mtf_second_moment(zero, freq, 0.0, variant=variant)
                                         - unmasked[freq] ** 2) for freq in range(m)))
        moments = {}
        for p in SECOND_MOMENT_PROBABILITIES:
            cell += 1
            sums = masked_power_sums(ctx, aberrated, MaskSpec.bernoulli(p), count, key.child(cell), powers=(2, 4))
            mean, stderr = mean_and_stderr(sums[2], sums[4], count)
            moments[p] = (mean, stderr)
            for freq in range(m):
                closed = binary_mtf_second_moment(aberrated, freq, p, variant=variant)
                p_value = z_test_p_value(mean[freq], stderr[freq], closed)
                p_values.append(p_value)
                if stderr[freq] > 0.0:
                    statistic = max(statistic, abs(mean[freq] - closed) / stderr[freq])
                    for name in variant_z:
                        other = binary_mtf_second_moment(aberrated, freq, p, variant=name)
                        variant_z[name] = max(variant_z[name], abs(mean[freq] - other) / stderr[freq])
                rows.append(dict(period=n, p=p, n=freq, closed_form=closed,
                                 monte_carlo_mean=float(mean[freq]), monte_carlo_stderr=float(stderr[freq]),
                                 p_value=p_value))

        # invariance at p = 0.5: the aberrated ensemble against a zero-aberration ensemble
        cell += 1
        sums = masked_power_sums(ctx, zero, MaskSpec.bernoulli(0.5), count, key.child(cell), powers=(2, 4))
        zero_mean, zero_stderr = mean_and_stderr(sums[2], sums[4], count)
        mean, stderr = moments[0.5]
        for freq in range(1, m):
            pooled = float(np.hypot(stderr[freq], zero_stderr[freq]))
            p_values.append(z_test_p_value(mean[freq], pooled, zero_mean[freq]))

    agreeing = min(variant_z, key=variant_z.get)
    details = dict(variant=variant,
                   draws=count,
                   periods=periods,
                   probabilities=list(SECOND_MOMENT_PROBABILITIES),
                   identity_deviation_at_p0=identity_deviation,
                   max_abs_z_by_variant=variant_z,
                   variant_agreeing_with_monte_carlo=agreeing,
                   refuted_variants=[name for name in variant_z if name != agreeing],
                   results=rows)
    return bonferroni_report('second_moment', p_values, statistic, (count, len(rows)), config.alpha,
                             exact_ok=identity_deviation <= EXACT_TOLERANCE, details=details)


def check_rademacher(ctx: ExperimentContext, key: StreamKey) -> TestReport:
    """exp(i pi B) with B ~ Bern(p) is -1 with probability p and +1 otherwise."""
    config = ctx.config
    count = config.trials * MOMENT_DRAWS_FACTOR
    rng = key.generator()
    p_values = []
    statistic = 0.0
    off_sign = 0.0
    observed = {}
    for p in RADEMACHER_PROBABILITIES:
        phases = sample_mask_block(MaskSpec.bernoulli(p), count, 1, rng)[0]
        values = np.real(np.exp(1j * phases))
        off_sign = max(off_sign, float(np.max(np.abs(np.abs(values) - 1.0))))
        report = proportion_test(int(np.count_nonzero(values < 0.0)), count, p, alpha=config.alpha)
        p_values.append(report.p_value)
        statistic = max(statistic, abs(report.statistic))
        observed[str(p)] = report.details['observed']
    return bonferroni_report('rademacher', p_values, statistic, (count, len(p_values)), config.alpha,
                             exact_ok=off_sign <= EXACT_TOLERANCE,
                             details=dict(probabilities=list(RADEMACHER_PROBABILITIES), observed=observed))


def check_hypercube(ctx: ExperimentContext, key: StreamKey) -> TestReport:
    """
    The lagged products R_j R_{j-1} of fair Rademacher signs are uniform on the hypercube:
    chi-square test over its 2^4 vertices.
    """
    config = ctx.config
    count = config.trials * MOMENT_DRAWS_FACTOR
    phases = sample_mask_block(MaskSpec.bernoulli(0.5), HYPERCUBE_SIGNS, count, key.generator())
    signs = np.rint(np.real(np.exp(1j * phases)))
    lagged = signs[:, 1:] * signs[:, :-1]
    bits = (lagged < 0.0).astype(np.int64)
    vertex = bits @ (1 << np.arange(bits.shape[1]))
    counts = np.bincount(vertex, minlength=1 << bits.shape[1])
    report = chi_square_uniform(counts, alpha=config.alpha, name='hypercube')
    report.details.update(signs=HYPERCUBE_SIGNS, lag=1, vertices=int(counts.size), counts=counts.tolist())
    return report


def check_null_free(ctx: ExperimentContext, key: StreamKey) -> TestReport:
    """
    A strongly sphere-aberrated pupil has near-nulls in its MTF; under a uniform mask the
    5% quantile stays above NULL_LEVEL at every frequency with at least NULL_FREE_MIN_TERMS phasors.
    The strength is the one of NULL_FREE_STRENGTHS with the most unmasked near-nulls; the check
    fails when that count is below NULL_FREE_MIN_NULLS.
    """
    config = ctx.config
    n = max(config.periods)
    m = support_size(n)
    x = pupil_coordinate_1d(n)
    phases = np.zeros((NULL_FREE_STRENGTHS.size, n))
    phases[:, :m] = NULL_FREE_STRENGTHS[:, np.newaxis] * x[np.newaxis, :] ** 4
    unmasked = mtf_batch(aperture(n), phases)[:, 1:m]
    nulls = np.count_nonzero(unmasked < NULL_LEVEL, axis=1)
    best = int(np.lexsort((np.min(unmasked, axis=1), -nulls))[0])
    strength = float(NULL_FREE_STRENGTHS[best])

    pupil = make_pupil(n, phases[best])
    draws = masked_draws(ctx, pupil, MaskSpec.uniform(), config.trials, key)
    q05 = np.quantile(draws, 0.05, axis=0)
    band = list(range(1, m - NULL_FREE_MIN_TERMS + 1))
    worst = float(np.min(q05[band])) if band else 1.0
    near_nulls = int(nulls[best])
    if near_nulls < NULL_FREE_MIN_NULLS:
        _LOG.warning(f'null_free: only {near_nulls} unmasked near-nulls at period {n}, '
                     f'at least {NULL_FREE_MIN_NULLS} are required')
    ok = near_nulls >= NULL_FREE_MIN_NULLS and worst > NULL_LEVEL
    return exact_report('null_free', ok, worst, (config.trials, len(band)), config.alpha,
                        details=dict(period=n,
                                     sphere_strength=strength,
                                     unmasked_near_nulls=near_nulls,
                                     min_near_nulls=NULL_FREE_MIN_NULLS,
                                     unmasked_min=float(np.min(unmasked[best])),
                                     null_level=NULL_LEVEL,
                                     frequencies=band,
                                     q05=q05.tolist()))


CHECKS: Dict[str, Check] = dict(diffraction_bound=check_diffraction_bound,
                                uniform_invariance=check_uniform_invariance,
                                closed_form=check_closed_form,
                                binary_expectation=check_binary_expectation,
                                second_moment=check_second_moment,
                                rademacher=check_rademacher,
                                hypercube=check_hypercube,
                                null_free=check_null_free)


def run_theory_check(ctx: ExperimentContext) -> RunManifest:
    """
    Run the configured checks and write one report per check.

    :raise WavemaskCheckError: after all reports are written, if any check failed
    """
    config = ctx.config
    out_dir = ctx.make_dir(THEORY_CHECK)
    reports = []
    skipped = []
    for name in config.checks:
        key = ctx.stream_key(THEORY_CHECKS.index(name))
        with ctx.measure_time(f'theory check {name}'):
            try:
                report = CHECKS[name](ctx, key)
            except ValueError as e:
                raise WavemaskConfigError(f'theory check "{name}" cannot run with this configuration: {e}') from e
        if report is None:
            _LOG.warning(f'theory check {name!r} skipped: no eligible period in {list(config.periods)}')
            skipped.append(name)
            continue
        path = os.path.join(out_dir, f'{name}.json')
        write_json(report.to_dict(), path)
        ctx.add_output(path, 'json', stream_key=key, check=name, decision=report.decision)
        if report.passed:
            _LOG.info(f'theory check {name!r} passed (p={report.p_value:.3g})')
        else:
            _LOG.error(f'theory check {name!r} failed (p={report.p_value:.3g}, alpha={report.alpha})')
        reports.append(report)

    failed = [report.name for report in reports if not report.passed]
    summary = dict(experiment=THEORY_CHECK,
                   checks=[dict(name=r.name, decision=r.decision, statistic=r.statistic, p_value=r.p_value)
                           for r in reports],
                   skipped=skipped,
                   failed=failed)
    path = ctx.get_path(f'{THEORY_CHECK}.json')
    write_json(summary, path)
    ctx.add_output(path, 'json')
    ctx.manifest.failed_checks = failed
    if failed:
        raise WavemaskCheckError(f'theory checks failed: {", ".join(failed)}', failed_checks=failed)
    return ctx.manifest
