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
MTF distribution study: for every (aberration, strength) cell, the unmasked MTF and the
per-frequency statistics of the masked MTF over many mask draws.
"""

import itertools
import logging
import os
from typing import Any, Dict, List, Sequence

import numpy as np

from ..config import MTF_DIST
from ..context import ExperimentContext, RunManifest
from ..dataio import write_csv, write_json
from ..optics import SeidelCoefficients, make_pupil, seidel_phase_1d
from ..transfer import Mtf, MtfEnsemble, mtf, monte_carlo_mtf

_LOG = logging.getLogger('wavemask')

ENSEMBLE_STATISTICS = ('mean', 'q05', 'q50', 'q95')


def cell_rows(aberration: str, strength: float, unmasked: Mtf, ensemble: MtfEnsemble) -> List[Sequence[Any]]:
    """
    Long-format CSV rows of one cell; *n_or_metric* is "<statistic>:<n>".
    The unmasked MTF has statistic "mtf".
    """
    rows = [(MTF_DIST, aberration, strength, None, False, f'mtf:{n}', float(value))
            for n, value in enumerate(np.clip(unmasked.values, 0.0, 1.0))]
    for statistic in ENSEMBLE_STATISTICS:
        values = getattr(ensemble, statistic)
        rows.extend((MTF_DIST, aberration, strength, None, True, f'{statistic}:{n}', float(value))
                    for n, value in enumerate(values))
    return rows


def max_pooled_z(ensembles: Sequence[MtfEnsemble]) -> np.ndarray:
    """
    Per frequency, the largest |mean_a - mean_b| / sqrt(se_a^2 + se_b^2) over all pairs of ensembles.
    Frequencies where both means are exact and equal give 0.
    """
    period = ensembles[0].period
    z_max = np.zeros(period)
    for a, b in itertools.combinations(ensembles, 2):
        diff = np.abs(a.mean - b.mean)
        pooled = np.sqrt(a.stderr ** 2 + b.stderr ** 2)
        with np.errstate(divide='ignore', invalid='ignore'):
            z = np.where(pooled > 0.0, diff / pooled, np.where(diff > 1e-12, np.inf, 0.0))
        z_max = np.maximum(z_max, z)
    return z_max


def run_mtf_dist(ctx: ExperimentContext) -> RunManifest:
    config = ctx.config
    out_dir = ctx.make_dir(MTF_DIST)
    cells = [(kind, strength) for kind, strengths in config.aberrations for strength in strengths]
    _LOG.info(f'MTF distribution study: {len(cells)} cells, N={config.n}, '
              f'{config.trials} {config.mask.kind} masks per cell')

    summary_cells: List[Dict[str, Any]] = []
    ensembles = []
    for index, (kind, strength) in enumerate(cells):
        key = ctx.stream_key(index)
        ensemble_seed = key.child(0).master_seed
        coeffs = SeidelCoefficients.of(kind, strength)
        pupil = make_pupil(config.n, seidel_phase_1d(coeffs, config.n))
        with ctx.measure_time(f'mtf_dist cell {index} {kind}={strength:g}'):
            unmasked = mtf(pupil)
            ensemble = monte_carlo_mtf(pupil, config.mask, config.trials, ensemble_seed,
                                       raw_cap=config.raw_cap, executor=ctx.executor)
        ensembles.append(ensemble)

        path = os.path.join(out_dir, f'{index:03d}_{kind}_{strength:g}.csv')
        write_csv(cell_rows(kind, strength, unmasked, ensemble), path)
        ctx.add_output(path, 'csv', stream_key=key, aberration=kind, strength=strength)
        cell = dict(index=index,
                    aberration=kind,
                    strength=strength,
                    coefficients=coeffs.to_dict(),
                    stream_key=key.to_dict(),
                    ensemble_seed=ensemble_seed,
                    csv=ctx.manifest.outputs[-1]['path'],
                    unmasked=np.clip(unmasked.values, 0.0, 1.0).tolist(),
                    ensemble=ensemble.to_dict())
        ctx.add_cell(dict(index=index, aberration=kind, strength=strength, stream_key=key.to_dict()))
        summary_cells.append(cell)

    z_max = max_pooled_z(ensembles) if len(ensembles) > 1 else np.zeros(config.n)
    summary = dict(experiment=MTF_DIST,
                   n=config.n,
                   mask=config.mask.to_dict(),
                   trials=config.trials,
                   cells=summary_cells,
                   cross_cell=dict(max_mean_z=z_max.tolist(),
                                   max_mean_z_overall=float(np.max(z_max))))
    path = ctx.get_path(f'{MTF_DIST}.json')
    write_json(summary, path)
    ctx.add_output(path, 'json')
    return ctx.manifest
