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
Reconstruction sweep: every (aberration, strength, sigma) cell is imaged with and without the
random mask, deconvolved and scored. One mask is drawn at the start of the sweep and reused by
every masked cell.
"""

import logging
import os
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..config import RECON_SWEEP
from ..context import ExperimentContext, RunManifest
from ..dataio import store_pgm, write_csv, write_json
from ..errors import WavemaskConfigError
from ..im import ReconRecord, load_scene, pupil_diameter, simulate_recon
from ..optics import sample_mask_block

_LOG = logging.getLogger('wavemask')

IMAGE_NAMES = ('measurement', 'psf', 'recon')

RECORD_METRICS = ('ssim', 'ssim_measurement', 'nsr', 'psf_sigma', 'passband_mtf_min')

Cell = Tuple[str, float, float, bool]

# SSIM pattern expected at a fixed sigma: the unmasked score falls by more than MIN_UNMASKED_DROP
# over the strength grid while the masked score stays within MAX_MASKED_RANGE
MIN_UNMASKED_DROP = 0.2
MAX_MASKED_RANGE = 0.1


def sweep_cells(aberrations: Sequence[Tuple[str, Sequence[float]]], sigmas: Sequence[float]) -> List[Cell]:
    return [(kind, strength, sigma, masked)
            for kind, strengths in aberrations
            for strength in strengths
            for sigma in sigmas
            for masked in (False, True)]


def record_rows(record: ReconRecord) -> List[Sequence[Any]]:
    values = record.to_dict()
    rows = [(RECON_SWEEP, record.aberration, record.strength, record.sigma, record.masked, metric, values[metric])
            for metric in RECORD_METRICS]
    rows.append((RECON_SWEEP, record.aberration, record.strength, record.sigma, record.masked,
                 'stream_trial_index', record.stream_key.trial_index))
    return rows


def summarize(records: Sequence[ReconRecord]) -> List[Dict[str, Any]]:
    """
    Per (aberration, sigma): how SSIM develops with aberration strength, masked and unmasked.
    """
    groups: Dict[Tuple[str, float], Dict[bool, List[ReconRecord]]] = {}
    for record in records:
        groups.setdefault((record.aberration, record.sigma), {False: [], True: []})[record.masked].append(record)
    summary = []
    for (kind, sigma), by_mask in groups.items():
        unmasked = [r.ssim_recon for r in sorted(by_mask[False], key=lambda r: r.strength)]
        masked = [r.ssim_recon for r in sorted(by_mask[True], key=lambda r: r.strength)]
        decreasing = bool(np.all(np.diff(unmasked) < 0.0))
        drop = float(unmasked[0] - unmasked[-1])
        masked_range = float(np.ptp(masked))
        wins = bool(masked[-1] > unmasked[-1])
        summary.append(dict(aberration=kind,
                            sigma=sigma,
                            strengths=sorted(r.strength for r in by_mask[False]),
                            ssim_unmasked=unmasked,
                            ssim_masked=masked,
                            unmasked_strictly_decreasing=decreasing,
                            unmasked_drop=drop,
                            masked_range=masked_range,
                            masked_wins_at_max_strength=wins,
                            pattern_holds=decreasing and drop > MIN_UNMASKED_DROP
                            and masked_range < MAX_MASKED_RANGE and wins))
    return summary


def run_recon_sweep(ctx: ExperimentContext) -> RunManifest:
    config = ctx.config
    out_dir = ctx.make_dir(RECON_SWEEP)

    try:
        scene = load_scene(config.scene, config.side)
    except OSError as e:
        raise WavemaskConfigError(f'field "scene": cannot read {config.scene!r}: {e}') from e
    diameter = pupil_diameter(config.side, config.pupil_fraction)
    mask_key = ctx.stream_key(0)
    mask = sample_mask_block(config.mask, diameter * diameter, 1, mask_key.generator()).reshape(diameter, diameter)

    scene_path = os.path.join(out_dir, 'scene.pgm')
    ctx.add_output(store_pgm(scene, scene_path), 'json')
    ctx.add_output(scene_path, 'pgm', image='scene')

    cells = sweep_cells(config.aberrations, config.sigmas)
    _LOG.info(f'reconstruction sweep: {len(cells)} cells on a {config.side}x{config.side} grid, '
              f'pupil diameter {diameter}, {config.mask.kind} mask')

    def run_cell(item) -> ReconRecord:
        index, (kind, strength, sigma, masked) = item
        key = ctx.stream_key(index)
        record = simulate_recon(scene, kind, strength, sigma, key.generator(),
                                mask_phases=mask if masked else None,
                                pupil_fraction=config.pupil_fraction,
                                psf_noise_scale=config.psf_noise_scale,
                                nsr=config.nsr)
        record.stream_key = key
        return record

    with ctx.measure_time(f'recon sweep of {len(cells)} cells'):
        records = ctx.map(run_cell, enumerate(cells, start=1))

    rows = []
    for record in records:
        key = record.stream_key
        base_name = f'{key.trial_index:03d}_{record.aberration}_{record.strength:g}_{record.sigma:g}_' \
                    f'{"masked" if record.masked else "unmasked"}'
        for name in IMAGE_NAMES:
            path = os.path.join(out_dir, f'{base_name}_{name}.pgm')
            sidecar_path = store_pgm(record.images[name], path)
            ctx.add_output(path, 'pgm', stream_key=key, image=name)
            ctx.add_output(sidecar_path, 'json', stream_key=key)
            record.files[name] = os.path.relpath(path, ctx.base_dir).replace(os.sep, '/')
        ctx.add_cell(dict(aberration=record.aberration, strength=record.strength, sigma=record.sigma,
                          masked=record.masked, stream_key=key.to_dict(), files=dict(record.files)))
        rows.extend(record_rows(record))

    csv_path = ctx.get_path(f'{RECON_SWEEP}.csv')
    write_csv(rows, csv_path)
    ctx.add_output(csv_path, 'csv')

    groups = summarize(records)
    for group in groups:
        if not group['pattern_holds']:
            _LOG.warning(f'recon sweep: {group["aberration"]} at sigma={group["sigma"]:g}: masked '
                         f'{group["ssim_masked"]} vs unmasked {group["ssim_unmasked"]} does not show a falling '
                         f'unmasked and a flat masked score')

    summary = dict(experiment=RECON_SWEEP,
                   side=config.side,
                   pupil_diameter=diameter,
                   mask=config.mask.to_dict(),
                   mask_stream_key=mask_key.to_dict(),
                   scene=config.scene if config.scene is not None else 'procedural test scene',
                   records=[record.to_dict() for record in records],
                   summary=groups)
    json_path = ctx.get_path(f'{RECON_SWEEP}.json')
    write_json(summary, json_path)
    ctx.add_output(json_path, 'json')
    return ctx.manifest
