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
Test scenes for the reconstruction sweeps.

The default scene is generated procedurally in this module: a grayscale composition of a smooth
sky gradient, a bright disk, a dark silhouette with thin straight edges, a sinusoidal grating
and a checkerboard, giving a mix of flat regions, edges and fine periodic detail.
"""

import logging
from typing import Optional

import numpy as np
import scipy.ndimage

from ..defaults import DEFAULT_GRID_SIDE
from .imaging import check_image

_LOG = logging.getLogger('wavemask')


def make_test_scene(side: int = DEFAULT_GRID_SIDE) -> np.ndarray:
    """
    Deterministic *side* x *side* test scene with values in [0, 1].
    """
    if side < 8:
        raise ValueError(f'scene side must be >= 8, but was {side!r}')
    v, u = np.meshgrid(np.arange(side) / side, np.arange(side) / side, indexing='ij')

    scene = 0.25 + 0.35 * (1.0 - v)

    # bright disk
    scene[(u - 0.32) ** 2 + (v - 0.3) ** 2 < 0.15 ** 2] = 0.9

    # silhouette: a dark body with a narrow stand
    body = (np.abs(u - 0.32) < 0.12 + 0.25 * (v - 0.45)) & (v > 0.45) & (v < 0.8)
    scene[body] = 0.08
    scene[(np.abs(u - 0.32) < 0.01) & (v >= 0.8)] = 0.08
    scene[(np.abs(u - 0.32 - 0.6 * (v - 0.8)) < 0.01) & (v >= 0.8)] = 0.08

    # grating with a period of 8 pixels at side 256
    grating = (u > 0.6) & (u < 0.95) & (v > 0.1) & (v < 0.4)
    scene[grating] = 0.5 + 0.4 * np.sin(2.0 * np.pi * 32.0 * u[grating])

    # checkerboard
    checker = (u > 0.6) & (u < 0.95) & (v > 0.55) & (v < 0.9)
    squares = (np.floor(u * 16.0) + np.floor(v * 16.0)) % 2
    scene[checker] = 0.2 + 0.6 * squares[checker]

    return np.clip(scene, 0.0, 1.0)


def load_scene(path: Optional[str] = None, side: int = DEFAULT_GRID_SIDE) -> np.ndarray:
    """
    Load a PGM scene and resample it to *side* x *side* with linear interpolation,
    or make the procedural test scene if *path* is None.
    """
    if path is None:
        return make_test_scene(side)
    from ..dataio import load_pgm
    image = check_image(load_pgm(path), 'scene')
    height, width = image.shape
    if (height, width) != (side, side):
        _LOG.info(f'resampling scene {path!r} from {width}x{height} to {side}x{side}')
        image = scipy.ndimage.zoom(image, (side / height, side / width), order=1, mode='nearest', grid_mode=True)
        image = np.clip(image, 0.0, 1.0)
    return image
