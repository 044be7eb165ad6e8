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
File formats: binary PGM images with a JSON sidecar, long-format CSV tables and JSON documents.

All writers are deterministic functions of their inputs. Floats are written so that they parse
back to the identical 64-bit value.
"""

import json
import logging
import os
import re
from typing import Any, Dict, Iterable, Sequence, Tuple

import numpy as np
import pandas as pd
from PIL import Image

from .errors import PgmHeaderError, PgmMaxvalError, PgmTruncatedError

_LOG = logging.getLogger('wavemask')

PGM_MAXVAL = 255
PGM_DEGENERATE_LEVEL = 128
SIDECAR_SUFFIX = '.json'

CSV_COLUMNS = ('experiment', 'aberration', 'strength', 'sigma', 'masked', 'n_or_metric', 'value')

_PGM_TOKEN = re.compile(rb'(?:\s|#[^\n]*\n)*([^\s#]+)')


def _read_header_token(data: bytes, offset: int, field: str):
    match = _PGM_TOKEN.match(data, offset)
    if match is None:
        raise PgmHeaderError(f'PGM header ends before field {field!r} at byte offset {offset}')
    return match.group(1), match.end()


def load_pgm(path: str) -> np.ndarray:
    """
    Load a binary (P5) PGM image of maxval 255 and map its pixels to [0, 1] by v / 255.

    :param path: the file path
    :return: the image as float64 array of shape (height, width)
    :raise PgmHeaderError: if the header is malformed
    :raise PgmMaxvalError: if the maxval is not 255
    :raise PgmTruncatedError: if the raster is shorter than width * height bytes
    """
    with open(path, 'rb') as fp:
        data = fp.read()

    magic, offset = _read_header_token(data, 0, 'magic')
    if magic != b'P5':
        raise PgmHeaderError(f'{path!r} is not a binary PGM file, magic number is {magic[:8]!r}')
    values = []
    for field in ('width', 'height', 'maxval'):
        token, offset = _read_header_token(data, offset, field)
        if not token.isdigit():
            raise PgmHeaderError(f'PGM header field {field!r} must be a positive integer, but was {token[:16]!r}')
        values.append(int(token))
    width, height, maxval = values
    if width <= 0 or height <= 0:
        raise PgmHeaderError(f'PGM image size must be positive, but was {width}x{height}')
    if maxval != PGM_MAXVAL:
        raise PgmMaxvalError(f'unsupported PGM maxval {maxval}, only {PGM_MAXVAL} is supported')
    if offset >= len(data) or not data[offset:offset + 1].isspace():
        raise PgmHeaderError(f'PGM header must end with a single whitespace at byte offset {offset}')
    offset += 1

    size = width * height
    if len(data) - offset < size:
        raise PgmTruncatedError(f'PGM raster of {width}x{height} truncated at byte offset {len(data)}, '
                                f'expected {offset + size} bytes', len(data))
    raster = np.frombuffer(data, dtype=np.uint8, count=size, offset=offset)
    return raster.reshape(height, width).astype(np.float64) / PGM_MAXVAL


def quantize(img: np.ndarray) -> Tuple[np.ndarray, Dict[str, Any]]:
    """
    Map [min, max] of *img* affinely to [0, 255] and round half to even.
    A constant image maps to the level 128.

    :return: the uint8 raster and the mapping
    """
    img = np.asarray(img, dtype=np.float64)
    lo = float(np.min(img))
    hi = float(np.max(img))
    if hi > lo:
        scale = PGM_MAXVAL / (hi - lo)
        raster = np.rint((img - lo) * scale)
        mapping = dict(min=lo, max=hi, scale=scale, degenerate=False)
    else:
        raster = np.full(img.shape, PGM_DEGENERATE_LEVEL, dtype=np.float64)
        mapping = dict(min=lo, max=hi, scale=None, degenerate=True, level=PGM_DEGENERATE_LEVEL)
    return np.clip(raster, 0, PGM_MAXVAL).astype(np.uint8), mapping


def store_pgm(img: np.ndarray, path: str) -> str:
    """
    Store *img* as binary PGM (P5, maxval 255) and write the intensity mapping to a sidecar JSON
    file next to it.

    :return: the path of the sidecar file
    """
    raster, mapping = quantize(img)
    if raster.ndim != 2:
        raise ValueError(f'PGM images must be 2-D, but shape is {raster.shape}')
    Image.fromarray(raster).save(path, format='PPM')
    sidecar_path = path + SIDECAR_SUFFIX
    write_json(dict(format='P5', maxval=PGM_MAXVAL, shape=list(raster.shape), mapping=mapping), sidecar_path)
    return sidecar_path


def write_csv(rows: Iterable[Sequence[Any]], path: str, columns: Sequence[str] = CSV_COLUMNS):
    """
    Write *rows* as UTF-8 CSV with LF line endings and a header; floats keep 17 significant digits.
    """
    frame = pd.DataFrame(list(rows), columns=list(columns))
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n', encoding='utf-8')


def read_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, float_precision='round_trip', keep_default_na=False, na_values=[''])


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(f'object of type {type(value).__name__} is not JSON serializable')


def to_json_text(value: Any) -> str:
    return json.dumps(value, sort_keys=True, indent=2, default=_json_default, allow_nan=True) + '\n'


def write_json(value: Any, path: str):
    """
    Write *value* as UTF-8 JSON with sorted keys.
    """
    with open(path, 'w', encoding='utf-8', newline='\n') as fp:
        fp.write(to_json_text(value))


def read_json(path: str) -> Any:
    with open(path, encoding='utf-8') as fp:
        return json.load(fp)


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
