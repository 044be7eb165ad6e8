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

import functools
import logging
import time
from contextlib import AbstractContextManager
from typing import Dict, Optional, Union

_DEFAULT_LOGGER = 'wavemask'

LoggerLike = Union[None, str, logging.Logger]


def _resolve_logger(logger: LoggerLike) -> logging.Logger:
    if isinstance(logger, logging.Logger):
        return logger
    return logging.getLogger(logger or _DEFAULT_LOGGER)


def measure_time_cm(logger: LoggerLike = None, sink: Dict[str, float] = None, disabled: bool = False):
    """
    Get a factory for timing context managers that share a logger and a timings sink.

        measure_time = measure_time_cm(sink=timings)
        with measure_time('check ks-uniform'):
            run_check()
        # timings['check ks-uniform'] is now the duration in milliseconds

    :param logger: Logger or logger name, defaults to "wavemask".
    :param sink: Optional dict receiving one ``tag -> duration_ms`` entry per timed block.
    :param disabled: If True, blocks are neither timed nor logged.
    :return: a callable with the signature of measure_time(tag)
    """
    if disabled:
        return _no_timing
    return functools.partial(measure_time, logger=logger, sink=sink)


class measure_time(AbstractContextManager):
    """
    Time a block of code. Tagged blocks are logged at INFO level and recorded into *sink*.
    The block's exception, if any, propagates; the duration is recorded anyway.
    """

    def __init__(self, tag: str = None, logger: LoggerLike = None, sink: Dict[str, float] = None):
        self._tag = tag
        self._logger = _resolve_logger(logger)
        self._sink = sink
        self._start = None
        self.duration: Optional[float] = None

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.duration = time.perf_counter() - self._start
        if self._tag:
            self._logger.info('%s: took %.2fms', self._tag, self.duration_ms)
            if self._sink is not None:
                self._sink[self._tag] = self.duration_ms

    @property
    def duration_ms(self) -> Optional[float]:
        return None if self.duration is None else self.duration * 1000.


class _no_timing(AbstractContextManager):

    # noinspection PyUnusedLocal
    def __init__(self, tag: str = None, logger: LoggerLike = None, sink: Dict[str, float] = None):
        self.duration = None
        self.duration_ms = None

    def __exit__(self, *exc):
        pass
