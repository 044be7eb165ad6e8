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

import datetime
import logging
import os
import threading
from concurrent.futures import Executor, ThreadPoolExecutor
from typing import Any, Dict, List, Optional

from . import __version__
from .config import ExperimentConfig
from .dataio import write_json
from .defaults import MANIFEST_FILE_NAME, THREADS_ENV_VAR
from .errors import WavemaskConfigError, WavemaskError
from .perf import measure_time_cm
from .randstats import StreamKey

_LOG = logging.getLogger('wavemask')


class RunManifest:
    """
    Record of a run: the effective configuration and its hash, the tool version,
    and every output file with the stream key of the cell that produced it.
    """

    def __init__(self, config: ExperimentConfig, started: str = None):
        self.config = config
        self.config_hash = config.config_hash
        self.version = __version__
        self.started = started
        self.outputs: List[Dict[str, Any]] = []
        self.cells: List[Dict[str, Any]] = []
        self.timings: Dict[str, float] = {}
        self.status = 'running'
        self.failed_checks: List[str] = []

    @property
    def paths(self) -> List[str]:
        return [output['path'] for output in self.outputs]

    def to_dict(self) -> Dict[str, Any]:
        return dict(config=self.config.to_dict(),
                    config_hash=self.config_hash,
                    version=self.version,
                    started=self.started,
                    status=self.status,
                    failed_checks=list(self.failed_checks),
                    outputs=list(self.outputs),
                    cells=list(self.cells),
                    timings=dict(self.timings))


class ExperimentContext:
    """
    Everything an experiment needs besides its configuration: the output directory,
    the work pool, the run manifest and timing helpers.

    Experiments compute in the pool and register files through this context from the
    calling thread only.
    """

    def __init__(self, config: ExperimentConfig, max_workers: int = None):
        self._config = config
        self._lock = threading.RLock()
        self._max_workers = max_workers if max_workers is not None else threads_from_env()
        self._executor: Optional[ThreadPoolExecutor] = None
        self.base_dir = os.path.abspath(config.output_dir)
        started = datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0).isoformat()
        self.manifest = RunManifest(config, started=started)
        self.measure_time = measure_time_cm(logger=_LOG, sink=self.manifest.timings)

    @property
    def config(self) -> ExperimentConfig:
        return self._config

    @property
    def max_workers(self) -> int:
        return self._max_workers

    @property
    def executor(self) -> Optional[Executor]:
        """The work pool, or None if only one worker is allowed."""
        if self._max_workers <= 1:
            return None
        with self._lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=self._max_workers,
                                                    thread_name_prefix='wavemask')
            return self._executor

    def map(self, fn, items) -> List[Any]:
        """Apply *fn* to *items* in the pool and return the results in item order."""
        items = list(items)
        executor = self.executor
        if executor is None:
            return [fn(item) for item in items]
        return list(executor.map(fn, items))

    def stream_key(self, index: int) -> StreamKey:
        return StreamKey(self._config.seed, index)

    def make_dir(self, *names: str) -> str:
        path = os.path.join(self.base_dir, *names)
        try:
            os.makedirs(path, exist_ok=True)
        except OSError as e:
            raise WavemaskConfigError(f'field "output_dir": cannot create directory {path!r}: {e}') from e
        if not os.access(path, os.W_OK):
            raise WavemaskConfigError(f'field "output_dir": directory {path!r} is not writable')
        return path

    def get_path(self, *names: str) -> str:
        return os.path.join(self.base_dir, *names)

    def add_output(self, path: str, kind: str, stream_key: StreamKey = None, **attrs):
        """Register an output file written below the output directory."""
        rel_path = os.path.relpath(path, self.base_dir).replace(os.sep, '/')
        if rel_path.startswith('..'):
            raise WavemaskError(f'output {path!r} lies outside of the output directory {self.base_dir!r}')
        entry = dict(path=rel_path, kind=kind, **attrs)
        if stream_key is not None:
            entry['stream_key'] = stream_key.to_dict()
        with self._lock:
            self.manifest.outputs.append(entry)

    def add_cell(self, cell: Dict[str, Any]):
        with self._lock:
            self.manifest.cells.append(cell)

    def write_manifest(self, status: str = 'ok') -> str:
        """
        Write the manifest to the output directory after checking that every listed output exists.

        :return: the manifest path
        """
        missing = [p for p in self.manifest.paths if not os.path.isfile(self.get_path(p))]
        if missing:
            raise WavemaskError(f'outputs missing from {self.base_dir!r}: {", ".join(missing)}')
        self.manifest.status = status
        path = self.get_path(MANIFEST_FILE_NAME)
        write_json(self.manifest.to_dict(), path)
        _LOG.info(f'manifest written to {path!r}')
        return path

    def close(self):
        with self._lock:
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None


def threads_from_env() -> int:
    """
    Size of the work pool: the value of WAVEMASK_THREADS, else the number of CPUs.
    """
    value = os.environ.get(THREADS_ENV_VAR)
    if value is None or value.strip() == '':
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except ValueError as e:
        raise WavemaskConfigError(f'environment variable {THREADS_ENV_VAR} must be an integer, '
                                  f'but was {value!r}') from e
    if threads < 1:
        raise WavemaskConfigError(f'environment variable {THREADS_ENV_VAR} must be >= 1, but was {threads}')
    return threads
