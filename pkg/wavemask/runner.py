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

import logging
import sys
from typing import Callable, Dict, Optional

from tornado.log import LogFormatter

from . import __version__, __description__
from .config import ExperimentConfig, load_config, MTF_DIST, THEORY_CHECK, RECON_SWEEP
from .context import ExperimentContext, RunManifest
from .errors import WavemaskError, WavemaskCheckError

_LOG = logging.getLogger('wavemask')

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def _experiments() -> Dict[str, Callable[[ExperimentContext], RunManifest]]:
    from .experiments import run_mtf_dist, run_theory_check, run_recon_sweep
    return {MTF_DIST: run_mtf_dist, THEORY_CHECK: run_theory_check, RECON_SWEEP: run_recon_sweep}


def configure_logging(verbose: bool = False, stream=None) -> logging.Handler:
    """
    Send wavemask's log records to *stream* (stderr by default) using tornado's log formatter.
    Only warnings and errors are shown unless *verbose* is set.
    """
    for handler in list(_LOG.handlers):
        if getattr(handler, '_wavemask_console', False):
            _LOG.removeHandler(handler)
    handler = logging.StreamHandler(stream if stream is not None else sys.stderr)
    handler.setFormatter(LogFormatter(color=False))
    handler._wavemask_console = True
    _LOG.addHandler(handler)
    _LOG.setLevel(logging.INFO if verbose else logging.WARNING)
    return handler


def run_experiment(config: ExperimentConfig, max_workers: int = None) -> ExperimentContext:
    """
    Run the experiment selected by the configuration's kind and write its manifest.
    The manifest is also written if checks fail.

    :return: the context of the finished run
    :raise WavemaskError: on configuration errors and failed checks
    """
    ctx = ExperimentContext(config, max_workers=max_workers)
    try:
        ctx.make_dir()
        _LOG.info(f'running {config.kind} with seed {config.seed}, output to {ctx.base_dir!r}, '
                  f'{ctx.max_workers} worker(s)')
        experiment = _experiments()[config.kind]
        with ctx.measure_time(f'{config.kind} run'):
            try:
                experiment(ctx)
            except WavemaskCheckError:
                ctx.write_manifest(status='failed')
                raise
        ctx.write_manifest()
    finally:
        ctx.close()
    return ctx


def run(config_path: str,
        seed: Optional[int] = None,
        output_dir: Optional[str] = None,
        verbose: bool = False) -> int:
    """
    Load a configuration file, apply the command-line overrides and run it.

    :return: the process exit code, 0 on success, 1 if a check failed, 2 on configuration errors
    """
    configure_logging(verbose)
    _LOG.info(f'{__description__}, version {__version__}')
    try:
        config = load_config(config_path)
        overrides = {}
        if seed is not None:
            overrides['seed'] = seed
        if output_dir is not None:
            overrides['output_dir'] = output_dir
        if overrides:
            config = config.replace(**overrides)
        run_experiment(config)
        return EXIT_OK
    except WavemaskError as e:
        _LOG.error(e.reason)
        print(f'error: {e.reason}', file=sys.stderr)
        return e.exit_code
