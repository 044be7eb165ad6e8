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

import click

from wavemask import __version__


@click.command(name='wavemask')
@click.version_option(__version__)
@click.argument('config', metavar='CONFIG')
@click.option('--seed', '-s', metavar='U64', type=click.IntRange(0, 2 ** 64 - 1), default=None,
              help='Master seed. Overrides the "seed" field of CONFIG.')
@click.option('--out', '-o', metavar='DIR', default=None,
              help='Output directory. Overrides the "output_dir" field of CONFIG.')
@click.option('--verbose', '-v', is_flag=True,
              help='Delegate logging to the console (stderr).')
def run_wavemask(config: str, seed: int, out: str, verbose: bool):
    """
    Run the wavefront randomization experiment described by the JSON file CONFIG.

    Exit status is 0 on success, 1 if a theory check failed and 2 for configuration errors.
    """
    from wavemask.runner import run

    exit_code = run(config, seed=seed, output_dir=out, verbose=verbose)
    click.get_current_context().exit(exit_code)


def main(args=None):
    run_wavemask.main(args=args)


if __name__ == '__main__':
    main()
