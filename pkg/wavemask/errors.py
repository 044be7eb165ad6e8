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

from typing import Tuple


class WavemaskError(Exception):
    """
    Base class of all errors raised by wavemask.
    The *exit_code* is the process exit status the CLI reports for it.
    """

    def __init__(self, reason: str, exit_code: int = 1):
        super().__init__(reason)
        self.reason = reason
        self.exit_code = exit_code


class WavemaskConfigError(WavemaskError):
    """
    Exception raised for invalid experiment configurations and unusable output locations.
    """

    def __init__(self, reason: str):
        super().__init__(reason, exit_code=2)


class WavemaskCheckError(WavemaskError):
    """
    Exception raised if one or more theory checks failed.
    """

    def __init__(self, reason: str, failed_checks: Tuple[str, ...] = ()):
        super().__init__(reason, exit_code=1)
        self.failed_checks = tuple(failed_checks)


class EnumerationCapError(WavemaskError, ValueError):
    """
    Exception raised if an exact hypercube enumeration would exceed the configured cap.
    """

    def __init__(self, bits: int, cap: int):
        super().__init__(f'exact enumeration needs 2^{bits} vertices, cap is 2^{cap}: use Monte Carlo instead')
        self.bits = bits
        self.cap = cap


class WienerNullFrequencyError(WavemaskError, ZeroDivisionError):
    """
    Exception raised if an unregularized Wiener filter meets an exact zero of the transfer function.
    """

    def __init__(self, frequency: Tuple[int, int]):
        super().__init__(f'inverse filter undefined at null frequency {frequency} (nsr=0)')
        self.frequency = frequency


class PgmFormatError(WavemaskError, ValueError):
    """
    Exception raised for unreadable PGM files.
    """


class PgmHeaderError(PgmFormatError):
    pass


class PgmMaxvalError(PgmFormatError):
    pass


class PgmTruncatedError(PgmFormatError):
    def __init__(self, reason: str, offset: int):
        super().__init__(reason)
        self.offset = offset
