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

DEFAULT_ALPHA = 0.01

# 1-D theory
DEFAULT_PERIOD = 64
DEFAULT_TRIALS = 10000
DEFAULT_ENUMERATION_CAP = 20
DEFAULT_RAW_CAP = 10000
DEFAULT_THEORY_PERIODS = (8, 16, 64)

# 2-D imaging
DEFAULT_GRID_SIDE = 256
DEFAULT_PUPIL_FRACTION = 0.5
DEFAULT_PSF_NOISE_SCALE = 1.0
DEFAULT_STRENGTHS = (1.0, 4.0, 12.0)
DEFAULT_SIGMAS = (3e-6, 1e-5, 3e-5)
DEFAULT_MASK_KIND = 'uniform'

DEFAULT_OUTPUT_DIR = 'wavemask-out'
MANIFEST_FILE_NAME = 'manifest.json'

THREADS_ENV_VAR = 'WAVEMASK_THREADS'

# Relative tolerance for identities that hold exactly in exact arithmetic
EXACT_TOLERANCE = 1e-10
