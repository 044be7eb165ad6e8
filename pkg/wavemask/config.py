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
Experiment configurations.

A run is described by one JSON document. ExperimentConfig validates it, fills in the defaults
and keeps the effective values, so that to_dict() lists everything a run depends on.
"""

import hashlib
import json
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml

from .defaults import DEFAULT_ALPHA, DEFAULT_ENUMERATION_CAP, DEFAULT_GRID_SIDE, DEFAULT_OUTPUT_DIR, \
    DEFAULT_PERIOD, DEFAULT_PSF_NOISE_SCALE, DEFAULT_PUPIL_FRACTION, DEFAULT_RAW_CAP, DEFAULT_SIGMAS, \
    DEFAULT_STRENGTHS, DEFAULT_THEORY_PERIODS, DEFAULT_TRIALS, DEFAULT_MASK_KIND
from .errors import WavemaskConfigError
from .im.imaging import max_sphere_strength, pupil_diameter
from .optics import MaskSpec, SEIDEL_TERMS, MIN_PERIOD, MIN_SIDE
from .transfer import SECOND_MOMENT_VARIANTS

_LOG = logging.getLogger('wavemask')

MTF_DIST = 'mtf_dist'
THEORY_CHECK = 'theory_check'
RECON_SWEEP = 'recon_sweep'

EXPERIMENT_KINDS = (MTF_DIST, THEORY_CHECK, RECON_SWEEP)

ABERRATION_TYPES = SEIDEL_TERMS + ('none',)

THEORY_CHECKS = ('diffraction_bound',
                 'uniform_invariance',
                 'closed_form',
                 'binary_expectation',
                 'second_moment',
                 'rademacher',
                 'hypercube',
                 'null_free')

DEFAULT_ABERRATIONS = (('sphere', DEFAULT_STRENGTHS), ('astigmatism', DEFAULT_STRENGTHS))

Config = Dict[str, Any]


class _Missing:
    def __repr__(self):
        return 'MISSING'


#: Marks a required configuration field.
MISSING = _Missing()


class ConfigParams:
    """
    Typed access to the fields of a configuration document.
    Every conversion error is reported as WavemaskConfigError naming the field.
    """

    def __init__(self, config: Config):
        if not isinstance(config, dict):
            raise WavemaskConfigError(f'configuration must be a JSON object, but was {type(config).__name__}')
        self._config = config

    def get(self, name: str, default: Any = MISSING) -> Any:
        value = self._config.get(name)
        if value is None:
            if default is MISSING:
                raise WavemaskConfigError(f'missing configuration field "{name}"')
            return default
        return value

    @classmethod
    def to_int(cls, name: str, value: Any, minimum: int = None) -> int:
        if isinstance(value, str):
            # The YAML loader reads JSON numbers such as 1e4 as strings
            try:
                value = int(value)
            except ValueError:
                try:
                    value = float(value)
                except ValueError as e:
                    raise WavemaskConfigError(f'field "{name}" must be an integer, but was {value!r}') from e
                if not math.isfinite(value):
                    raise WavemaskConfigError(f'field "{name}" must be an integer, but was {value!r}')
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            else:
                raise WavemaskConfigError(f'field "{name}" must be an integer, but was {value!r}')
        if minimum is not None and value < minimum:
            raise WavemaskConfigError(f'field "{name}" must be >= {minimum}, but was {value}')
        return value

    @classmethod
    def to_float(cls, name: str, value: Any, minimum: float = None, maximum: float = None) -> float:
        if isinstance(value, str):
            # The YAML loader reads JSON numbers such as 1e-3 as strings
            try:
                value = float(value)
            except ValueError as e:
                raise WavemaskConfigError(f'field "{name}" must be a finite number, but was {value!r}') from e
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise WavemaskConfigError(f'field "{name}" must be a finite number, but was {value!r}')
        value = float(value)
        if minimum is not None and value < minimum:
            raise WavemaskConfigError(f'field "{name}" must be >= {minimum}, but was {value!r}')
        if maximum is not None and value > maximum:
            raise WavemaskConfigError(f'field "{name}" must be <= {maximum}, but was {value!r}')
        return value

    @classmethod
    def to_choice(cls, name: str, value: Any, choices: Sequence[str]) -> str:
        if value not in choices:
            raise WavemaskConfigError(f'field "{name}" must be one of {", ".join(choices)}, but was {value!r}')
        return value

    @classmethod
    def to_list(cls, name: str, value: Any) -> List[Any]:
        if not isinstance(value, (list, tuple)) or len(value) == 0:
            raise WavemaskConfigError(f'field "{name}" must be a nonempty list, but was {value!r}')
        return list(value)

    def get_int(self, name: str, default: Any = MISSING, minimum: int = None) -> int:
        return self.to_int(name, self.get(name, default), minimum=minimum)

    def get_float(self, name: str, default: Any = MISSING, minimum: float = None, maximum: float = None) -> float:
        return self.to_float(name, self.get(name, default), minimum=minimum, maximum=maximum)

    def get_optional_float(self, name: str, minimum: float = None) -> Optional[float]:
        value = self.get(name, None)
        return None if value is None else self.to_float(name, value, minimum=minimum)

    def get_float_list(self, name: str, default: Any = MISSING, minimum: float = None) -> Tuple[float, ...]:
        values = self.to_list(name, self.get(name, default))
        return tuple(self.to_float(f'{name}[{i}]', v, minimum=minimum) for i, v in enumerate(values))


def _parse_period(name: str, value: Any) -> int:
    value = ConfigParams.to_int(name, value, minimum=MIN_PERIOD)
    if value % 2 != 0:
        raise WavemaskConfigError(f'field "{name}" must be an even period, but was {value}')
    return value


def _parse_aberrations(params: ConfigParams) -> Tuple[Tuple[str, Tuple[float, ...]], ...]:
    default = [dict(type=kind, strengths=list(strengths)) for kind, strengths in DEFAULT_ABERRATIONS]
    items = ConfigParams.to_list('aberrations', params.get('aberrations', default))
    aberrations = []
    for i, item in enumerate(items):
        name = f'aberrations[{i}]'
        if not isinstance(item, dict):
            raise WavemaskConfigError(f'field "{name}" must be an object with "type" and "strengths"')
        item_params = ConfigParams(item)
        kind = ConfigParams.to_choice(f'{name}.type', item_params.get('type'), ABERRATION_TYPES)
        strengths = item_params.get_float_list('strengths', default=[0.0] if kind == 'none' else MISSING)
        aberrations.append((kind, strengths))
    return tuple(aberrations)


def _check_sphere_strengths(aberrations: Sequence[Tuple[str, Sequence[float]]], diameter: int):
    limit = max_sphere_strength(diameter)
    for i, (kind, strengths) in enumerate(aberrations):
        for s in strengths:
            if kind == 'sphere' and abs(s) > limit:
                raise WavemaskConfigError(f'field "aberrations[{i}].strengths" has sphere strength {s:g}, '
                                          f'but a pupil of {diameter} pixels allows at most {limit:.4g}')


def _parse_mask(params: ConfigParams) -> MaskSpec:
    mask = params.get('mask', dict(kind=DEFAULT_MASK_KIND))
    if not isinstance(mask, dict):
        raise WavemaskConfigError(f'field "mask" must be an object, but was {mask!r}')
    mask_params = ConfigParams(mask)
    kind = ConfigParams.to_choice('mask.kind', mask_params.get('kind', DEFAULT_MASK_KIND), ('uniform', 'bernoulli'))
    p = mask_params.get_float('p', default=0.5, minimum=0.0, maximum=1.0)
    return MaskSpec(kind, p)


class ExperimentConfig:
    """
    Validated configuration of one run.

    Fields not given take their defaults; the CLI may override *seed* and *output_dir*.
    """

    def __init__(self,
                 kind: str,
                 seed: int,
                 n: int = DEFAULT_PERIOD,
                 side: int = DEFAULT_GRID_SIDE,
                 aberrations: Sequence[Tuple[str, Sequence[float]]] = DEFAULT_ABERRATIONS,
                 mask: MaskSpec = None,
                 trials: int = DEFAULT_TRIALS,
                 sigmas: Sequence[float] = DEFAULT_SIGMAS,
                 output_dir: str = DEFAULT_OUTPUT_DIR,
                 periods: Sequence[int] = DEFAULT_THEORY_PERIODS,
                 checks: Sequence[str] = THEORY_CHECKS,
                 second_moment_variant: str = 'squared',
                 pupil_fraction: float = DEFAULT_PUPIL_FRACTION,
                 psf_noise_scale: float = DEFAULT_PSF_NOISE_SCALE,
                 nsr: Optional[float] = None,
                 scene: Optional[str] = None,
                 raw_cap: int = DEFAULT_RAW_CAP,
                 enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                 alpha: float = DEFAULT_ALPHA):
        self.kind = kind
        self.seed = seed
        self.n = n
        self.side = side
        self.aberrations = tuple((a, tuple(float(s) for s in strengths)) for a, strengths in aberrations)
        self.mask = mask if mask is not None else MaskSpec(DEFAULT_MASK_KIND)
        self.trials = trials
        self.sigmas = tuple(sigmas)
        self.output_dir = output_dir
        self.periods = tuple(periods)
        self.checks = tuple(checks)
        self.second_moment_variant = second_moment_variant
        self.pupil_fraction = pupil_fraction
        self.psf_noise_scale = psf_noise_scale
        self.nsr = nsr
        self.scene = scene
        self.raw_cap = raw_cap
        self.enumeration_cap = enumeration_cap
        self.alpha = alpha

    @classmethod
    def from_dict(cls, config: Config) -> 'ExperimentConfig':
        """
        Validate a configuration document.

        :raise WavemaskConfigError: naming the first invalid or missing field
        """
        params = ConfigParams(config)
        kind = ConfigParams.to_choice('kind', params.get('kind'), EXPERIMENT_KINDS)
        seed = params.get_int('seed', minimum=0)
        if seed >= 1 << 64:
            raise WavemaskConfigError(f'field "seed" must be a 64-bit unsigned integer, but was {seed}')
        periods = tuple(_parse_period(f'periods[{i}]', v)
                        for i, v in enumerate(ConfigParams.to_list('periods',
                                                                   params.get('periods',
                                                                              list(DEFAULT_THEORY_PERIODS)))))
        checks = tuple(ConfigParams.to_choice(f'checks[{i}]', v, THEORY_CHECKS)
                       for i, v in enumerate(ConfigParams.to_list('checks', params.get('checks', list(THEORY_CHECKS)))))
        output_dir = params.get('output_dir', DEFAULT_OUTPUT_DIR)
        if not isinstance(output_dir, str) or not output_dir:
            raise WavemaskConfigError(f'field "output_dir" must be a nonempty path, but was {output_dir!r}')
        scene = params.get('scene', None)
        if scene is not None and not isinstance(scene, str):
            raise WavemaskConfigError(f'field "scene" must be a path, but was {scene!r}')
        pupil_fraction = params.get_float('pupil_fraction', DEFAULT_PUPIL_FRACTION, minimum=0.0, maximum=1.0)
        side = params.get_int('side', DEFAULT_GRID_SIDE, minimum=MIN_SIDE)
        if int(side * pupil_fraction) < MIN_SIDE:
            raise WavemaskConfigError(f'field "pupil_fraction" gives a pupil smaller than {MIN_SIDE} pixels '
                                      f'on a grid of side {side}')
        aberrations = _parse_aberrations(params)
        if kind == RECON_SWEEP:
            _check_sphere_strengths(aberrations, pupil_diameter(side, pupil_fraction))
        return cls(kind=kind,
                   seed=seed,
                   n=_parse_period('n', params.get('n', DEFAULT_PERIOD)),
                   side=side,
                   aberrations=aberrations,
                   mask=_parse_mask(params),
                   trials=params.get_int('trials', DEFAULT_TRIALS, minimum=1),
                   sigmas=params.get_float_list('sigmas', list(DEFAULT_SIGMAS), minimum=0.0),
                   output_dir=output_dir,
                   periods=periods,
                   checks=checks,
                   second_moment_variant=ConfigParams.to_choice('second_moment_variant',
                                                                params.get('second_moment_variant', 'squared'),
                                                                SECOND_MOMENT_VARIANTS),
                   pupil_fraction=pupil_fraction,
                   psf_noise_scale=params.get_float('psf_noise_scale', DEFAULT_PSF_NOISE_SCALE, minimum=0.0),
                   nsr=params.get_optional_float('nsr', minimum=0.0),
                   scene=scene,
                   raw_cap=params.get_int('raw_cap', DEFAULT_RAW_CAP, minimum=0),
                   enumeration_cap=params.get_int('enumeration_cap', DEFAULT_ENUMERATION_CAP, minimum=1),
                   alpha=params.get_float('alpha', DEFAULT_ALPHA, minimum=0.0, maximum=1.0))

    def to_dict(self) -> Config:
        return dict(kind=self.kind,
                    seed=self.seed,
                    n=self.n,
                    side=self.side,
                    aberrations=[dict(type=kind, strengths=list(strengths)) for kind, strengths in self.aberrations],
                    mask=self.mask.to_dict(),
                    trials=self.trials,
                    sigmas=list(self.sigmas),
                    output_dir=self.output_dir,
                    periods=list(self.periods),
                    checks=list(self.checks),
                    second_moment_variant=self.second_moment_variant,
                    pupil_fraction=self.pupil_fraction,
                    psf_noise_scale=self.psf_noise_scale,
                    nsr=self.nsr,
                    scene=self.scene,
                    raw_cap=self.raw_cap,
                    enumeration_cap=self.enumeration_cap,
                    alpha=self.alpha)

    def replace(self, **changes) -> 'ExperimentConfig':
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig.from_dict(d)

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form of to_dict()."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f'ExperimentConfig(kind={self.kind!r}, seed={self.seed!r})'


def load_config(path: str) -> ExperimentConfig:
    """
    Load and validate a configuration file. JSON documents are read with the YAML loader.

    :raise WavemaskConfigError: if the file cannot be read or is invalid
    """
    try:
        with open(path, encoding='utf-8') as stream:
            config = yaml.safe_load(stream)
    except OSError as e:
        raise WavemaskConfigError(f'cannot read configuration file {path!r}: {e}') from e
    except yaml.YAMLError as e:
        raise WavemaskConfigError(f'configuration file {path!r} is not valid JSON: {e}') from e
    config = ExperimentConfig.from_dict(config)
    _LOG.info(f'configuration file {path!r} successfully loaded')
    return config
