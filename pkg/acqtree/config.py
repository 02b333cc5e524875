# The MIT License (MIT)
# Copyright (c) 2022 by Brockmann Consult GmbH and contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a
# copy of this software and associated documentation files (the "Software"),
# to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense,
# and/or sell copies of the Software, and to permit persons to whom the
# Software is furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in
# all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
# FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
# DEALINGS IN THE SOFTWARE.


import os.path
from typing import Sequence, Union, Any, Dict, List, Iterable, Tuple

import yaml

from .acquisition import Criterion
from .error import ConfigError
from .log import LOGGER

SECTIONS = ('stream', 'learner', 'evaluation', 'output')

GENERATORS = ('stagger', 'led', 'synthetic')
SCHEMA_TYPES = ('binary', 'categorical', 'real')
THRESHOLD_SELECTIONS = ('exhaustive', 'exp3')
EVALUATION_MODES = ('map', 'session')
UTILITIES = ('auto', 'accuracy', 'f_measure')


# noinspection PyUnusedLocal
def load_config(config_paths: Union[str, Sequence[str]] = None,
                return_kwargs: bool = False,
                **kwargs) -> Dict[str, Any]:
    """
    Load single configuration by merging all given configurations read
    from YAML files in *config_paths* and then merge *kwargs*.

    :param config_paths: Configuration file paths.
    :param return_kwargs: Return a flattened configuration so its items
        can be used as keyword arguments.
    :param kwargs: see acqtree.experiment.Experiment
    :raise ConfigError
    """
    if not config_paths and return_kwargs:
        return kwargs

    kwargs_config = kwargs_to_config(**kwargs)
    if not config_paths:
        return kwargs_config

    config_paths = [config_paths] if isinstance(config_paths, str) else config_paths
    configs = [_load_config(config_path)
               for config_path in config_paths] + [kwargs_config]
    config = _merge_configs(configs)
    return config_to_kwargs(config) if return_kwargs else config


def kwargs_to_config(**kwargs) -> Dict[str, Any]:
    config = dict()
    sections = {section: dict() for section in SECTIONS}
    for k, v in kwargs.items():
        if v is None:
            continue
        section = _section_of(k)
        if section:
            sections[section][k[len(section) + 1:]] = v
        else:
            config[k] = v
    for section, values in sections.items():
        if values:
            config[section] = values
    return config


def config_to_kwargs(config: Dict[str, Any]) -> Dict[str, Any]:
    config = dict(config)
    kwargs = dict()
    for section in SECTIONS:
        values = config.pop(section) if section in config else None
        for k, v in (values or {}).items():
            kwargs[f'{section}_{k}'] = v
    kwargs.update(config)
    return kwargs


def apply_overrides(config: Dict[str, Any],
                    overrides: Iterable[str]) -> Dict[str, Any]:
    """
    Apply dotted-key overrides such as ``learner.criterion=IG``.
    Values are parsed as YAML scalars or flow collections.

    :raise ConfigError: if an override is not of the form KEY=VALUE
    """
    effective_config = config
    for override in overrides or ():
        key, sep, text = override.partition('=')
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f'Invalid override {override!r},'
                              f' expected KEY=VALUE')
        try:
            value = yaml.load(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError as e:
            raise ConfigError(f'Invalid value for {key}: {text!r}') from e
        effective_config = set_dotted(effective_config, key, value)
    return effective_config


def get_dotted(config: Dict[str, Any], key: str, default: Any = None) -> Any:
    value = config
    for part in key.split('.'):
        if not isinstance(value, dict) or part not in value:
            return default
        value = value[part]
    return value


def set_dotted(config: Dict[str, Any], key: str, value: Any) -> Dict[str, Any]:
    """Return a copy of *config* with the dotted *key* set to *value*."""
    head, _, tail = key.partition('.')
    effective_config = dict(config)
    if tail:
        child = effective_config.get(head)
        effective_config[head] = set_dotted(child if isinstance(child, dict) else {},
                                            tail, value)
    else:
        effective_config[head] = value
    return effective_config


def expand_sweeps(config: Dict[str, Any]) -> List[Tuple[str, Dict[str, Any]]]:
    """
    Expand the ``sweep`` entry of *config* into a list of
    (label, config) pairs, one per value. A list of sweeps expands
    into their cartesian product, labels joined by "/".
    """
    config = dict(config)
    sweeps = config.pop('sweep', None)
    if not sweeps:
        return [('', config)]
    if isinstance(sweeps, dict):
        sweeps = [sweeps]
    expanded = [('', config)]
    for index, sweep in enumerate(sweeps):
        if not isinstance(sweep, dict) or 'key' not in sweep or 'values' not in sweep:
            raise ConfigError(f'sweep[{index}] must have a key and a list of values')
        key = sweep['key']
        values = sweep['values']
        if not isinstance(values, list) or not values:
            raise ConfigError(f'sweep[{index}].values must be a nonempty list')
        name = key.rsplit('.', 1)[-1]
        expanded = [(f'{label}/{name}={value}' if label else f'{name}={value}',
                     set_dotted(c, key, value))
                    for label, c in expanded
                    for value in values]
    return expanded


def validate_config(config: Dict[str, Any]):
    """
    Check *config* and raise a ConfigError naming the offending
    dotted key. Sweeps are checked per expanded configuration.
    """
    for label, expanded_config in expand_sweeps(config):
        try:
            _validate_config(expanded_config)
        except ConfigError as e:
            if label:
                raise ConfigError(f'{e} (sweep {label})') from e
            raise


def _validate_config(config: Dict[str, Any]):
    unknown = [k for k in config
               if k not in SECTIONS + ('seeds', 'parallelism', 'verbosity', 'dry_run')]
    if unknown:
        raise ConfigError(f'{unknown[0]}: unknown configuration key')

    seeds = config.get('seeds', [0])
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError('seeds: at least one seed must be given')
    for seed in seeds:
        _check_int('seeds', seed, minimum=0)
    _check_int('parallelism', config.get('parallelism', 1), minimum=1)

    source = get_dotted(config, 'stream.source')
    if not source:
        raise ConfigError('stream.source: missing stream source')
    if source not in GENERATORS:
        _check_file('stream.source', source)
    length = get_dotted(config, 'stream.length')
    if length is not None:
        _check_int('stream.length', length, minimum=0)
    drift_points = get_dotted(config, 'stream.drift_points')
    if drift_points is not None:
        if not isinstance(drift_points, list):
            raise ConfigError('stream.drift_points: must be a list')
        for point in drift_points:
            _check_int('stream.drift_points', point, minimum=0)
        if any(a >= b for a, b in zip(drift_points, drift_points[1:])):
            raise ConfigError('stream.drift_points: must be strictly increasing')
        if length is not None and any(point >= length for point in drift_points):
            raise ConfigError('stream.drift_points: must lie within [0, stream.length)')
    test_fraction = get_dotted(config, 'stream.test_fraction')
    if test_fraction is not None:
        _check_number('stream.test_fraction', test_fraction, 0.0, 1.0, upper_open=True)
    test_size = get_dotted(config, 'stream.test_size')
    if test_size is not None:
        _check_int('stream.test_size', test_size, minimum=1)
    schema = get_dotted(config, 'stream.schema') or {}
    if not isinstance(schema, dict):
        raise ConfigError('stream.schema: must map column names to types')
    for column, kind in schema.items():
        if kind not in SCHEMA_TYPES:
            raise ConfigError(f'stream.schema.{column}: unknown schema type {kind!r}')
    costs = get_dotted(config, 'stream.costs')
    if costs is not None:
        _check_file('stream.costs', costs)
    noise = get_dotted(config, 'stream.noise')
    if noise is not None:
        _check_number('stream.noise', noise, 0.0, 1.0)
    irrelevant = get_dotted(config, 'stream.irrelevant_features')
    if irrelevant is not None:
        _check_int('stream.irrelevant_features', irrelevant, minimum=0)
    if source == 'synthetic' and get_dotted(config, 'stream.theta') is None:
        raise ConfigError('stream.theta: required for the synthetic source')

    criterion = get_dotted(config, 'learner.criterion', 'EC2')
    criteria = [c.value for c in Criterion]
    if criterion not in criteria:
        raise ConfigError(f'learner.criterion: must be one of'
                          f' {", ".join(criteria)}, got {criterion!r}')
    _check_int('learner.hypothesis_count',
               get_dotted(config, 'learner.hypothesis_count', 1), minimum=1)
    budget = get_dotted(config, 'learner.budget')
    if budget is not None:
        _check_number('learner.budget', budget, 0.0, None, lower_open=True)
    for key in ('learner.drift.gamma', 'learner.prior.lambda', 'learner.ofs.epsilon'):
        value = get_dotted(config, key)
        if value is not None:
            _check_number(key, value, 0.0, 1.0)
    for key in ('learner.prior.kappa', 'learner.continuous.eta',
                'learner.ofs.learning_rate'):
        value = get_dotted(config, key)
        if value is not None:
            _check_number(key, value, 0.0, None, lower_open=True)
    for key in ('learner.ofs.budget', 'learner.continuous.thresholds',
                'learner.continuous.warmup'):
        value = get_dotted(config, key)
        if value is not None:
            _check_int(key, value, minimum=1)
    selection = get_dotted(config, 'learner.continuous.selection')
    if selection is not None and selection not in THRESHOLD_SELECTIONS:
        raise ConfigError(f'learner.continuous.selection: must be one of'
                          f' {", ".join(THRESHOLD_SELECTIONS)}, got {selection!r}')
    loss = get_dotted(config, 'learner.loss')
    if loss is not None:
        if (not isinstance(loss, list) or not loss
                or any(not isinstance(row, list) or len(row) != len(loss) for row in loss)):
            raise ConfigError('learner.loss: must be a square matrix')

    mode = get_dotted(config, 'evaluation.mode')
    if mode is not None and mode not in EVALUATION_MODES:
        raise ConfigError(f'evaluation.mode: must be one of'
                          f' {", ".join(EVALUATION_MODES)}, got {mode!r}')
    every = get_dotted(config, 'evaluation.every')
    if every is not None:
        _check_int('evaluation.every', every, minimum=0)
    utility = get_dotted(config, 'evaluation.utility')
    if utility is not None and utility not in UTILITIES:
        raise ConfigError(f'evaluation.utility: must be one of'
                          f' {", ".join(UTILITIES)}, got {utility!r}')

    retry = get_dotted(config, 'output.retry')
    if retry is not None and not isinstance(retry, dict):
        raise ConfigError('output.retry: must be a mapping of retry_call arguments')


def _section_of(key: str):
    for section in SECTIONS:
        if key.startswith(section + '_'):
            return section
    return None


def _check_int(key: str, value: Any, minimum: int = None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'{key}: must be an integer, got {value!r}')
    if minimum is not None and value < minimum:
        raise ConfigError(f'{key}: must be at least {minimum}, got {value}')


def _check_number(key: str, value: Any, lower: float, upper: float = None,
                  lower_open: bool = False, upper_open: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f'{key}: must be a number, got {value!r}')
    if lower is not None and (value <= lower if lower_open else value < lower):
        raise ConfigError(f'{key}: {value} out of range')
    if upper is not None and (value >= upper if upper_open else value > upper):
        raise ConfigError(f'{key}: {value} out of range')


def _check_file(key: str, path: str):
    if not isinstance(path, str) or not os.path.isfile(path):
        raise ConfigError(f'{key}: file not found: {path}')


def _load_config(path: str) -> Dict[str, Any]:
    try:
        with open(path) as fp:
            config = yaml.load(fp, Loader=yaml.SafeLoader)
            LOGGER.info(f'Configuration {path} loaded.')
        return config or {}
    except FileNotFoundError as e:
        raise ConfigError(f'Configuration not found: {path}') from e


def _merge_configs(configs: List[Dict[str, Any]]) -> Dict[str, Any]:
    effective_config = dict()
    for config in configs:
        effective_config = _merge_2_configs(effective_config, config)
    return effective_config


def _merge_2_configs(config_1: Dict[str, Any], config_2: Dict[str, Any]) -> Dict[str, Any]:
    effective_config = dict(config_1)
    for k, v2 in config_2.items():
        if k in effective_config:
            v1 = config_1[k]
            if isinstance(v1, dict) and isinstance(v2, dict):
                effective_config[k] = _merge_2_configs(v1, v2)
            elif isinstance(v1, list) and isinstance(v2, list):
                effective_config[k] = v1 + v2
            else:
                effective_config[k] = v2
        else:
            effective_config[k] = v2
    return effective_config
