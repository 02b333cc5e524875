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


import unittest

import yaml

from acqtree.acquisition import Criterion
from acqtree.config import apply_overrides
from acqtree.config import expand_sweeps
from acqtree.config import get_dotted
from acqtree.config import load_config
from acqtree.config import set_dotted
from acqtree.config import validate_config
from acqtree.error import ConfigError
from tests.helpers import IOCollector


class ConfigKwargsTest(unittest.TestCase):

    def test_defaults(self):
        self.assertEqual({}, load_config())

    def test_kwargs_to_config(self):
        self.assertEqual(
            {
                'dry_run': True,
                'verbosity': 2,
                'stream': {
                    'source': 'stagger',
                    'drift_points': [60, 120],
                },
                'learner': {
                    'criterion': 'EC2',
                    'drift': {'enabled': True},
                },
                'output': {
                    'path': 'out',
                    'overwrite': False,
                },
            },
            load_config(stream_source='stagger',
                        stream_drift_points=[60, 120],
                        learner_criterion='EC2',
                        learner_drift=dict(enabled=True),
                        learner_budget=None,
                        output_path='out',
                        output_overwrite=False,
                        dry_run=True,
                        verbosity=2))

    def test_kwargs_to_kwargs(self):
        self.assertEqual(
            {
                'stream_source': 'led',
                'learner_hypothesis_count': 50,
                'evaluation_every': 10,
                'seeds': [1, 2],
            },
            load_config(return_kwargs=True,
                        stream_source='led',
                        learner_hypothesis_count=50,
                        evaluation_every=10,
                        seeds=[1, 2]))


class ConfigFileTest(unittest.TestCase, IOCollector):
    config_1 = {
        'verbosity': 1,
        'seeds': [0, 1],
        'stream': {
            'source': 'stagger',
            'drift_points': [60],
        },
        'learner': {
            'criterion': 'EC2',
            'drift': {'enabled': True, 'gamma': 0.1},
        },
    }

    config_2 = {
        'learner': {
            'drift': {'gamma': 0.2},
        },
        'output': {
            'path': 'results/stagger'
        },
    }

    config_3 = {
        'seeds': [2],
        'stream': {
            'drift_points': [120],
        },
        'learner': {
            'criterion': 'US',
        },
    }

    def setUp(self):
        self.reset_paths()

        config_paths = [f'config_{i + 1}.yml' for i in range(3)]
        for config_path, config in zip(config_paths, (self.config_1, self.config_2, self.config_3)):
            self.add_path(config_path)
            with open(config_path, 'w') as fp:
                yaml.dump(config, fp)
        self.config_paths = config_paths

    def tearDown(self):
        self.delete_paths()

    def test_one_config_file_to_config(self):
        self.assertEqual(
            {
                'verbosity': 2,
                'seeds': [0, 1],
                'stream': {
                    'source': 'stagger',
                    'drift_points': [60],
                },
                'learner': {
                    'criterion': 'IG',
                    'drift': {'enabled': True, 'gamma': 0.1},
                },
            },
            load_config(config_paths=self.config_paths[0],
                        learner_criterion='IG',
                        verbosity=2))

    def test_one_config_file_to_kwargs(self):
        self.assertEqual(
            {
                'verbosity': 1,
                'seeds': [0, 1],
                'stream_source': 'stagger',
                'stream_drift_points': [60],
                'learner_criterion': 'EC2',
                'learner_drift': {'enabled': True, 'gamma': 0.1},
                'output_path': 'out',
            },
            load_config(config_paths=[self.config_paths[0]],
                        return_kwargs=True,
                        output_path='out'))

    def test_many_config_files_to_config(self):
        self.assertEqual(
            {
                'verbosity': 1,
                'seeds': [0, 1, 2],
                'stream': {
                    'source': 'stagger',
                    'drift_points': [60, 120],
                },
                'learner': {
                    'criterion': 'US',
                    'drift': {'enabled': True, 'gamma': 0.2},
                },
                'output': {
                    'path': 'results/stagger',
                },
            },
            load_config(config_paths=self.config_paths))

    def test_config_not_found(self):
        with self.assertRaises(ConfigError) as cm:
            load_config(config_paths=['no-such-config.yml'])
        self.assertEqual('Configuration not found: no-such-config.yml', f'{cm.exception}')


class DottedKeyTest(unittest.TestCase):

    def test_get_dotted(self):
        config = {'learner': {'drift': {'gamma': 0.1}}}
        self.assertEqual(0.1, get_dotted(config, 'learner.drift.gamma'))
        self.assertEqual('x', get_dotted(config, 'learner.prior.lambda', 'x'))
        self.assertIsNone(get_dotted(config, 'learner.drift.gamma.value'))

    def test_set_dotted(self):
        config = {'learner': {'drift': {'gamma': 0.1}}}
        self.assertEqual({'learner': {'drift': {'gamma': 0.1, 'enabled': True}}},
                         set_dotted(config, 'learner.drift.enabled', True))
        self.assertEqual({'learner': {'drift': {'gamma': 0.1}}}, config)

    def test_apply_overrides(self):
        config = apply_overrides({'learner': {'criterion': 'EC2'}},
                                 ['learner.criterion=IG',
                                  'stream.drift_points=[60, 120]',
                                  'learner.budget=2.5'])
        self.assertEqual({'learner': {'criterion': 'IG', 'budget': 2.5},
                          'stream': {'drift_points': [60, 120]}},
                         config)

    def test_invalid_override(self):
        with self.assertRaises(ConfigError):
            apply_overrides({}, ['learner.criterion'])
        with self.assertRaises(ConfigError):
            apply_overrides({}, ['=IG'])
        with self.assertRaises(ConfigError):
            apply_overrides({}, ['stream.drift_points=[60,'])


class ExpandSweepsTest(unittest.TestCase):

    def test_no_sweep(self):
        self.assertEqual([('', {'seeds': [0]})], expand_sweeps({'seeds': [0]}))

    def test_one_sweep(self):
        config = {'learner': {'criterion': 'EC2'},
                  'sweep': {'key': 'learner.hypothesis_count', 'values': [10, 100]}}
        self.assertEqual([
            ('hypothesis_count=10', {'learner': {'criterion': 'EC2', 'hypothesis_count': 10}}),
            ('hypothesis_count=100', {'learner': {'criterion': 'EC2', 'hypothesis_count': 100}}),
        ], expand_sweeps(config))

    def test_product(self):
        config = {'sweep': [{'key': 'learner.criterion', 'values': ['EC2', 'US']},
                            {'key': 'learner.prior.lambda', 'values': [0.0, 1.0]}]}
        self.assertEqual(['criterion=EC2/lambda=0.0', 'criterion=EC2/lambda=1.0',
                          'criterion=US/lambda=0.0', 'criterion=US/lambda=1.0'],
                         [label for label, _ in expand_sweeps(config)])

    def test_invalid(self):
        with self.assertRaises(ConfigError):
            expand_sweeps({'sweep': {'key': 'learner.criterion'}})
        with self.assertRaises(ConfigError):
            expand_sweeps({'sweep': {'key': 'learner.criterion', 'values': []}})


class ValidateConfigTest(unittest.TestCase):

    def assertConfigError(self, expected_message: str, config):
        with self.assertRaises(ConfigError) as cm:
            validate_config(config)
        self.assertIn(expected_message, f'{cm.exception}')

    def test_valid(self):
        validate_config({'stream': {'source': 'stagger', 'length': 180,
                                    'drift_points': [60, 120]},
                         'learner': {'criterion': 'EC2', 'drift': {'enabled': True}},
                         'seeds': [0, 1]})

    def test_every_criterion(self):
        for criterion in Criterion:
            validate_config({'stream': {'source': 'stagger'},
                             'learner': {'criterion': criterion.value}})

    def test_unknown_key(self):
        self.assertConfigError('colour: unknown configuration key',
                               {'stream': {'source': 'stagger'}, 'colour': 'red'})

    def test_stream(self):
        self.assertConfigError('stream.source: missing stream source', {})
        self.assertConfigError('stream.source: file not found: no-such.csv',
                               {'stream': {'source': 'no-such.csv'}})
        self.assertConfigError('stream.drift_points: must be strictly increasing',
                               {'stream': {'source': 'stagger', 'drift_points': [120, 60]}})
        self.assertConfigError('stream.drift_points: must lie within [0, stream.length)',
                               {'stream': {'source': 'stagger', 'length': 100,
                                           'drift_points': [60, 120]}})
        self.assertConfigError('stream.test_fraction: 1.0 out of range',
                               {'stream': {'source': 'stagger', 'test_fraction': 1.0}})
        self.assertConfigError("stream.schema.size: unknown schema type 'ordinal'",
                               {'stream': {'source': 'stagger', 'schema': {'size': 'ordinal'}}})
        self.assertConfigError('stream.theta: required for the synthetic source',
                               {'stream': {'source': 'synthetic'}})

    def test_learner(self):
        stream = {'source': 'stagger'}
        self.assertConfigError('learner.criterion: must be one of EC2, IG, US, RANDOM',
                               {'stream': stream, 'learner': {'criterion': 'XYZ'}})
        self.assertConfigError('learner.hypothesis_count: must be at least 1, got 0',
                               {'stream': stream, 'learner': {'hypothesis_count': 0}})
        self.assertConfigError('learner.budget: 0 out of range',
                               {'stream': stream, 'learner': {'budget': 0}})
        self.assertConfigError('learner.drift.gamma: 1.5 out of range',
                               {'stream': stream, 'learner': {'drift': {'gamma': 1.5}}})
        self.assertConfigError('learner.continuous.eta: must be a number',
                               {'stream': stream, 'learner': {'continuous': {'eta': 'x'}}})
        self.assertConfigError('learner.continuous.selection: must be one of exhaustive, exp3',
                               {'stream': stream,
                                'learner': {'continuous': {'selection': 'greedy'}}})
        self.assertConfigError('learner.loss: must be a square matrix',
                               {'stream': stream, 'learner': {'loss': [[1, 0]]}})

    def test_seeds(self):
        self.assertConfigError('seeds: at least one seed must be given',
                               {'stream': {'source': 'stagger'}, 'seeds': []})
        self.assertConfigError('seeds: must be an integer',
                               {'stream': {'source': 'stagger'}, 'seeds': ['a']})
        self.assertConfigError('parallelism: must be at least 1',
                               {'stream': {'source': 'stagger'}, 'parallelism': 0})

    def test_evaluation(self):
        stream = {'source': 'stagger'}
        self.assertConfigError('evaluation.mode: must be one of map, session',
                               {'stream': stream, 'evaluation': {'mode': 'tree'}})
        self.assertConfigError('evaluation.utility: must be one of auto, accuracy, f_measure',
                               {'stream': stream, 'evaluation': {'utility': 'auc'}})
        self.assertConfigError('output.retry: must be a mapping',
                               {'stream': stream, 'output': {'retry': 3}})

    def test_sweep_label(self):
        self.assertConfigError('learner.criterion: must be one of EC2, IG, US, RANDOM,'
                               " got 'XYZ' (sweep criterion=XYZ)",
                               {'stream': {'source': 'stagger'},
                                'sweep': {'key': 'learner.criterion',
                                          'values': ['EC2', 'XYZ']}})
