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

import numpy as np

from acqtree.belief import BeliefState
from acqtree.datastream import DataPoint
from acqtree.datastream import LED_SEGMENTS
from acqtree.datastream import Metrics
from acqtree.datastream import StreamSpec
from acqtree.datastream import accuracy
from acqtree.datastream import align_points
from acqtree.datastream import concept_index
from acqtree.datastream import evaluate_test
from acqtree.datastream import evaluate_theta
from acqtree.datastream import f_measure
from acqtree.datastream import is_imbalanced
from acqtree.datastream import led_layout
from acqtree.datastream import led_stream
from acqtree.datastream import load_costs
from acqtree.datastream import load_dataset
from acqtree.datastream import per_class_f_measure
from acqtree.datastream import predict_map
from acqtree.datastream import resolve_utility
from acqtree.datastream import stagger_label
from acqtree.datastream import stagger_layout
from acqtree.datastream import stagger_points
from acqtree.datastream import stagger_stream
from acqtree.datastream import synthetic_stream
from acqtree.datastream import train_test_split
from acqtree.datastream import update_metrics
from acqtree.datastream import write_stagger_csv
from acqtree.error import AcqTreeError
from acqtree.error import ConfigError
from acqtree.error import DataError
from acqtree.learner import EpochRecord
from tests.helpers import IOCollector
from tests.helpers import full_information_map
from tests.helpers import new_theta

SIZES = ('small', 'medium', 'large')


def new_shapes_csv(rows: int = 20, empty_row: int = None) -> str:
    lines = ['size,flag,weight,label']
    for r in range(rows):
        size = '' if r + 1 == empty_row else SIZES[r % 3]
        lines.append(f'{size},{r % 2},{0.5 * r},{"yes" if r % 4 else "no"}')
    return '\n'.join(lines) + '\n'


class LoadDatasetTest(unittest.TestCase, IOCollector):

    def setUp(self):
        self.reset_paths()

    def tearDown(self):
        self.delete_paths()

    def test_encoding(self):
        self.add_csv('test-shapes.csv', new_shapes_csv())
        points, layout = load_dataset('test-shapes.csv')
        self.assertEqual(20, len(points))
        self.assertEqual(('size=small', 'size=medium', 'size=large', 'flag', 'weight'),
                         layout.names)
        self.assertEqual(('binary', 'binary', 'binary', 'binary', 'real'), layout.kinds)
        self.assertEqual(('no', 'yes'), layout.class_labels)
        self.assertFalse(layout.is_binary)
        np.testing.assert_equal([0.0, 1.0, 0.0, 1.0, 0.5], points[1].features)
        self.assertEqual(1, points[1].label)
        for point in points:
            self.assertEqual(1.0, point.features[:3].sum())

    def test_schema(self):
        self.add_csv('test-shapes.csv', new_shapes_csv())
        _, layout = load_dataset('test-shapes.csv', schema=dict(flag='categorical'))
        self.assertEqual(('size=small', 'size=medium', 'size=large',
                          'flag=0', 'flag=1', 'weight'), layout.names)
        with self.assertRaises(ConfigError):
            load_dataset('test-shapes.csv', schema=dict(colour='binary'))
        with self.assertRaises(ConfigError):
            load_dataset('test-shapes.csv', schema=dict(flag='ordinal'))

    def test_class_labels(self):
        self.add_csv('test-shapes.csv', new_shapes_csv())
        points, layout = load_dataset('test-shapes.csv', class_labels=['yes', 'no'])
        self.assertEqual(('yes', 'no'), layout.class_labels)
        self.assertEqual(1, points[0].label)
        with self.assertRaises(DataError):
            load_dataset('test-shapes.csv', class_labels=['yes'])

    def test_missing_value(self):
        self.add_csv('test-shapes.csv', new_shapes_csv(empty_row=17))
        with self.assertRaises(DataError) as cm:
            load_dataset('test-shapes.csv')
        self.assertEqual('Missing value in test-shapes.csv: row 17, column size',
                         f'{cm.exception}')

    def test_unparseable_value(self):
        self.add_csv('test-shapes.csv', new_shapes_csv())
        with self.assertRaises(DataError) as cm:
            load_dataset('test-shapes.csv', schema=dict(size='real'))
        self.assertIn('row 1, column size', f'{cm.exception}')

    def test_not_found(self):
        with self.assertRaises(DataError):
            load_dataset('no-such-dataset.csv')

    def test_align_points(self):
        self.add_csv('test-shapes.csv', new_shapes_csv())
        points, layout = load_dataset('test-shapes.csv')
        aligned = align_points(points[:1], layout,
                               ['weight', 'size=large', 'size=small', 'size=medium', 'flag',
                                'size=huge'])
        np.testing.assert_equal([0.0, 0.0, 1.0, 0.0, 0.0, 0.0], aligned[0].features)
        with self.assertRaises(DataError):
            align_points(points, layout, ['weight'])

    def test_costs(self):
        self.add_csv('test-costs.txt', '1.0\n2.5\n\n0.5\n')
        np.testing.assert_equal([1.0, 2.5, 0.5], load_costs('test-costs.txt', 3).costs)
        with self.assertRaises(DataError):
            load_costs('test-costs.txt', 4)
        self.add_csv('test-bad-costs.txt', '1.0\n-2.0\n')
        with self.assertRaises(DataError):
            load_costs('test-bad-costs.txt', 2)
        with self.assertRaises(ConfigError):
            load_costs('no-such-costs.txt', 2)


class StaggerTest(unittest.TestCase, IOCollector):

    def setUp(self):
        self.reset_paths()

    def tearDown(self):
        self.delete_paths()

    def test_concepts(self):
        self.assertEqual(1, stagger_label(0, 0, 1, 0))
        self.assertEqual(0, stagger_label(1, 0, 1, 0))
        self.assertEqual(1, stagger_label(2, 1, 2, 1))
        self.assertEqual(1, stagger_label(2, 2, 0, 1))
        self.assertEqual(0, stagger_label(0, 0, 1, 2))
        self.assertEqual(1, stagger_label(1, 0, 1, 2))

    def test_concept_index(self):
        self.assertEqual(0, concept_index(59, (60, 120)))
        self.assertEqual(1, concept_index(60, (60, 120)))
        self.assertEqual(2, concept_index(179, (60, 120)))
        spec = StreamSpec('stagger', 180, [60, 120])
        self.assertEqual(1, spec.concept_at(119))
        self.assertTrue(spec.is_generator)

    def test_stream_spec(self):
        with self.assertRaises(ConfigError):
            StreamSpec('stagger', drift_points=[120, 60])
        with self.assertRaises(ConfigError):
            StreamSpec('data.csv', test_fraction=1.0)
        self.assertFalse(StreamSpec('data.csv').is_generator)

    def test_stream(self):
        stream = stagger_stream(180, (60, 120), np.random.default_rng(1))
        self.assertEqual(180, len(stream))
        self.assertEqual(9, stagger_layout().n)
        for t, point in enumerate(stream):
            self.assertEqual(3.0, point.features.sum())
            size, color, shape = (int(np.flatnonzero(point.features[3 * a:3 * a + 3])[0])
                                  for a in range(3))
            self.assertEqual(stagger_label(size, color, shape, concept_index(t, (60, 120))),
                             point.label)

    def test_reproducible(self):
        stream_1 = stagger_stream(50, (20,), np.random.default_rng(3))
        stream_2 = stagger_stream(50, (20,), np.random.default_rng(3))
        self.assertEqual([p.label for p in stream_1], [p.label for p in stream_2])
        np.testing.assert_equal([p.features for p in stream_1], [p.features for p in stream_2])

    def test_invalid_drift_points(self):
        with self.assertRaises(AcqTreeError):
            stagger_stream(100, (100,), np.random.default_rng(0))

    def test_positive_rate(self):
        points = stagger_points(10000, 0, np.random.default_rng(5))
        self.assertAlmostEqual(1.0 / 9.0, np.mean([p.label for p in points]), delta=0.03)
        points = stagger_points(10000, 2, np.random.default_rng(5))
        self.assertAlmostEqual(2.0 / 3.0, np.mean([p.label for p in points]), delta=0.03)

    def test_write_csv(self):
        self.add_path('test-stagger.csv')
        stream = stagger_stream(60, (30,), np.random.default_rng(2))
        write_stagger_csv(stream, 'test-stagger.csv')
        points, layout = load_dataset('test-stagger.csv', class_labels=['0', '1'])
        aligned = align_points(points, layout, stagger_layout().names)
        np.testing.assert_equal([p.features for p in stream], [p.features for p in aligned])
        self.assertEqual([p.label for p in stream], [p.label for p in aligned])


class GeneratorTest(unittest.TestCase):

    def test_led(self):
        points = led_stream(100, np.random.default_rng(0), noise=0.0, irrelevant_features=5)
        self.assertEqual(12, led_layout(5).n)
        self.assertEqual(10, led_layout(5).m)
        for point in points:
            np.testing.assert_equal(LED_SEGMENTS[point.label], point.features[:7])
            self.assertEqual(12, point.features.size)

    def test_synthetic(self):
        theta_star = new_theta([[1.0, 0.0], [0.0, 1.0]], [0.25, 0.75])
        points = synthetic_stream(theta_star, 400, np.random.default_rng(0))
        for point in points:
            np.testing.assert_equal([1 - point.label, point.label], point.features)
        self.assertAlmostEqual(0.75, np.mean([p.label for p in points]), delta=0.07)

    def test_train_test_split(self):
        points = [DataPoint(np.array([i]), 0) for i in range(10)]
        train, test = train_test_split(points, 0.2, np.random.default_rng(0))
        self.assertEqual(8, len(train))
        self.assertEqual(2, len(test))
        self.assertEqual(set(range(10)), {int(p.features[0]) for p in train + test})
        with self.assertRaises(AcqTreeError):
            train_test_split(points, 1.0, np.random.default_rng(0))


class MetricsTest(unittest.TestCase):

    def test_f_measure(self):
        confusion = np.array([[6, 2], [4, 8]])
        np.testing.assert_almost_equal([12 / 18, 16 / 22], per_class_f_measure(confusion))
        self.assertAlmostEqual(0.727, per_class_f_measure(confusion)[1], places=3)
        self.assertAlmostEqual(0.697, f_measure(confusion), places=3)
        self.assertAlmostEqual(0.7, accuracy(confusion))

    def test_f_measure_absent_class(self):
        np.testing.assert_equal([1.0, 0.0], per_class_f_measure(np.array([[5, 0], [0, 0]])))
        with self.assertRaises(AcqTreeError):
            f_measure(np.zeros((2, 3)))

    def test_imbalance(self):
        self.assertTrue(is_imbalanced([0] * 7 + [1] * 3, 2))
        self.assertFalse(is_imbalanced([0] * 6 + [1] * 4, 2))
        self.assertEqual('f_measure', resolve_utility('auto', [0] * 7 + [1] * 3, 2))
        self.assertEqual('accuracy', resolve_utility('auto', [0, 1], 2))
        self.assertEqual('accuracy', resolve_utility('accuracy', [0] * 9 + [1], 2))

    def test_update_metrics(self):
        metrics = Metrics(2)
        for t, (prediction, label) in enumerate([(0, 0), (1, 0), (1, 1)]):
            update_metrics(metrics, EpochRecord(t, prediction, label, prediction == label,
                                                float(prediction == label), 1.0, 1,
                                                'ONE_REGION', 4))
        self.assertEqual(3.0, metrics.total_cost)
        self.assertAlmostEqual(2.0 / 3.0, metrics.accuracy)
        self.assertEqual([1.0, 0.5, 2.0 / 3.0], [e[3] for e in metrics.per_epoch])
        np.testing.assert_equal([[1, 1], [0, 1]], metrics.confusion)


class EvaluateTest(unittest.TestCase):

    def test_predict_map(self):
        theta = new_theta([[0.9, 0.2], [0.3, 0.7]], [0.4, 0.6])
        bits = np.array([[a, b] for a in (0, 1) for b in (0, 1)])
        np.testing.assert_equal([full_information_map(theta, row) for row in bits],
                                predict_map(theta, bits))

    def test_evaluate_theta(self):
        theta = new_theta([[1.0, 0.0]])
        points = [DataPoint(np.array([1.0]), 0), DataPoint(np.array([0.0]), 1),
                  DataPoint(np.array([1.0]), 1), DataPoint(np.array([0.0]), 1)]
        self.assertEqual(0.75, evaluate_theta(theta, points, 'accuracy'))
        self.assertAlmostEqual((2 / 3 + 4 / 5) / 2, evaluate_theta(theta, points, 'f_measure'))
        with self.assertRaises(DataError):
            evaluate_theta(theta, [], 'accuracy')

    def test_evaluate_test(self):
        belief = BeliefState([[9.0, 1.0]], [[1.0, 9.0]], [1.0, 1.0])
        points = [DataPoint(np.array([1.0]), 0), DataPoint(np.array([0.0]), 1)]
        self.assertEqual(1.0, evaluate_test(belief, points))
