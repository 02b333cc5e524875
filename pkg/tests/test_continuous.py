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
from acqtree.belief import uniform_belief
from acqtree.continuous import LatentBelief
from acqtree.continuous import ThresholdBandit
from acqtree.continuous import ThresholdGrid
from acqtree.continuous import aggregate_theta
from acqtree.continuous import aggregate_theta_table
from acqtree.continuous import binarize
from acqtree.continuous import binarize_point
from acqtree.continuous import build_threshold_grid
from acqtree.continuous import exp3_distribution
from acqtree.continuous import exp3_update
from acqtree.continuous import reward_from_gains
from acqtree.continuous import select_threshold_exhaustive
from acqtree.continuous import select_thresholds_exp3
from acqtree.continuous import update_latent
from acqtree.error import AcqTreeError
from tests.helpers import observations_of


class ThresholdGridTest(unittest.TestCase):

    def test_quantiles(self):
        values = np.array([[v, 4.0, v % 2] for v in range(1, 10)], dtype=float)
        grid = build_threshold_grid(values, 3, binary_features=[False, False, True])
        np.testing.assert_almost_equal([3.0, 5.0, 7.0], grid.thresholds[0])
        # constant features collapse to one threshold
        np.testing.assert_almost_equal([4.0], grid.thresholds[1])
        np.testing.assert_almost_equal([0.5], grid.thresholds[2])
        np.testing.assert_equal([3, 1, 1], grid.counts)
        np.testing.assert_equal([0, 3, 4, 5], grid.offsets)
        np.testing.assert_equal([0, 0, 0, 1, 2], grid.column_features)
        self.assertEqual(5, grid.num_columns)
        self.assertEqual(4, grid.column(2, 0))

    def test_invalid(self):
        with self.assertRaises(AcqTreeError):
            ThresholdGrid(([1.0, 1.0],))
        with self.assertRaises(AcqTreeError):
            ThresholdGrid(([],))
        with self.assertRaises(AcqTreeError):
            build_threshold_grid(np.zeros((0, 2)), 3)
        with self.assertRaises(AcqTreeError):
            build_threshold_grid(np.zeros((4, 2)), 0)

    def test_binarize(self):
        self.assertEqual(1, binarize(5.0, 5.0))
        self.assertEqual(0, binarize(4.9, 5.0))
        grid = ThresholdGrid(([1.0, 2.0], [10.0]))
        np.testing.assert_equal([0, 1], binarize_point([1.5, 10.0], grid, [1, 2]))
        np.testing.assert_equal([1, 0], binarize_point([1.5, 9.0], grid, [0, 2]))


class Exp3Test(unittest.TestCase):

    def test_initial_uniform(self):
        grid = ThresholdGrid(([1.0, 2.0, 3.0, 4.0], [1.0]))
        bandit = ThresholdBandit.initial(grid, 0.1)
        np.testing.assert_almost_equal([0.25] * 4, bandit.distribution(0))
        choices, probabilities = select_thresholds_exp3(bandit, np.random.default_rng(0))
        self.assertEqual(2, len(choices))
        self.assertEqual(0, choices[1])
        np.testing.assert_almost_equal([0.25, 1.0], probabilities)

    def test_update(self):
        bandit = ThresholdBandit.initial(ThresholdGrid(([1.0, 2.0],)), 0.5)
        updated = exp3_update(bandit, 0, 1, 0.5, 0.8)
        np.testing.assert_almost_equal([0.0, 1.6], updated.gain_sums[0])
        np.testing.assert_almost_equal([0.0, 0.0], bandit.gain_sums[0])
        np.testing.assert_almost_equal(exp3_distribution([0.0, 1.6], 0.5),
                                       updated.distribution(0))
        with self.assertRaises(AcqTreeError):
            exp3_update(bandit, 0, 1, 0.0, 0.8)

    def test_invalid_eta(self):
        with self.assertRaises(AcqTreeError):
            exp3_distribution([0.0], 0.0)

    def test_distribution_is_normalized(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            gain_sums = rng.exponential(50.0, size=rng.integers(1, 8))
            eta = float(rng.uniform(0.001, 1.0))
            distribution = exp3_distribution(gain_sums, eta)
            self.assertAlmostEqual(1.0, float(distribution.sum()), places=12)
            self.assertTrue(np.all(distribution >= 0.0))
            self.assertEqual(int(np.argmax(gain_sums)), int(np.argmax(distribution)))

    def test_rewards(self):
        np.testing.assert_almost_equal([0.0, 0.5, 1.0],
                                       reward_from_gains(np.array([0.0, 0.1, 0.3]), 0.2))
        np.testing.assert_equal([0.0, 0.0], reward_from_gains(np.array([0.1, 0.2]), None))

    def test_exhaustive(self):
        self.assertEqual(1, select_threshold_exhaustive([0.1, 0.3, 0.3]))
        with self.assertRaises(AcqTreeError):
            select_threshold_exhaustive([])


class LatentBeliefTest(unittest.TestCase):

    def setUp(self):
        self.grid = ThresholdGrid(([1.0, 2.0], [5.0]))
        belief = BeliefState([[2.0, 1.0], [1.0, 3.0]], [[1.0, 1.0], [3.0, 1.0]], [1.0, 1.0])
        self.latent = LatentBelief.from_belief(belief, self.grid)

    def test_from_belief(self):
        np.testing.assert_equal([[2.0, 1.0], [2.0, 1.0], [1.0, 3.0]], self.latent.belief.alpha)
        np.testing.assert_equal(np.zeros((3, 2)), self.latent.usage)
        with self.assertRaises(AcqTreeError):
            LatentBelief.from_belief(uniform_belief(3, 2), self.grid)

    def test_update(self):
        observations = observations_of((0, 1)).with_columns([1, 2])
        updated = update_latent(self.latent, observations, 1)
        np.testing.assert_equal([[2.0, 1.0], [2.0, 2.0], [1.0, 3.0]], updated.belief.alpha)
        np.testing.assert_equal([[0.0, 0.0], [0.0, 1.0], [0.0, 0.0]], updated.usage)
        np.testing.assert_equal([1, 2], updated.most_used_columns())
        np.testing.assert_equal([0, 2], self.latent.most_used_columns())

    def test_aggregate(self):
        observations = observations_of((0, 1)).with_columns([1, 2])
        updated = update_latent(update_latent(self.latent, observations, 1), observations, 1)
        # column 0 mean 0.5 weight 1, column 1 mean 0.75 weight 3
        self.assertAlmostEqual((0.5 + 3 * 0.75) / 4, aggregate_theta(updated, 0, 1))
        self.assertAlmostEqual(2.0 / 3.0, aggregate_theta(updated, 0, 0))
        table = aggregate_theta_table(updated)
        for i in range(2):
            for j in range(2):
                self.assertAlmostEqual(aggregate_theta(updated, i, j), table.theta[i, j])
