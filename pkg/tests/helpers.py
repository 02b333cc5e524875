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


import functools
import itertools
import math
import os
import os.path
import shutil
from typing import Dict, List, Sequence

import numpy as np

from acqtree.acquisition import ObservationSet
from acqtree.belief import ThetaTable
from acqtree.hypotheses import HypothesisSet
from acqtree.hypotheses import condition


class PathCollector:

    def __init__(self):
        self._outputs: List[str] = []

    def reset_paths(self):
        self._outputs = []

    def add_path(self, path, ensure_deleted=True):
        self._outputs.append(path)
        if ensure_deleted:
            delete_path(path)

    def delete_paths(self, ignore_errors=False):
        for path in self._outputs:
            delete_path(path, ignore_errors=ignore_errors)


class IOCollector(PathCollector):

    def add_output(self, output_path: str):
        self.add_path(output_path)

    def add_csv(self, path: str, text: str):
        self.add_path(path)
        with open(path, 'w') as fp:
            fp.write(text)


def delete_path(path, ignore_errors=False):
    if os.path.isdir(path):
        shutil.rmtree(path, ignore_errors=ignore_errors)
    elif os.path.isfile(path):
        try:
            os.remove(path)
        except OSError:
            if not ignore_errors:
                raise


def new_theta(theta, class_prior=None) -> ThetaTable:
    theta = np.asarray(theta, dtype=np.float64)
    m = theta.shape[1]
    return ThetaTable(theta, class_prior if class_prior is not None else np.full(m, 1.0 / m))


def new_random_theta(rng: np.random.Generator, n: int, m: int) -> ThetaTable:
    return ThetaTable(rng.uniform(0.05, 0.95, size=(n, m)),
                      rng.dirichlet(np.ones(m)))


def new_hypothesis_set(bits, regions, weights, num_classes: int = None) -> HypothesisSet:
    weights = np.asarray(weights, dtype=np.float64)
    regions = np.asarray(regions, dtype=int)
    return HypothesisSet(bits=np.asarray(bits, dtype=np.uint8),
                         regions=regions,
                         weights=weights / weights.sum(),
                         num_classes=num_classes or int(regions.max()) + 1)


def new_fuzzed_set(rng: np.random.Generator, max_columns: int = 4,
                   max_classes: int = 3) -> HypothesisSet:
    """Distinct realizations of at most *max_columns* columns with random regions and weights."""
    n = int(rng.integers(1, max_columns + 1))
    m = int(rng.integers(2, max_classes + 1))
    size = int(rng.integers(1, 2 ** n + 1))
    codes = rng.choice(2 ** n, size=size, replace=False)
    bits = (codes[:, None] >> np.arange(n)[::-1][None, :]) & 1
    return new_hypothesis_set(bits,
                              rng.integers(0, m, size=size),
                              rng.random(size) + 0.01,
                              num_classes=m)


def condition_all(hypotheses: HypothesisSet, columns: Sequence[int],
                  realization: Sequence[int]) -> HypothesisSet:
    for column in columns:
        hypotheses = condition(hypotheses, int(column), int(realization[column]))
    return hypotheses


def observations_of(*pairs) -> ObservationSet:
    observations = ObservationSet()
    for feature, value in pairs:
        observations = observations.add(feature, value)
    return observations


def brute_force_edge_weight(bits, regions, masses, alive) -> float:
    """Sum of mass products over all pairs of alive hypotheses of different regions."""
    total = 0.0
    for a, b in itertools.combinations(range(len(regions)), 2):
        if alive[a] and alive[b] and regions[a] != regions[b]:
            total += masses[a] * masses[b]
    return total


def brute_force_ec2_gain(hypotheses: HypothesisSet, column: int) -> float:
    masses = hypotheses.masses
    alive = hypotheses.alive
    before = brute_force_edge_weight(hypotheses.bits, hypotheses.regions, masses, alive)
    gain = 0.0
    for value in (0, 1):
        consistent = [alive[h] and hypotheses.bits[h, column] == value
                      for h in range(len(masses))]
        p_value = sum(masses[h] for h in range(len(masses)) if consistent[h])
        if p_value > 0:
            after = brute_force_edge_weight(hypotheses.bits, hypotheses.regions,
                                            masses, consistent)
            gain += p_value * (before - after)
    return gain


def brute_force_us_gain(hypotheses: HypothesisSet, column: int) -> float:
    masses = hypotheses.masses
    entropy = -sum(p * math.log2(p) for p in masses if p > 0)
    expected = 0.0
    for value in (0, 1):
        branch = [masses[h] for h in range(len(masses))
                  if hypotheses.alive[h] and hypotheses.bits[h, column] == value]
        p_value = sum(branch)
        if p_value > 0:
            expected += p_value * -sum(p / p_value * math.log2(p / p_value)
                                       for p in branch if p > 0)
    return entropy - expected


def brute_force_posterior(theta: ThetaTable, observed: Dict[int, int]) -> List[float]:
    scores = []
    for j in range(theta.m):
        score = theta.class_prior[j]
        for i, v in observed.items():
            score *= theta.theta[i, j] if v == 1 else 1.0 - theta.theta[i, j]
        scores.append(score)
    total = sum(scores)
    return [s / total for s in scores]


def brute_force_ig_gain(theta: ThetaTable, observed: Dict[int, int], column: int) -> float:
    def entropy(p):
        return -sum(q * math.log2(q) for q in p if q > 0)

    posterior = brute_force_posterior(theta, observed)
    expected = 0.0
    for value in (0, 1):
        p_value = sum(posterior[j] * (theta.theta[column, j] if value
                                      else 1.0 - theta.theta[column, j])
                      for j in range(theta.m))
        if p_value > 0:
            expected += p_value * entropy(brute_force_posterior(theta, {**observed,
                                                                        column: value}))
    return entropy(posterior) - expected


def full_information_map(theta: ThetaTable, bits: Sequence[int]) -> int:
    """Most probable class given all features, ties broken by lowest index."""
    best, best_score = 0, -1.0
    for j in range(theta.m):
        score = theta.class_prior[j]
        for i, b in enumerate(bits):
            score *= theta.theta[i, j] if b else 1.0 - theta.theta[i, j]
        if score > best_score:
            best, best_score = j, score
    return best


def optimal_identification_cost(hypotheses: HypothesisSet, costs: Sequence[float]) -> float:
    """
    Expected cost of the best adaptive query policy that identifies
    the decision region, by dynamic programming over consistent sets.
    """
    weights = hypotheses.weights
    num_columns = hypotheses.num_columns

    @functools.lru_cache(maxsize=None)
    def cost(alive: frozenset, observed: frozenset) -> float:
        if len({int(hypotheses.regions[h]) for h in alive}) <= 1:
            return 0.0
        total = sum(weights[h] for h in alive)
        best = math.inf
        for column in range(num_columns):
            if column in observed:
                continue
            branches = [frozenset(h for h in alive if hypotheses.bits[h, column] == v)
                        for v in (0, 1)]
            if any(branch == alive for branch in branches):
                continue
            expected = costs[column] + sum(
                sum(weights[h] for h in branch) / total
                * cost(branch, observed | {column})
                for branch in branches if branch)
            best = min(best, expected)
        return best

    return cost(frozenset(range(len(weights))), frozenset())
