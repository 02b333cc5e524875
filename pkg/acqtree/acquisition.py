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


import math
from dataclasses import dataclass
from enum import Enum
from typing import (AbstractSet, Iterator, List, NamedTuple, Optional,
                    Sequence, Tuple)

import numpy as np
from scipy.special import entr

from .belief import ThetaTable
from .belief import class_posterior
from .constants import ZERO_GAIN_TOLERANCE
from .continuous import select_threshold_exhaustive
from .error import AcqTreeError
from .error import DegenerateEvidenceError
from .error import DegenerateSetError
from .error import DuplicateObservationError
from .hypotheses import HypothesisSet
from .hypotheses import region_census
from .log import LOGGER


class Criterion(Enum):
    EC2 = 'EC2'
    IG = 'IG'
    US = 'US'
    RANDOM = 'RANDOM'

    @classmethod
    def parse(cls, value) -> 'Criterion':
        if isinstance(value, Criterion):
            return value
        try:
            return cls(str(value).upper())
        except ValueError as e:
            raise AcqTreeError(f'unknown criterion {value!r}') from e


class StopReason(Enum):
    ONE_REGION = 'ONE_REGION'
    EXHAUSTED = 'EXHAUSTED'
    NO_GAIN = 'NO_GAIN'
    EMPTY = 'EMPTY'
    BUDGET = 'BUDGET'


class Observation(NamedTuple):
    feature: int
    value: int
    column: int
    cost: float


@dataclass(frozen=True)
class ObservationSet:
    """Queried features of one epoch in query order."""
    entries: Tuple[Observation, ...] = ()
    total_cost: float = 0.0

    def __iter__(self) -> Iterator[Observation]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def features(self) -> Tuple[int, ...]:
        return tuple(e.feature for e in self.entries)

    def add(self, feature: int, value: int, cost: float = 1.0,
            column: int = None) -> 'ObservationSet':
        if feature in self.features:
            raise DuplicateObservationError(f'feature {feature} already observed')
        entry = Observation(feature=int(feature),
                            value=int(value),
                            column=int(feature if column is None else column),
                            cost=float(cost))
        entries = self.entries + (entry,)
        return ObservationSet(entries, math.fsum(e.cost for e in entries))

    def with_columns(self, columns: Sequence[int]) -> 'ObservationSet':
        """Readdress entries so that feature i maps to ``columns[i]``."""
        return ObservationSet(tuple(e._replace(column=int(columns[e.feature]))
                                    for e in self.entries),
                              self.total_cost)


@dataclass(frozen=True, eq=False)
class CostModel:
    costs: np.ndarray

    def __post_init__(self):
        costs = np.array(self.costs, dtype=np.float64, ndmin=1)
        if costs.ndim != 1 or not np.all(costs > 0):
            raise AcqTreeError('feature costs must be positive')
        object.__setattr__(self, 'costs', costs)

    @classmethod
    def uniform(cls, n: int) -> 'CostModel':
        return cls(np.ones(n))

    def __len__(self) -> int:
        return self.costs.size

    def cost(self, feature: int) -> float:
        return float(self.costs[feature])


class GainScore(NamedTuple):
    feature: int
    gain: float
    ratio: float
    column: int


@dataclass(frozen=True, eq=False)
class ColumnLayout:
    """
    Maps query columns to features. In binary mode every feature is
    its own column, in continuous mode a feature owns one column per
    candidate threshold.
    """
    features: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'features', np.asarray(self.features, dtype=int))

    @classmethod
    def identity(cls, n: int) -> 'ColumnLayout':
        return cls(np.arange(n))

    @property
    def num_columns(self) -> int:
        return self.features.size

    @property
    def num_features(self) -> int:
        return int(self.features.max()) + 1 if self.features.size else 0

    def columns_of(self, feature: int) -> np.ndarray:
        return np.flatnonzero(self.features == feature)


class StopDecision(NamedTuple):
    stop: bool
    reason: Optional[StopReason] = None


def edge_weight(region_masses: np.ndarray) -> np.ndarray:
    """Total weight of edges between hypotheses of different regions."""
    region_masses = np.asarray(region_masses)
    return (np.square(region_masses.sum(axis=-1))
            - np.square(region_masses).sum(axis=-1)) / 2.0


def ec2_objective(hypotheses: HypothesisSet) -> float:
    _check_not_empty(hypotheses)
    return float(edge_weight(hypotheses.region_masses()))


def ec2_edge_cut(hypotheses: HypothesisSet) -> float:
    """Weight of all edges cut so far, in the fixed hypothesis weights."""
    all_regions = np.bincount(hypotheses.regions, weights=hypotheses.weights,
                              minlength=hypotheses.num_classes)
    return float(edge_weight(all_regions) - edge_weight(hypotheses.region_masses(False)))


def ec2_gains(hypotheses: HypothesisSet) -> np.ndarray:
    """Expected alive edge weight cut by each column."""
    _check_not_empty(hypotheses)
    masses = hypotheses.masses
    one_hot = np.eye(hypotheses.num_classes)[hypotheses.regions]
    bits = hypotheses.bits.astype(np.float64)
    ones = (bits * masses[:, None]).T @ one_hot
    zeros = ((1.0 - bits) * masses[:, None]).T @ one_hot
    remaining = edge_weight(ones + zeros)
    gains = (ones.sum(axis=1) * (remaining - edge_weight(ones))
             + zeros.sum(axis=1) * (remaining - edge_weight(zeros)))
    return np.maximum(gains, 0.0)


def ec2_gain(hypotheses: HypothesisSet, candidate: int) -> float:
    _check_unobserved(hypotheses, candidate)
    return float(ec2_gains(hypotheses)[candidate])


def us_gains(hypotheses: HypothesisSet) -> np.ndarray:
    """Expected reduction of the entropy over alive hypotheses, in bits."""
    _check_not_empty(hypotheses)
    masses = hypotheses.masses
    entropy = entr(masses).sum() / math.log(2)
    expected = np.zeros(hypotheses.num_columns)
    for value in (0, 1):
        member = hypotheses.bits == value
        p_value = (masses[:, None] * member).sum(axis=0)
        safe_p = np.where(p_value > 0, p_value, 1.0)
        conditional = entr(np.where(member, masses[:, None] / safe_p, 0.0)).sum(axis=0)
        expected += np.where(p_value > 0, p_value * conditional, 0.0) / math.log(2)
    return np.maximum(entropy - expected, 0.0)


def us_gain(hypotheses: HypothesisSet, candidate: int) -> float:
    _check_unobserved(hypotheses, candidate)
    return float(us_gains(hypotheses)[candidate])


def ig_gains(theta: ThetaTable, observations: ObservationSet) -> np.ndarray:
    """Expected reduction of the label entropy for each column, in bits."""
    try:
        posterior = class_posterior(theta, observations)
    except DegenerateEvidenceError:
        LOGGER.debug('Degenerate evidence, scoring against the class prior')
        posterior = theta.class_prior
    entropy = _entropy_bits(posterior)
    expected = np.zeros(theta.n)
    for likelihood in (theta.theta, 1.0 - theta.theta):
        joint = likelihood * posterior[None, :]
        p_value = joint.sum(axis=1)
        safe_p = np.where(p_value > 0, p_value, 1.0)
        expected += np.where(p_value > 0,
                             p_value * _entropy_bits(joint / safe_p[:, None]),
                             0.0)
    return np.clip(entropy - expected, 0.0, math.log2(theta.m) if theta.m > 1 else 0.0)


def ig_gain(theta: ThetaTable, observations: ObservationSet, candidate: int) -> float:
    if candidate in {e.column for e in observations}:
        raise DuplicateObservationError(f'column {candidate} already observed')
    return float(ig_gains(theta, observations)[candidate])


def column_gains(criterion: Criterion,
                 theta: ThetaTable,
                 hypotheses: HypothesisSet,
                 observations: ObservationSet) -> Optional[np.ndarray]:
    """Gains of all columns under *criterion*, None for RANDOM."""
    if criterion is Criterion.EC2:
        return ec2_gains(hypotheses)
    if criterion is Criterion.IG:
        return ig_gains(theta, observations)
    if criterion is Criterion.US:
        return us_gains(hypotheses)
    return None


def score_features(gains: Optional[np.ndarray],
                   layout: ColumnLayout,
                   candidates: Sequence[int],
                   cost_model: CostModel) -> List[GainScore]:
    """
    Score each candidate feature by its best column. Without gains,
    as for the RANDOM criterion, every score is zero.
    """
    scores = []
    for feature in candidates:
        columns = layout.columns_of(feature)
        if gains is None:
            column, gain = int(columns[0]), 0.0
        else:
            column = int(columns[select_threshold_exhaustive(gains[columns])])
            gain = float(gains[column])
        scores.append(GainScore(feature=int(feature),
                                gain=gain,
                                ratio=gain / cost_model.cost(feature),
                                column=column))
    return scores


def gain_normalizer(criterion: Criterion,
                    hypotheses: HypothesisSet,
                    num_classes: int) -> Optional[float]:
    """Upper bound of the gains of *criterion*, used to scale them into [0, 1]."""
    if criterion is Criterion.EC2:
        normalizer = ec2_objective(hypotheses)
    elif criterion is Criterion.IG:
        normalizer = math.log2(num_classes) if num_classes > 1 else 0.0
    elif criterion is Criterion.US:
        normalizer = math.log2(hypotheses.alive_count) if hypotheses.alive_count > 1 else 0.0
    else:
        return None
    return normalizer if normalizer > 0 else None


def select_query(scores: Sequence[GainScore],
                 already_queried: AbstractSet[int],
                 rng: np.random.Generator,
                 criterion: Criterion = Criterion.EC2) -> Optional[GainScore]:
    """
    Pick the score with the highest gain-cost ratio, ties broken by
    the lowest feature index. RANDOM picks uniformly and ignores
    gains and costs.

    :return: the chosen score, or None if no candidate has a ratio
        above the zero-gain tolerance
    """
    candidates = sorted((s for s in scores if s.feature not in already_queried),
                        key=lambda s: s.feature)
    if not candidates:
        return None
    if criterion is Criterion.RANDOM:
        return candidates[int(rng.integers(len(candidates)))]
    best = min(candidates, key=lambda s: (-s.ratio, s.feature))
    if best.ratio <= ZERO_GAIN_TOLERANCE:
        return None
    return best


def should_stop(hypotheses: HypothesisSet,
                remaining_features: int,
                best_gain: Optional[float] = None) -> StopDecision:
    if hypotheses.is_empty:
        return StopDecision(True, StopReason.EMPTY)
    if len(region_census(hypotheses)) <= 1:
        return StopDecision(True, StopReason.ONE_REGION)
    if remaining_features <= 0:
        return StopDecision(True, StopReason.EXHAUSTED)
    if best_gain is not None and best_gain <= ZERO_GAIN_TOLERANCE:
        return StopDecision(True, StopReason.NO_GAIN)
    return StopDecision(False)


def _entropy_bits(p: np.ndarray) -> np.ndarray:
    return entr(p).sum(axis=-1) / math.log(2)


def _check_not_empty(hypotheses: HypothesisSet):
    if hypotheses.is_empty:
        raise DegenerateSetError('no hypothesis left')


def _check_unobserved(hypotheses: HypothesisSet, candidate: int):
    if candidate in hypotheses.observed_columns:
        raise DuplicateObservationError(f'column {candidate} already observed')
