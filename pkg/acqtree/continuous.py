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


from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from .belief import BeliefState
from .belief import DriftConfig
from .belief import ThetaTable
from .belief import sample_theta
from .belief import update_posterior
from .error import AcqTreeError

# Binary and one-hot features are cut at this single threshold.
BINARY_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class ThresholdGrid:
    """
    Strictly increasing thresholds per feature. Feature *i* owns the
    consecutive columns ``offsets[i]:offsets[i + 1]``, one per threshold.
    """
    thresholds: Tuple[np.ndarray, ...]

    def __post_init__(self):
        thresholds = tuple(np.atleast_1d(np.asarray(t, dtype=np.float64))
                           for t in self.thresholds)
        for i, t in enumerate(thresholds):
            if t.size < 1:
                raise AcqTreeError(f'feature {i} has no threshold')
            if np.any(np.diff(t) <= 0):
                raise AcqTreeError(f'thresholds of feature {i} must be strictly increasing')
        object.__setattr__(self, 'thresholds', thresholds)

    @property
    def num_features(self) -> int:
        return len(self.thresholds)

    @property
    def counts(self) -> np.ndarray:
        return np.array([t.size for t in self.thresholds], dtype=int)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.counts)])

    @property
    def num_columns(self) -> int:
        return int(self.counts.sum())

    @property
    def column_features(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_features), self.counts)

    @property
    def column_thresholds(self) -> np.ndarray:
        return np.concatenate(self.thresholds)

    def column(self, feature: int, k: int) -> int:
        return int(self.offsets[feature] + k)


@dataclass(frozen=True, eq=False)
class ThresholdBandit:
    """Exp3 gain sums S[i][k], one row per feature."""
    gain_sums: Tuple[np.ndarray, ...]
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise AcqTreeError(f'eta must be positive, got {self.eta}')

    @classmethod
    def initial(cls, grid: ThresholdGrid, eta: float) -> 'ThresholdBandit':
        return cls(tuple(np.zeros(k) for k in grid.counts), eta)

    def distribution(self, feature: int) -> np.ndarray:
        return exp3_distribution(self.gain_sums[feature], self.eta)


@dataclass(frozen=True, eq=False)
class LatentBelief:
    """
    Belief over (feature, threshold) columns of *grid*, plus how often
    each column was queried per label.
    """
    belief: BeliefState
    usage: np.ndarray
    grid: ThresholdGrid

    def __post_init__(self):
        usage = np.asarray(self.usage, dtype=np.float64)
        if self.belief.n != self.grid.num_columns or usage.shape != self.belief.alpha.shape:
            raise AcqTreeError('latent belief does not match its threshold grid')
        if np.any(usage < 0):
            raise AcqTreeError('usage counts must be nonnegative')
        object.__setattr__(self, 'usage', usage)

    @classmethod
    def from_belief(cls, belief: BeliefState, grid: ThresholdGrid) -> 'LatentBelief':
        """Start every threshold of feature i from row i of *belief*."""
        if belief.n != grid.num_features:
            raise AcqTreeError(f'belief has {belief.n} features,'
                               f' grid has {grid.num_features}')
        rows = grid.column_features
        return cls(BeliefState(belief.alpha[rows], belief.beta[rows], belief.class_counts),
                   np.zeros((grid.num_columns, belief.m)),
                   grid)

    def most_used_columns(self) -> np.ndarray:
        """Per feature, the column used most often over all labels, ties lowest."""
        totals = self.usage.sum(axis=1)
        offsets = self.grid.offsets
        return np.array([offsets[i] + int(np.argmax(totals[offsets[i]:offsets[i + 1]]))
                         for i in range(self.grid.num_features)], dtype=int)


def build_threshold_grid(warmup_values: np.ndarray,
                         k: int,
                         binary_features: Optional[Sequence[bool]] = None) -> ThresholdGrid:
    """
    Place *k* thresholds per feature at the (1..k)/(k+1) empirical
    quantiles of the warmup values. Constant features collapse to a
    single threshold at their value, binary features to one at 0.5.
    """
    warmup_values = np.asarray(warmup_values, dtype=np.float64)
    if k < 1:
        raise AcqTreeError(f'threshold count must be positive, got {k}')
    if warmup_values.ndim != 2 or warmup_values.shape[0] == 0:
        raise AcqTreeError('empty warmup')
    n = warmup_values.shape[1]
    binary_features = binary_features if binary_features is not None else [False] * n
    levels = np.arange(1, k + 1) / (k + 1)
    thresholds = []
    for i in range(n):
        if binary_features[i]:
            thresholds.append(np.array([BINARY_THRESHOLD]))
        else:
            thresholds.append(np.unique(np.quantile(warmup_values[:, i], levels)))
    return ThresholdGrid(tuple(thresholds))


def binarize(x: float, tau: float) -> int:
    return int(x >= tau)


def binarize_point(values: Sequence[float], grid: ThresholdGrid,
                   columns: Sequence[int]) -> np.ndarray:
    """Binarize feature i of *values* at the threshold of ``columns[i]``."""
    thresholds = grid.column_thresholds[np.asarray(columns, dtype=int)]
    return (np.asarray(values, dtype=np.float64) >= thresholds).astype(np.uint8)


def exp3_distribution(gain_sums: np.ndarray, eta: float) -> np.ndarray:
    if not eta > 0:
        raise AcqTreeError(f'eta must be positive, got {eta}')
    return softmax(eta * np.asarray(gain_sums, dtype=np.float64))


def exp3_update(bandit: ThresholdBandit, feature: int, k: int,
                pi_k: float, gain: float) -> ThresholdBandit:
    if not pi_k > 0:
        raise AcqTreeError(f'sampling probability must be positive, got {pi_k}')
    gain_sums = list(bandit.gain_sums)
    row = gain_sums[feature].copy()
    row[k] += gain / pi_k
    gain_sums[feature] = row
    return replace(bandit, gain_sums=tuple(gain_sums))


def select_thresholds_exp3(bandit: ThresholdBandit,
                           rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Sample one threshold index per feature, return indices and their probabilities."""
    choices = np.zeros(len(bandit.gain_sums), dtype=int)
    probabilities = np.zeros(len(bandit.gain_sums))
    for i in range(len(bandit.gain_sums)):
        distribution = bandit.distribution(i)
        choices[i] = rng.choice(distribution.size, p=distribution)
        probabilities[i] = distribution[choices[i]]
    return choices, probabilities


def select_threshold_exhaustive(gains: Sequence[float]) -> int:
    gains = np.asarray(gains, dtype=np.float64)
    if gains.size < 1:
        raise AcqTreeError('no threshold gains given')
    return int(np.argmax(gains))


def reward_from_gains(gains: np.ndarray, normalizer: Optional[float]) -> np.ndarray:
    """Scale gains into [0, 1] Exp3 rewards, all zero without a normalizer."""
    gains = np.asarray(gains, dtype=np.float64)
    if not normalizer or not normalizer > 0:
        return np.zeros_like(gains)
    return np.clip(gains / normalizer, 0.0, 1.0)


def sample_latent_theta(latent: LatentBelief, rng: np.random.Generator) -> ThetaTable:
    return sample_theta(latent.belief, rng)


def update_latent(latent: LatentBelief,
                  observations,
                  true_label: int,
                  drift: Optional[DriftConfig] = None) -> LatentBelief:
    """
    Update the parameters of the queried columns and count their usage.
    Observations are addressed by grid column.
    """
    belief = update_posterior(latent.belief, observations, true_label, drift=drift)
    usage = latent.usage.copy()
    for observation in observations:
        usage[observation.column, true_label] += 1.0
    return replace(latent, belief=belief, usage=usage)


def aggregate_theta(latent: LatentBelief, feature: int, label: int) -> float:
    """Usage-weighted average of the threshold posterior means, with +1 smoothing."""
    offsets = latent.grid.offsets
    columns = slice(offsets[feature], offsets[feature + 1])
    weights = latent.usage[columns, label] + 1.0
    means = latent.belief.mean[columns, label]
    return float(np.sum(weights * means) / np.sum(weights))


def aggregate_theta_table(latent: LatentBelief) -> ThetaTable:
    grid = latent.grid
    weights = latent.usage + 1.0
    weighted = np.add.reduceat(weights * latent.belief.mean, grid.offsets[:-1], axis=0)
    totals = np.add.reduceat(weights, grid.offsets[:-1], axis=0)
    return ThetaTable(weighted / totals, latent.belief.class_prior)
