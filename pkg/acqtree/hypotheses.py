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
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from .belief import ThetaTable
from .belief import log_joint
from .constants import MAX_ENUMERATED_COLUMNS
from .error import AcqTreeError
from .error import BoundsError
from .error import DuplicateObservationError
from .log import LOGGER


@dataclass(frozen=True)
class Hypothesis:
    bits: Tuple[int, ...]
    region: int


@dataclass(frozen=True, eq=False)
class HypothesisSet:
    """
    Distinct full realizations of all columns, each assigned to its
    MAP decision region.

    *weights* are the probabilities P(h) fixed when the set was
    built, renormalized over the set. *alive* flags the members
    consistent with the observations made so far; :attr:masses
    renormalizes the weights over them.
    """
    bits: np.ndarray
    regions: np.ndarray
    weights: np.ndarray
    num_classes: int
    alive: np.ndarray = None
    observed: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.alive is None:
            object.__setattr__(self, 'alive', np.ones(len(self.regions), dtype=bool))

    def __len__(self) -> int:
        return len(self.regions)

    @property
    def num_columns(self) -> int:
        return self.bits.shape[1]

    @property
    def members(self) -> List[Hypothesis]:
        return [Hypothesis(tuple(int(b) for b in bits), int(region))
                for bits, region in zip(self.bits, self.regions)]

    @property
    def observed_columns(self) -> Tuple[int, ...]:
        return tuple(column for column, _ in self.observed)

    @cached_property
    def alive_weight(self) -> float:
        return float(self.weights[self.alive].sum())

    @property
    def is_empty(self) -> bool:
        return not self.alive_weight > 0.0

    @property
    def alive_count(self) -> int:
        return int(np.count_nonzero(self.alive))

    @cached_property
    def masses(self) -> np.ndarray:
        masses = np.where(self.alive, self.weights, 0.0)
        if self.is_empty:
            return masses
        return masses / self.alive_weight

    def region_masses(self, alive_only: bool = True) -> np.ndarray:
        """Mass per region, alive-renormalized or in the fixed weights."""
        weights = self.masses if alive_only else np.where(self.alive, self.weights, 0.0)
        return np.bincount(self.regions, weights=weights, minlength=self.num_classes)


def sample_hypotheses(theta: ThetaTable, count: int,
                      rng: np.random.Generator) -> HypothesisSet:
    """
    Draw *count* decision regions from the class prior and, for each,
    one realization of every column from Ber(theta[:, region]).
    Identical realizations collapse into one member.
    """
    if count < 1:
        raise AcqTreeError(f'hypothesis count must be positive, got {count}')
    sampled_regions = rng.choice(theta.m, size=count, p=theta.class_prior)
    draws = rng.random((count, theta.n))
    bits = (draws < theta.theta[:, sampled_regions].T).astype(np.uint8)
    _, first_index = np.unique(bits, axis=0, return_index=True)
    return _build_set(theta, bits[np.sort(first_index)])


def enumerate_hypotheses(theta: ThetaTable) -> HypothesisSet:
    """All 2^n realizations, first column most significant."""
    if theta.n > MAX_ENUMERATED_COLUMNS:
        raise AcqTreeError(f'cannot enumerate {theta.n} columns,'
                           f' at most {MAX_ENUMERATED_COLUMNS} supported')
    codes = np.arange(2 ** theta.n)[:, None]
    shifts = np.arange(theta.n)[::-1][None, :]
    bits = ((codes >> shifts) & 1).astype(np.uint8)
    hypotheses = _build_set(theta, bits)
    # Zero-probability realizations cannot be consistent with any point.
    keep = hypotheses.weights > 0.0
    return HypothesisSet(bits=hypotheses.bits[keep],
                         regions=hypotheses.regions[keep],
                         weights=hypotheses.weights[keep],
                         num_classes=theta.m)


def _build_set(theta: ThetaTable, bits: np.ndarray) -> HypothesisSet:
    joint = log_joint(theta, bits)
    regions = np.argmax(joint, axis=1)
    log_marginals = logsumexp(joint, axis=1)
    return HypothesisSet(bits=bits,
                         regions=regions,
                         weights=softmax(log_marginals),
                         num_classes=theta.m)


def condition(hypotheses: HypothesisSet, column: int, value: int) -> HypothesisSet:
    """
    Keep alive only the members whose bit at *column* equals *value*.

    :raise DuplicateObservationError: if *column* was observed before
    """
    if not 0 <= column < hypotheses.num_columns:
        raise BoundsError(f'column {column} out of range'
                          f' [0, {hypotheses.num_columns})')
    if column in hypotheses.observed_columns:
        raise DuplicateObservationError(f'column {column} already observed')
    alive = hypotheses.alive & (hypotheses.bits[:, column] == value)
    conditioned = replace(hypotheses,
                          alive=alive,
                          observed=hypotheses.observed + ((column, int(value)),))
    if conditioned.is_empty:
        LOGGER.debug(f'No hypothesis consistent with column {column} = {value}')
    return conditioned


def region_census(hypotheses: HypothesisSet) -> Dict[int, float]:
    region_masses = hypotheses.region_masses()
    return {int(region): float(region_masses[region])
            for region in np.flatnonzero(region_masses > 0.0)}
