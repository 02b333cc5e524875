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


import json
from dataclasses import dataclass
from typing import Optional, Sequence, Union, TYPE_CHECKING

import fsspec
import numpy as np
from scipy.special import logsumexp, softmax, xlogy

from .constants import DEFAULT_DRIFT_ALPHA_BAR
from .constants import DEFAULT_DRIFT_BETA_BAR
from .constants import DEFAULT_DRIFT_GAMMA
from .constants import DEFAULT_PRIOR_KAPPA
from .error import AcqTreeError
from .error import BoundsError
from .error import DegenerateEvidenceError
from .log import LOGGER

if TYPE_CHECKING:
    from .acquisition import ObservationSet

# Sampled parameters are kept this far away from 0 and 1.
THETA_EPSILON = 1e-12

MatrixLike = Union[float, Sequence[Sequence[float]], np.ndarray]


@dataclass(frozen=True, eq=False)
class BeliefState:
    """
    Beta-Bernoulli naive-Bayes belief.

    Row *i* of *alpha* and *beta* holds the Beta parameters of
    P[X_i = 1 | Y_j] for all classes *j*. In continuous mode rows
    are (feature, threshold) columns rather than features.

    :param alpha: n x m matrix of positive Beta alpha parameters
    :param beta: n x m matrix of positive Beta beta parameters
    :param class_counts: m smoothed label tallies defining P(Y)
    """
    alpha: np.ndarray
    beta: np.ndarray
    class_counts: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=np.float64, ndmin=2)
        beta = np.array(self.beta, dtype=np.float64, ndmin=2)
        class_counts = np.array(self.class_counts, dtype=np.float64, ndmin=1)
        if alpha.ndim != 2 or alpha.shape != beta.shape:
            raise AcqTreeError(f'alpha and beta must be matrices of equal shape,'
                               f' got {alpha.shape} and {beta.shape}')
        if class_counts.shape != (alpha.shape[1],):
            raise AcqTreeError(f'class_counts must have length {alpha.shape[1]},'
                               f' got {class_counts.shape}')
        if not (np.all(alpha > 0) and np.all(beta > 0)):
            raise AcqTreeError('Beta parameters must be positive')
        if np.any(class_counts < 0) or not class_counts.sum() > 0:
            raise AcqTreeError('class_counts must be nonnegative'
                               ' with a positive sum')
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 'beta', beta)
        object.__setattr__(self, 'class_counts', class_counts)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def m(self) -> int:
        return self.alpha.shape[1]

    @property
    def class_prior(self) -> np.ndarray:
        return self.class_counts / self.class_counts.sum()

    @property
    def mean(self) -> np.ndarray:
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True, eq=False)
class ThetaTable:
    """
    One parameter table theta[i][j] = P[X_i = 1 | Y_j] together with
    the class prior it was drawn with.

    Tables produced by :func:sample_theta lie strictly inside (0, 1).
    Hand-built tables may use the closed interval, which is how
    deterministic features are expressed.
    """
    theta: np.ndarray
    class_prior: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64, ndmin=2)
        class_prior = np.array(self.class_prior, dtype=np.float64, ndmin=1)
        if theta.ndim != 2 or class_prior.shape != (theta.shape[1],):
            raise AcqTreeError(f'theta of shape {theta.shape} does not match'
                               f' class prior of shape {class_prior.shape}')
        if np.any(theta < 0) or np.any(theta > 1):
            raise AcqTreeError('theta entries must lie in [0, 1]')
        if np.any(class_prior < 0) or abs(class_prior.sum() - 1.0) > 1e-9:
            raise AcqTreeError('class prior must be a probability vector')
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'class_prior', class_prior)

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @property
    def m(self) -> int:
        return self.theta.shape[1]

    def select_rows(self, rows: Sequence[int]) -> 'ThetaTable':
        return ThetaTable(self.theta[np.asarray(rows, dtype=int)], self.class_prior)


@dataclass(frozen=True, eq=False)
class DriftConfig:
    """
    Discounting of the belief toward an injected Beta(alpha_bar, beta_bar)
    before each posterior update. *alpha_bar* and *beta_bar* may be
    scalars, which broadcast to the belief's shape.
    """
    gamma: float = DEFAULT_DRIFT_GAMMA
    alpha_bar: MatrixLike = DEFAULT_DRIFT_ALPHA_BAR
    beta_bar: MatrixLike = DEFAULT_DRIFT_BETA_BAR
    enabled: bool = False

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise AcqTreeError(f'drift gamma must be in [0, 1], got {self.gamma}')
        alpha_bar = np.asarray(self.alpha_bar, dtype=np.float64)
        beta_bar = np.asarray(self.beta_bar, dtype=np.float64)
        if not (np.all(alpha_bar > 0) and np.all(beta_bar > 0)):
            raise AcqTreeError('injected Beta parameters must be positive')
        object.__setattr__(self, 'alpha_bar', alpha_bar)
        object.__setattr__(self, 'beta_bar', beta_bar)

    def check_shape(self, shape):
        for name, value in (('alpha_bar', self.alpha_bar), ('beta_bar', self.beta_bar)):
            if value.ndim and value.shape != tuple(shape):
                raise AcqTreeError(f'drift {name} has shape {value.shape},'
                                   f' belief has shape {tuple(shape)}')


def uniform_belief(n: int, m: int) -> BeliefState:
    return BeliefState(np.ones((n, m)), np.ones((n, m)), np.ones(m))


def sample_theta(belief: BeliefState, rng: np.random.Generator) -> ThetaTable:
    theta = rng.beta(belief.alpha, belief.beta)
    theta = np.clip(theta, THETA_EPSILON, 1.0 - THETA_EPSILON)
    return ThetaTable(theta, belief.class_prior)


def posterior_mean(belief: BeliefState) -> ThetaTable:
    return ThetaTable(belief.mean, belief.class_prior)


def update_posterior(belief: BeliefState,
                     observations: 'ObservationSet',
                     true_label: int,
                     drift: Optional[DriftConfig] = None) -> BeliefState:
    """
    Update the belief with the observations of one epoch and its label.

    With drift enabled, all entries are first discounted toward the
    injected parameters, then the observed entries are incremented.
    Observations are addressed by their column, which equals the
    feature index in binary mode.

    :raise BoundsError: if *true_label* or an observed column is out of range
    """
    if not 0 <= true_label < belief.m:
        raise BoundsError(f'class label {true_label} out of range [0, {belief.m})')
    alpha = belief.alpha.copy()
    beta = belief.beta.copy()
    if drift is not None and drift.enabled:
        drift.check_shape(alpha.shape)
        alpha = (1.0 - drift.gamma) * alpha + drift.gamma * drift.alpha_bar
        beta = (1.0 - drift.gamma) * beta + drift.gamma * drift.beta_bar
    for observation in observations:
        column = observation.column
        if not 0 <= column < belief.n:
            raise BoundsError(f'feature index {column} out of range [0, {belief.n})')
        if observation.value == 1:
            alpha[column, true_label] += 1.0
        elif observation.value == 0:
            beta[column, true_label] += 1.0
        else:
            raise AcqTreeError(f'observed value of feature {observation.feature}'
                               f' must be binary, got {observation.value!r}')
    class_counts = belief.class_counts.copy()
    class_counts[true_label] += 1.0
    return BeliefState(alpha, beta, class_counts)


def class_posterior(theta: ThetaTable,
                    observations: 'ObservationSet') -> np.ndarray:
    """
    Compute P[Y | x_F] under *theta*. An empty observation set yields
    the class prior.

    :raise DegenerateEvidenceError: if the evidence has zero likelihood
        under every class
    """
    log_posterior = _log(theta.class_prior)
    entries = list(observations)
    if entries:
        columns = np.array([e.column for e in entries], dtype=int)
        values = np.array([e.value for e in entries], dtype=np.float64)[:, None]
        rows = theta.theta[columns]
        log_posterior = log_posterior + np.sum(xlogy(values, rows)
                                               + xlogy(1.0 - values, 1.0 - rows),
                                               axis=0)
    if not np.any(np.isfinite(log_posterior)):
        raise DegenerateEvidenceError('observations have zero likelihood'
                                      ' under every class')
    return softmax(log_posterior)


def log_joint(theta: ThetaTable, bits: np.ndarray) -> np.ndarray:
    """
    Log of P[h, Y_j] for each row *h* of *bits* (shape N x n) and each
    class, as an N x m matrix.
    """
    bits = np.asarray(bits)
    per_bit = np.where(bits[:, :, None] == 1,
                       theta.theta[None, :, :],
                       1.0 - theta.theta[None, :, :])
    return _log(per_bit).sum(axis=1) + _log(theta.class_prior)[None, :]


def hypothesis_marginal(theta: ThetaTable, h: Sequence[int]) -> float:
    h = np.asarray(h)
    if h.shape != (theta.n,):
        raise AcqTreeError(f'hypothesis must have length {theta.n}, got {h.shape}')
    return float(np.exp(logsumexp(log_joint(theta, h[None, :]), axis=1))[0])


def interpolate_prior(theta_star: ThetaTable,
                      lambda_: float,
                      kappa: float = DEFAULT_PRIOR_KAPPA) -> BeliefState:
    """
    Build a prior between the uniform Beta(1, 1) prior (*lambda_* = 0)
    and a prior with *kappa* pseudo-counts centered on *theta_star*
    (*lambda_* = 1).
    """
    if not 0.0 <= lambda_ <= 1.0:
        raise AcqTreeError(f'lambda must be in [0, 1], got {lambda_}')
    if not kappa > 0:
        raise AcqTreeError(f'kappa must be positive, got {kappa}')
    theta = theta_star.theta
    alpha = (1.0 - lambda_) + lambda_ * kappa * theta
    beta = (1.0 - lambda_) + lambda_ * kappa * (1.0 - theta)
    return BeliefState(alpha, beta, np.ones(theta_star.m))


def estimate_theta(bits: np.ndarray, labels: Sequence[int], m: int) -> ThetaTable:
    """Laplace-smoothed empirical parameters of a labeled binary dataset."""
    bits = np.asarray(bits, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    one_hot = np.eye(m)[labels]
    ones = bits.T @ one_hot
    totals = one_hot.sum(axis=0)
    theta = (ones + 1.0) / (totals[None, :] + 2.0)
    class_prior = (totals + 1.0) / (totals.sum() + m)
    return ThetaTable(theta, class_prior)


def save_belief(belief: BeliefState, path: str, **metadata):
    document = dict(alpha=belief.alpha.tolist(),
                    beta=belief.beta.tolist(),
                    class_counts=belief.class_counts.tolist(),
                    **metadata)
    with fsspec.open(path, 'w') as fp:
        json.dump(document, fp)


def load_belief(path: str) -> BeliefState:
    return BeliefState(**{k: v for k, v in load_belief_document(path).items()
                          if k in ('alpha', 'beta', 'class_counts')})


def load_belief_document(path: str) -> dict:
    try:
        with fsspec.open(path, 'r') as fp:
            document = json.load(fp)
        LOGGER.info(f'Belief {path} loaded.')
    except FileNotFoundError as e:
        raise AcqTreeError(f'Belief not found: {path}') from e
    missing = {'alpha', 'beta', 'class_counts'}.difference(document)
    if missing:
        raise AcqTreeError(f'Belief {path} lacks {", ".join(sorted(missing))}')
    return document


def _log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore'):
        return np.log(x)
