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


from dataclasses import dataclass, field, replace
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .acquisition import ColumnLayout
from .acquisition import CostModel
from .acquisition import Criterion
from .acquisition import ObservationSet
from .acquisition import gain_normalizer
from .acquisition import ig_gains
from .belief import BeliefState
from .belief import DriftConfig
from .belief import ThetaTable
from .belief import posterior_mean
from .belief import sample_theta
from .belief import update_posterior
from .constants import DEFAULT_EXP3_ETA
from .constants import DEFAULT_HYPOTHESIS_COUNT
from .constants import DEFAULT_OFS_EPSILON
from .constants import DEFAULT_OFS_LEARNING_RATE
from .constants import DEFAULT_THRESHOLD_COUNT
from .constants import DEFAULT_WARMUP_SIZE
from .continuous import LatentBelief
from .continuous import ThresholdBandit
from .continuous import ThresholdGrid
from .continuous import aggregate_theta_table
from .continuous import binarize
from .continuous import binarize_point
from .continuous import build_threshold_grid
from .continuous import exp3_update
from .continuous import reward_from_gains
from .continuous import sample_latent_theta
from .continuous import select_thresholds_exp3
from .continuous import update_latent
from .datastream import DataPoint
from .datastream import accuracy
from .datastream import evaluate_test
from .datastream import evaluate_theta
from .datastream import f_measure
from .datastream import resolve_utility
from .error import AcqTreeError
from .error import DataError
from .log import LOGGER
from .log import log_epoch
from .session import run_session

Seed = Union[int, np.random.SeedSequence]


@dataclass(frozen=True)
class OfsConfig:
    budget: int
    epsilon: float = DEFAULT_OFS_EPSILON
    learning_rate: float = DEFAULT_OFS_LEARNING_RATE

    def __post_init__(self):
        if self.budget < 1:
            raise AcqTreeError(f'OFS budget must be positive, got {self.budget}')
        if not 0.0 <= self.epsilon <= 1.0:
            raise AcqTreeError(f'OFS epsilon must be in [0, 1], got {self.epsilon}')
        if not self.learning_rate > 0:
            raise AcqTreeError(f'OFS learning rate must be positive, got {self.learning_rate}')


@dataclass(frozen=True, eq=False)
class OfsState:
    """Per-class linear weights ranking the features, and the current subset."""
    weights: np.ndarray
    epsilon: float
    budget: int
    learning_rate: float
    selected: Tuple[int, ...] = ()

    @classmethod
    def initial(cls, n: int, m: int, config: OfsConfig) -> 'OfsState':
        return cls(np.zeros((m, n)), config.epsilon, config.budget, config.learning_rate)

    @property
    def n(self) -> int:
        return self.weights.shape[1]

    @property
    def importance(self) -> np.ndarray:
        return np.linalg.norm(self.weights, axis=0)


class OfsEstimate(NamedTuple):
    value: float
    degenerate: bool = False


@dataclass(frozen=True)
class ContinuousConfig:
    thresholds: int = DEFAULT_THRESHOLD_COUNT
    selection: str = 'exhaustive'
    eta: float = DEFAULT_EXP3_ETA
    warmup: int = DEFAULT_WARMUP_SIZE

    def __post_init__(self):
        if self.thresholds < 1:
            raise AcqTreeError(f'threshold count must be positive, got {self.thresholds}')
        if self.selection not in ('exhaustive', 'exp3'):
            raise AcqTreeError(f'unknown threshold selection {self.selection!r}')
        if not self.eta > 0:
            raise AcqTreeError(f'eta must be positive, got {self.eta}')
        if self.warmup < 1:
            raise AcqTreeError(f'warmup size must be positive, got {self.warmup}')


@dataclass(frozen=True, eq=False)
class LearnerConfig:
    criterion: Criterion = Criterion.EC2
    hypothesis_count: int = DEFAULT_HYPOTHESIS_COUNT
    drift: DriftConfig = field(default_factory=DriftConfig)
    feature_selection: Optional[OfsConfig] = None
    continuous: Optional[ContinuousConfig] = None
    budget: Optional[float] = None
    seed: Seed = 0
    enumerate_all: bool = False
    utility_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'criterion', Criterion.parse(self.criterion))
        if self.hypothesis_count < 1:
            raise AcqTreeError(f'hypothesis count must be positive,'
                               f' got {self.hypothesis_count}')
        if self.budget is not None and not self.budget > 0:
            raise AcqTreeError(f'budget must be positive, got {self.budget}')


class EpochRecord(NamedTuple):
    t: int
    prediction: int
    label: int
    correct: bool
    utility: float
    cost: float
    queries: int
    stop_reason: str
    hypotheses: int
    selected: Optional[Tuple[int, ...]] = None
    queried: Tuple[int, ...] = ()


class SessionEvaluation(NamedTuple):
    utility: float
    mean_cost: float


def ofs_select(state: OfsState, rng: np.random.Generator) -> Tuple[int, ...]:
    """
    With probability 1 - epsilon the features of highest weight norm,
    ties broken by lowest index, otherwise a uniformly random subset.
    """
    size = min(state.budget, state.n)
    if rng.random() < 1.0 - state.epsilon:
        chosen = np.argsort(-state.importance, kind='stable')[:size]
    else:
        chosen = rng.choice(state.n, size=size, replace=False)
    return tuple(sorted(int(i) for i in chosen))


def ofs_estimate(x_i: float, queried: bool, selected: bool,
                 budget: int, n: int, epsilon: float) -> OfsEstimate:
    """Inverse-propensity estimate of a feature value."""
    observed = float(queried and selected)
    denominator = budget / n * epsilon + observed * (1.0 - epsilon)
    if not denominator > 0:
        return OfsEstimate(0.0, degenerate=True)
    return OfsEstimate(observed * x_i / denominator)


def ofs_update(state: OfsState, estimates: Sequence[float],
               true_label: int, predicted_label: int) -> OfsState:
    """Multiclass perceptron step on a mistake."""
    if true_label == predicted_label:
        return state
    step = state.learning_rate * np.asarray(estimates, dtype=np.float64)
    weights = state.weights.copy()
    weights[true_label] += step
    weights[predicted_label] -= step
    return replace(state, weights=weights)


def threshold_rewards(latent: LatentBelief, columns: Sequence[int]) -> np.ndarray:
    """
    Exp3 rewards of the sampled threshold *columns*, one per feature:
    the label information of each column's bit under the posterior
    mean, divided by log2 m. Columns that cut every class alike earn
    nothing, a separating column approaches 1.
    """
    theta = posterior_mean(latent.belief).select_rows(columns)
    return reward_from_gains(ig_gains(theta, ObservationSet()),
                             gain_normalizer(Criterion.IG, None, theta.m))


def evaluate_test_sessions(theta: ThetaTable,
                           test_points: Sequence[DataPoint],
                           rng: np.random.Generator,
                           criterion: Criterion = Criterion.EC2,
                           cost_model: CostModel = None,
                           hypothesis_count: int = DEFAULT_HYPOTHESIS_COUNT,
                           utility: str = 'auto',
                           enumerate_all: bool = False) -> SessionEvaluation:
    """
    Run a planning session on every binary test point and report the
    utility of its predictions together with the mean query cost.
    """
    if not test_points:
        raise DataError('empty test set')
    confusion = np.zeros((theta.m, theta.m), dtype=np.int64)
    costs = []
    for point in test_points:
        values = point.features
        result = run_session(theta, lambda c: int(values[c]), criterion,
                             cost_model=cost_model,
                             hypothesis_count=hypothesis_count,
                             rng=rng,
                             enumerate_all=enumerate_all)
        confusion[point.label, result.prediction] += 1
        costs.append(result.cost)
    labels = [p.label for p in test_points]
    if resolve_utility(utility, labels, theta.m) == 'f_measure':
        return SessionEvaluation(f_measure(confusion), float(np.mean(costs)))
    return SessionEvaluation(accuracy(confusion), float(np.mean(costs)))


class OnlineLearner:
    """
    Predicts the labels of a stream of data points, buying feature
    values per point and learning from each label after predicting it.

    :param config: learner configuration
    :param initial_belief: belief over the features before the first epoch
    :param costs: feature costs, unit costs if not given
    :param binary_features: per feature, whether it only takes values
        0 and 1. Used by continuous mode only, all features are
        taken to be binary if not given.
    """

    def __init__(self,
                 config: LearnerConfig,
                 initial_belief: BeliefState,
                 *,
                 costs: CostModel = None,
                 binary_features: Optional[Sequence[bool]] = None):
        n = initial_belief.n
        costs = costs if costs is not None else CostModel.uniform(n)
        if len(costs) != n:
            raise DataError(f'{len(costs)} feature costs given for {n} features')
        self._config = config
        self._belief = initial_belief
        self._costs = costs
        self._binary_features = tuple(binary_features) if binary_features is not None \
            else (True,) * n
        seed = config.seed if isinstance(config.seed, np.random.SeedSequence) \
            else np.random.SeedSequence(config.seed)
        theta_seed, session_seed, exp3_seed, ofs_seed, evaluation_seed = seed.spawn(5)
        self._theta_rng = np.random.default_rng(theta_seed)
        self._session_rng = np.random.default_rng(session_seed)
        self._exp3_rng = np.random.default_rng(exp3_seed)
        self._ofs_rng = np.random.default_rng(ofs_seed)
        self._evaluation_seed = evaluation_seed
        self._ofs = OfsState.initial(n, initial_belief.m, config.feature_selection) \
            if config.feature_selection is not None else None
        self._latent: Optional[LatentBelief] = None
        self._bandit: Optional[ThresholdBandit] = None
        self._t = 0

    @property
    def n(self) -> int:
        return self._belief.n

    @property
    def m(self) -> int:
        return self._belief.m

    @property
    def t(self) -> int:
        return self._t

    @property
    def belief(self) -> BeliefState:
        """The current belief, over threshold columns in continuous mode."""
        return self._latent.belief if self._latent is not None else self._belief

    @property
    def latent(self) -> Optional[LatentBelief]:
        return self._latent

    @property
    def bandit(self) -> Optional[ThresholdBandit]:
        return self._bandit

    @property
    def ofs_state(self) -> Optional[OfsState]:
        return self._ofs

    def warm_up(self, points: Sequence[DataPoint], grid: Optional[ThresholdGrid] = None):
        """
        Place the thresholds of continuous mode from the feature values
        of *points*, or use the given *grid*.
        """
        continuous = self._config.continuous
        if continuous is None:
            return
        if grid is None:
            values = np.stack([self._checked_features(p) for p in points]) \
                if points else np.zeros((0, self.n))
            grid = build_threshold_grid(values, continuous.thresholds, self._binary_features)
        elif grid.num_features != self.n:
            raise AcqTreeError(f'grid has {grid.num_features} features, model expects {self.n}')
        self._latent = LatentBelief.from_belief(self._belief, grid)
        if continuous.selection == 'exp3':
            self._bandit = ThresholdBandit.initial(grid, continuous.eta)
        LOGGER.info(f'Threshold grid with {grid.num_columns} columns'
                    f' for {grid.num_features} features built'
                    f' from {len(points)} points')

    def run(self, stream: Sequence[DataPoint],
            on_epoch: Callable[['OnlineLearner', EpochRecord], None] = None) \
            -> List[EpochRecord]:
        stream = list(stream)
        if self._config.continuous is not None and self._latent is None and stream:
            self.warm_up(stream[:self._config.continuous.warmup])
        records = []
        for point in stream:
            record = self.step(point)
            records.append(record)
            if on_epoch is not None:
                on_epoch(self, record)
        return records

    def step(self, point: DataPoint) -> EpochRecord:
        """Predict one point, then learn from its label."""
        config = self._config
        values = self._checked_features(point)
        if config.continuous is not None and self._latent is None:
            raise AcqTreeError('continuous learner must be warmed up first')

        allowed = None
        if self._ofs is not None:
            self._ofs = replace(self._ofs, selected=ofs_select(self._ofs, self._ofs_rng))
            allowed = self._ofs.selected

        layout = None
        columns = None
        if self._latent is None:
            theta = sample_theta(self._belief, self._theta_rng)

            def oracle(c: int) -> int:
                return int(values[c])
        else:
            grid = self._latent.grid
            theta = sample_latent_theta(self._latent, self._theta_rng)
            thresholds = grid.column_thresholds
            if self._bandit is not None:
                choices, probabilities = select_thresholds_exp3(self._bandit, self._exp3_rng)
                columns = grid.offsets[:-1] + choices
                theta = theta.select_rows(columns)

                def oracle(c: int) -> int:
                    return binarize(values[c], thresholds[columns[c]])
            else:
                layout = ColumnLayout(grid.column_features)
                features = grid.column_features

                def oracle(c: int) -> int:
                    return binarize(values[features[c]], thresholds[c])

        result = run_session(theta, oracle,
                             criterion=config.criterion,
                             cost_model=self._costs,
                             hypothesis_count=config.hypothesis_count,
                             budget=config.budget,
                             rng=self._session_rng,
                             layout=layout,
                             allowed_features=allowed,
                             enumerate_all=config.enumerate_all,
                             utility_matrix=config.utility_matrix)

        # The label is revealed only now that the prediction is made.
        label = self._checked_label(point)
        result = result.scored(label, config.utility_matrix)
        observations = result.observations

        if self._latent is None:
            self._belief = update_posterior(self._belief, observations, label,
                                            drift=config.drift)
        else:
            if columns is not None:
                observations = observations.with_columns(columns)
            self._latent = update_latent(self._latent, observations, label,
                                         drift=config.drift)

        if self._bandit is not None:
            rewards = threshold_rewards(self._latent, columns)
            for i in (allowed if allowed is not None else range(self.n)):
                self._bandit = exp3_update(self._bandit, i, int(choices[i]),
                                           float(probabilities[i]), float(rewards[i]))

        if self._ofs is not None:
            self._ofs = ofs_update(self._ofs,
                                   self._ofs_estimates(result.observations),
                                   label, result.prediction)

        record = EpochRecord(t=self._t,
                             prediction=result.prediction,
                             label=label,
                             correct=result.prediction == label,
                             utility=result.utility,
                             cost=result.cost,
                             queries=result.queries_made,
                             stop_reason=result.stop_reason.value,
                             hypotheses=result.hypotheses,
                             selected=allowed,
                             queried=result.observations.features)
        log_epoch(record.t, record.prediction, record.label, record.cost, record.stop_reason)
        self._t += 1
        return record

    def evaluate(self, test_points: Sequence[DataPoint], utility: str = 'auto') -> float:
        """Utility of full-feature MAP predictions under the current estimate."""
        if self._latent is None:
            return evaluate_test(self._belief, test_points, utility)
        theta, binarized = self._binary_view(test_points)
        return evaluate_theta(theta, binarized, utility)

    def evaluate_sessions(self, test_points: Sequence[DataPoint],
                          utility: str = 'auto') -> SessionEvaluation:
        """Utility and mean cost of planning sessions on the test points."""
        if self._latent is None:
            theta, binarized = posterior_mean(self._belief), list(test_points)
        else:
            theta, binarized = self._binary_view(test_points)
        rng = np.random.default_rng(self._evaluation_seed.spawn(1)[0])
        return evaluate_test_sessions(theta, binarized, rng,
                                      criterion=self._config.criterion,
                                      cost_model=self._costs,
                                      hypothesis_count=self._config.hypothesis_count,
                                      utility=utility,
                                      enumerate_all=self._config.enumerate_all)

    def _binary_view(self, test_points: Sequence[DataPoint]) \
            -> Tuple[ThetaTable, List[DataPoint]]:
        # Each feature is binarized at its most used threshold.
        columns = self._latent.most_used_columns()
        theta = aggregate_theta_table(self._latent)
        return theta, [DataPoint(binarize_point(p.features, self._latent.grid, columns),
                                 p.label)
                       for p in test_points]

    def _ofs_estimates(self, observations) -> np.ndarray:
        state = self._ofs
        queried = {e.feature: e.value for e in observations}
        estimates = np.zeros(self.n)
        for i in range(self.n):
            estimate = ofs_estimate(queried.get(i, 0), i in queried, i in state.selected,
                                    state.budget, self.n, state.epsilon)
            if estimate.degenerate:
                LOGGER.debug(f'Degenerate OFS estimate for feature {i}')
            estimates[i] = estimate.value
        return estimates

    def _checked_features(self, point: DataPoint) -> np.ndarray:
        values = np.asarray(point.features, dtype=np.float64)
        if values.shape != (self.n,):
            raise DataError(f'Data point has {values.size} features,'
                            f' model expects {self.n}')
        if self._config.continuous is None and not np.all((values == 0) | (values == 1)):
            raise DataError('Binary learner received non-binary feature values')
        return values

    def _checked_label(self, point: DataPoint) -> int:
        label = int(point.label)
        if not 0 <= label < self.m:
            raise DataError(f'Label {label} out of range [0, {self.m})')
        return label


def run_online(config: LearnerConfig,
               stream: Sequence[DataPoint],
               initial_belief: BeliefState,
               *,
               costs: CostModel = None,
               binary_features: Optional[Sequence[bool]] = None) \
        -> Tuple[List[EpochRecord], BeliefState]:
    """
    Run the online learner over *stream*.

    :return: one record per epoch and the final belief
    """
    learner = OnlineLearner(config, initial_belief,
                            costs=costs, binary_features=binary_features)
    records = learner.run(stream)
    return records, learner.belief
