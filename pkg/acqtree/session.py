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
from typing import Callable, Optional, Sequence

import numpy as np

from .acquisition import ColumnLayout
from .acquisition import CostModel
from .acquisition import Criterion
from .acquisition import ObservationSet
from .acquisition import StopReason
from .acquisition import column_gains
from .acquisition import score_features
from .acquisition import select_query
from .acquisition import should_stop
from .belief import ThetaTable
from .belief import class_posterior
from .constants import DEFAULT_HYPOTHESIS_COUNT
from .error import DataError
from .error import DegenerateEvidenceError
from .hypotheses import condition
from .hypotheses import enumerate_hypotheses
from .hypotheses import region_census
from .hypotheses import sample_hypotheses
from .log import LOGGER

# Answers the bit of a column for the current data point.
Oracle = Callable[[int], int]

# Costs within this slack of the budget are still affordable.
BUDGET_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class SessionResult:
    prediction: int
    observations: ObservationSet
    stop_reason: StopReason
    hypotheses: int
    utility: Optional[float] = None

    @property
    def queries_made(self) -> int:
        return len(self.observations)

    @property
    def cost(self) -> float:
        return self.observations.total_cost

    def scored(self, true_label: int,
               utility_matrix: Optional[np.ndarray] = None) -> 'SessionResult':
        """Attach the utility of the prediction once the label is known."""
        if utility_matrix is None:
            utility = float(self.prediction == true_label)
        else:
            utility = float(utility_matrix[true_label, self.prediction])
        return replace(self, utility=utility)


def run_session(theta: ThetaTable,
                oracle: Oracle,
                criterion: Criterion = Criterion.EC2,
                cost_model: CostModel = None,
                hypothesis_count: int = DEFAULT_HYPOTHESIS_COUNT,
                budget: Optional[float] = None,
                rng: np.random.Generator = None,
                *,
                layout: ColumnLayout = None,
                allowed_features: Optional[Sequence[int]] = None,
                enumerate_all: bool = False,
                utility_matrix: Optional[np.ndarray] = None) -> SessionResult:
    """
    Predict the label of one data point, querying features greedily
    until a stopping rule fires.

    The *oracle* is asked for column indices. In binary mode columns
    and features coincide; with a *layout* each feature may own
    several columns, of which at most one is queried.

    :param theta: parameters of the epoch, one row per column
    :param oracle: answers the bit of a column for the data point
    :param criterion: query selection criterion
    :param cost_model: feature costs, unit costs if not given
    :param hypothesis_count: number of hypothesis draws
    :param budget: optional maximum total cost of the session
    :param rng: random source for hypotheses and the RANDOM criterion
    :param layout: column to feature mapping, identity if not given
    :param allowed_features: features that may be queried, all if not given
    :param enumerate_all: enumerate all hypotheses instead of sampling
    :param utility_matrix: m x m utility of predicting column given row
    :raise DataError: if the oracle fails to answer
    """
    if budget is not None and not budget > 0:
        raise ValueError(f'budget must be positive, got {budget}')
    criterion = Criterion.parse(criterion)
    layout = layout if layout is not None else ColumnLayout.identity(theta.n)
    num_features = layout.num_features
    cost_model = cost_model if cost_model is not None else CostModel.uniform(num_features)
    rng = rng if rng is not None else np.random.default_rng()
    allowed = sorted(set(range(num_features) if allowed_features is None
                         else (int(i) for i in allowed_features)))

    hypotheses = enumerate_hypotheses(theta) if enumerate_all \
        else sample_hypotheses(theta, hypothesis_count, rng)
    distinct = len(hypotheses)
    observations = ObservationSet()
    queried = set()

    while True:
        remaining = [i for i in allowed if i not in queried]
        decision = should_stop(hypotheses, len(remaining))
        if decision.stop:
            stop_reason = decision.reason
            break
        if budget is not None:
            remaining = [i for i in remaining
                         if observations.total_cost + cost_model.cost(i)
                         <= budget + BUDGET_TOLERANCE]
            if not remaining:
                stop_reason = StopReason.BUDGET
                break
        gains = column_gains(criterion, theta, hypotheses, observations)
        scores = score_features(gains, layout, remaining, cost_model)
        choice = select_query(scores, queried, rng, criterion)
        if choice is None:
            stop_reason = should_stop(hypotheses, len(remaining),
                                      best_gain=max(s.ratio for s in scores)).reason
            break
        value = _reveal(oracle, choice.feature, choice.column)
        observations = observations.add(choice.feature, value,
                                        cost=cost_model.cost(choice.feature),
                                        column=choice.column)
        queried.add(choice.feature)
        hypotheses = condition(hypotheses, choice.column, value)

    if stop_reason is StopReason.ONE_REGION:
        prediction = next(iter(region_census(hypotheses)))
    else:
        prediction = predict_fallback(theta, observations, utility_matrix)
    return SessionResult(prediction=int(prediction),
                         observations=observations,
                         stop_reason=stop_reason,
                         hypotheses=distinct)


def predict_fallback(theta: ThetaTable,
                     observations: ObservationSet,
                     utility_matrix: Optional[np.ndarray] = None) -> int:
    """
    Predict the class of highest expected utility under the posterior,
    the most probable class under the default 0-1 utility.
    """
    try:
        posterior = class_posterior(theta, observations)
    except DegenerateEvidenceError:
        LOGGER.debug('Degenerate evidence, predicting from the class prior')
        posterior = theta.class_prior
    if utility_matrix is not None:
        return int(np.argmax(posterior @ np.asarray(utility_matrix)))
    return int(np.argmax(posterior))


def _reveal(oracle: Oracle, feature: int, column: int) -> int:
    try:
        value = oracle(column)
    except (LookupError, TypeError, ValueError) as e:
        raise DataError(f'Failed to reveal feature {feature}: {e}') from e
    if value not in (0, 1):
        raise DataError(f'Feature {feature} revealed non-binary value {value!r}')
    return int(value)
