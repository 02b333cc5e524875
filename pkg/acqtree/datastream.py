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

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import fsspec
import numpy as np
import pandas as pd

from .acquisition import CostModel
from .belief import BeliefState
from .belief import ThetaTable
from .belief import log_joint
from .belief import posterior_mean
from .config import GENERATORS
from .config import SCHEMA_TYPES
from .constants import DEFAULT_LED_IRRELEVANT_FEATURES
from .constants import DEFAULT_LED_NOISE
from .constants import DEFAULT_TEST_FRACTION
from .constants import IMBALANCE_THRESHOLD
from .constants import STAGGER_DEFAULT_DRIFT_POINTS
from .constants import STAGGER_DEFAULT_LENGTH
from .error import AcqTreeError
from .error import ConfigError
from .error import DataError
from .log import LOGGER

STAGGER_ATTRIBUTES = (
    ('size', ('small', 'medium', 'large')),
    ('color', ('red', 'green', 'blue')),
    ('shape', ('circle', 'triangle', 'rectangle')),
)

# Segments a-g of the digits 0-9.
LED_SEGMENTS = np.array([
    [1, 1, 1, 0, 1, 1, 1],
    [0, 0, 1, 0, 0, 1, 0],
    [1, 0, 1, 1, 1, 0, 1],
    [1, 0, 1, 1, 0, 1, 1],
    [0, 1, 1, 1, 0, 1, 0],
    [1, 1, 0, 1, 0, 1, 1],
    [1, 1, 0, 1, 1, 1, 1],
    [1, 0, 1, 0, 0, 1, 0],
    [1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 0, 1, 1],
], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class DataPoint:
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class FeatureLayout:
    """
    Encoded features of a stream. Categorical columns contribute one
    ``column=value`` indicator each.
    """
    names: Tuple[str, ...]
    kinds: Tuple[str, ...]
    class_labels: Tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def m(self) -> int:
        return len(self.class_labels)

    @property
    def binary_features(self) -> Tuple[bool, ...]:
        return tuple(kind == 'binary' for kind in self.kinds)

    @property
    def is_binary(self) -> bool:
        return all(self.binary_features)


@dataclass(frozen=True)
class StreamSpec:
    """A dataset file or generator name with its drift schedule and split."""
    source: str
    length: Optional[int] = None
    drift_points: Tuple[int, ...] = ()
    shuffle_seed: Optional[int] = None
    test_fraction: float = DEFAULT_TEST_FRACTION

    def __post_init__(self):
        drift_points = tuple(int(p) for p in self.drift_points or ())
        if any(a >= b for a, b in zip(drift_points, drift_points[1:])):
            raise ConfigError('stream.drift_points: must be strictly increasing')
        if not 0.0 <= self.test_fraction < 1.0:
            raise ConfigError(f'stream.test_fraction: {self.test_fraction} out of range')
        object.__setattr__(self, 'drift_points', drift_points)

    @property
    def is_generator(self) -> bool:
        return self.source in GENERATORS

    def concept_at(self, t: int) -> int:
        return concept_index(t, self.drift_points)


@dataclass
class Metrics:
    """Running accounting of an online run."""
    num_classes: int
    utility: str = 'accuracy'
    per_epoch: List[Tuple[int, float, bool, float]] = field(default_factory=list)
    test_curve: List[Tuple[int, float]] = field(default_factory=list)
    total_cost: float = 0.0
    confusion: np.ndarray = None

    def __post_init__(self):
        if self.confusion is None:
            self.confusion = np.zeros((self.num_classes, self.num_classes), dtype=np.int64)

    @property
    def accuracy(self) -> float:
        return accuracy(self.confusion)

    @property
    def f_measure(self) -> float:
        return f_measure(self.confusion)

    @property
    def train_utility(self) -> float:
        return self.f_measure if self.utility == 'f_measure' else self.accuracy


def update_metrics(metrics: Metrics, record) -> Metrics:
    """
    Account one epoch record, which must provide ``t``, ``cost``,
    ``prediction`` and ``label``.
    """
    metrics.confusion[record.label, record.prediction] += 1
    metrics.total_cost += record.cost
    metrics.per_epoch.append((record.t, record.cost,
                              record.prediction == record.label,
                              metrics.train_utility))
    return metrics


def accuracy(confusion: np.ndarray) -> float:
    total = confusion.sum()
    return float(np.trace(confusion) / total) if total else 0.0


def per_class_f_measure(confusion: np.ndarray) -> np.ndarray:
    """F1 of each class, rows of *confusion* being true classes."""
    confusion = np.asarray(confusion, dtype=np.float64)
    tp = np.diag(confusion)
    fp = confusion.sum(axis=0) - tp
    fn = confusion.sum(axis=1) - tp
    denominator = 2.0 * tp + fp + fn
    return np.divide(2.0 * tp, denominator,
                     out=np.zeros_like(tp), where=denominator > 0)


def f_measure(confusion: np.ndarray) -> float:
    confusion = np.asarray(confusion)
    if confusion.ndim != 2 or confusion.shape[0] != confusion.shape[1]:
        raise AcqTreeError(f'confusion matrix must be square, got {confusion.shape}')
    return float(per_class_f_measure(confusion).mean())


def is_imbalanced(labels: Sequence[int], num_classes: int) -> bool:
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        return False
    counts = np.bincount(labels, minlength=num_classes)
    return counts.max() / labels.size > IMBALANCE_THRESHOLD


def resolve_utility(utility: str, labels: Sequence[int], num_classes: int) -> str:
    if utility == 'auto':
        return 'f_measure' if is_imbalanced(labels, num_classes) else 'accuracy'
    return utility


def load_dataset(path: str,
                 schema: Optional[Dict[str, str]] = None,
                 class_labels: Optional[Sequence[str]] = None) \
        -> Tuple[List[DataPoint], FeatureLayout]:
    """
    Load a comma-separated dataset with header row whose last column
    is the label.

    Columns not named in *schema* are inferred: binary if all values
    are 0 or 1, real if all values are numeric, categorical otherwise.
    Labels map to class indices in order of first appearance unless
    *class_labels* fixes the order.

    :raise DataError: if the file is missing or a cell is empty or unparseable
    :raise ConfigError: if *schema* names an unknown column or type
    """
    try:
        with fsspec.open(path, 'r', encoding='utf-8') as fp:
            frame = pd.read_csv(fp, dtype=str, keep_default_na=False,
                                skipinitialspace=True)
    except FileNotFoundError as e:
        raise DataError(f'Dataset not found: {path}') from e
    if frame.shape[1] < 2:
        raise DataError(f'Dataset {path} needs at least one feature and a label column')
    frame = frame.apply(lambda column: column.str.strip())
    empty = np.argwhere(frame.to_numpy() == '')
    if empty.size:
        row, col = empty[0]
        raise DataError(f'Missing value in {path}: row {row + 1}, column {frame.columns[col]}')

    schema = dict(schema or {})
    feature_columns = list(frame.columns[:-1])
    for column, kind in schema.items():
        if column not in feature_columns:
            raise ConfigError(f'stream.schema.{column}: no such feature column')
        if kind not in SCHEMA_TYPES:
            raise ConfigError(f'stream.schema.{column}: unknown schema type {kind!r}')

    blocks = []
    names = []
    kinds = []
    for column in feature_columns:
        values = frame[column]
        kind = schema.get(column) or _infer_kind(values)
        if kind == 'categorical':
            codes, categories = pd.factorize(values)
            blocks.append(np.eye(len(categories))[codes])
            names.extend(f'{column}={category}' for category in categories)
            kinds.extend(['binary'] * len(categories))
        else:
            numbers = pd.to_numeric(values, errors='coerce').to_numpy(dtype=np.float64)
            invalid = np.isnan(numbers) if kind == 'real' else ~np.isin(numbers, (0.0, 1.0))
            if np.any(invalid):
                row = int(np.flatnonzero(invalid)[0])
                raise DataError(f'Unparseable {kind} value {values.iloc[row]!r} in {path}:'
                                f' row {row + 1}, column {column}')
            blocks.append(numbers[:, None])
            names.append(column)
            kinds.append(kind)

    label_values = frame[frame.columns[-1]]
    if class_labels is None:
        labels, categories = pd.factorize(label_values)
        class_labels = tuple(str(c) for c in categories)
    else:
        class_labels = tuple(str(c) for c in class_labels)
        unknown = ~label_values.isin(class_labels)
        if unknown.any():
            row = int(np.flatnonzero(unknown.to_numpy())[0])
            raise DataError(f'Unknown label {label_values.iloc[row]!r} in {path}:'
                            f' row {row + 1}, column {frame.columns[-1]}')
        labels = pd.Categorical(label_values, categories=class_labels).codes

    features = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
    points = [DataPoint(features[r], int(labels[r])) for r in range(len(frame))]
    layout = FeatureLayout(tuple(names), tuple(kinds), class_labels)
    LOGGER.info(f'Dataset {path} loaded: {len(points)} rows, {layout.n} features,'
                f' {layout.m} classes'
                f'{", imbalanced" if is_imbalanced(labels, layout.m) else ""}')
    return points, layout


def _infer_kind(values: pd.Series) -> str:
    if values.isin(('0', '1')).all():
        return 'binary'
    if pd.to_numeric(values, errors='coerce').notna().all():
        return 'real'
    return 'categorical'


def align_points(points: Sequence[DataPoint],
                 layout: FeatureLayout,
                 names: Sequence[str]) -> List[DataPoint]:
    """
    Reorder encoded features to *names*. Indicators of categories not
    present in the data are zero.
    """
    frame = pd.DataFrame([p.features for p in points], columns=list(layout.names))
    unknown = [name for name in layout.names if name not in names]
    if unknown:
        raise DataError(f'Feature {unknown[0]} is unknown to the model')
    aligned = frame.reindex(columns=list(names), fill_value=0.0).to_numpy(dtype=np.float64)
    return [DataPoint(aligned[r], p.label) for r, p in enumerate(points)]


def load_costs(path: str, n: int) -> CostModel:
    """Read one positive cost per line, one line per encoded feature."""
    try:
        with fsspec.open(path, 'r') as fp:
            lines = [line.strip() for line in fp if line.strip()]
    except FileNotFoundError as e:
        raise ConfigError(f'stream.costs: file not found: {path}') from e
    try:
        costs = [float(line) for line in lines]
    except ValueError as e:
        raise DataError(f'Unparseable cost in {path}: {e}') from e
    if len(costs) != n:
        raise DataError(f'Cost file {path} has {len(costs)} entries, expected {n}')
    try:
        return CostModel(np.array(costs))
    except AcqTreeError as e:
        raise DataError(f'Invalid cost in {path}: {e}') from e


def concept_index(t: int, drift_points: Sequence[int]) -> int:
    """Index of the concept active at epoch *t*."""
    return int(np.searchsorted(np.asarray(drift_points, dtype=int), t, side='right'))


def stagger_layout() -> FeatureLayout:
    names = tuple(f'{attribute}={value}'
                  for attribute, values in STAGGER_ATTRIBUTES
                  for value in values)
    return FeatureLayout(names, ('binary',) * len(names), ('0', '1'))


def stagger_label(size: int, color: int, shape: int, concept: int) -> int:
    concept = concept % 3
    if concept == 0:
        positive = size == 0 and color == 0
    elif concept == 1:
        positive = color == 1 or shape == 0
    else:
        positive = size in (1, 2)
    return int(positive)


def stagger_points(count: int, concept: int, rng: np.random.Generator) -> List[DataPoint]:
    """Draw *count* points labeled by a single concept."""
    return _stagger_points(rng.integers(3, size=(count, 3)), [concept] * count)


def stagger_stream(length: int = STAGGER_DEFAULT_LENGTH,
                   drift_points: Sequence[int] = STAGGER_DEFAULT_DRIFT_POINTS,
                   rng: np.random.Generator = None) -> List[DataPoint]:
    """
    Draw the Stagger stream. Its concept switches at every drift
    point, cycling through the three concepts.
    """
    if any(not 0 <= p < max(length, 1) for p in drift_points):
        raise AcqTreeError(f'drift points {list(drift_points)} outside [0, {length})')
    rng = rng if rng is not None else np.random.default_rng()
    attributes = rng.integers(3, size=(length, 3))
    return _stagger_points(attributes, [concept_index(t, drift_points) for t in range(length)])


def _stagger_points(attributes: np.ndarray, concepts: Sequence[int]) -> List[DataPoint]:
    one_hot = np.eye(3)
    return [DataPoint(np.concatenate([one_hot[a] for a in row]),
                      stagger_label(*row, concept))
            for row, concept in zip(attributes, concepts)]


def write_stagger_csv(points: Sequence[DataPoint], path: str):
    """Write Stagger points with nominal attribute columns and a 0/1 label."""
    rows = []
    for point in points:
        indices = np.flatnonzero(point.features)
        rows.append([values[index - 3 * a]
                     for a, ((_, values), index) in enumerate(zip(STAGGER_ATTRIBUTES, indices))]
                    + [point.label])
    frame = pd.DataFrame(rows, columns=[name for name, _ in STAGGER_ATTRIBUTES] + ['label'])
    with fsspec.open(path, 'w') as fp:
        frame.to_csv(fp, index=False)
    LOGGER.info(f'Stagger stream of {len(points)} points written to {path}')


def led_layout(irrelevant_features: int = DEFAULT_LED_IRRELEVANT_FEATURES) -> FeatureLayout:
    names = tuple(f'segment_{s}' for s in 'abcdefg') \
            + tuple(f'irrelevant_{i}' for i in range(irrelevant_features))
    return FeatureLayout(names, ('binary',) * len(names), tuple(str(d) for d in range(10)))


def led_stream(length: int,
               rng: np.random.Generator,
               noise: float = DEFAULT_LED_NOISE,
               irrelevant_features: int = DEFAULT_LED_IRRELEVANT_FEATURES) -> List[DataPoint]:
    """
    Draw LED display points: a uniform digit, its seven segments each
    flipped with probability *noise*, and uniform irrelevant bits.
    """
    digits = rng.integers(10, size=length)
    flips = rng.random((length, 7)) < noise
    segments = LED_SEGMENTS[digits] ^ flips
    irrelevant = rng.integers(2, size=(length, irrelevant_features))
    features = np.hstack([segments, irrelevant]).astype(np.float64)
    return [DataPoint(features[t], int(digits[t])) for t in range(length)]


def synthetic_stream(theta_star: ThetaTable,
                     length: int,
                     rng: np.random.Generator) -> List[DataPoint]:
    """Draw points from the naive-Bayes model *theta_star*."""
    labels = rng.choice(theta_star.m, size=length, p=theta_star.class_prior)
    features = (rng.random((length, theta_star.n))
                < theta_star.theta[:, labels].T).astype(np.float64)
    return [DataPoint(features[t], int(labels[t])) for t in range(length)]


def synthetic_layout(theta_star: ThetaTable) -> FeatureLayout:
    return FeatureLayout(tuple(f'x{i}' for i in range(theta_star.n)),
                         ('binary',) * theta_star.n,
                         tuple(str(j) for j in range(theta_star.m)))


def train_test_split(points: Sequence[DataPoint],
                     test_fraction: float,
                     rng: np.random.Generator) -> Tuple[List[DataPoint], List[DataPoint]]:
    """Shuffle *points*, hold out ``round(test_fraction * len(points))`` of them."""
    if not 0.0 <= test_fraction < 1.0:
        raise AcqTreeError(f'test fraction must be in [0, 1), got {test_fraction}')
    order = rng.permutation(len(points))
    test_size = int(round(test_fraction * len(points)))
    test = [points[i] for i in order[:test_size]]
    train = [points[i] for i in order[test_size:]]
    return train, test


def predict_map(theta: ThetaTable, bits: np.ndarray) -> np.ndarray:
    """Most probable class of each row of *bits* given all its features."""
    return np.argmax(log_joint(theta, np.asarray(bits)), axis=1)


def evaluate_theta(theta: ThetaTable,
                   test_points: Sequence[DataPoint],
                   utility: str = 'auto') -> float:
    if not test_points:
        raise DataError('empty test set')
    bits = np.stack([p.features for p in test_points]).astype(np.uint8)
    labels = np.array([p.label for p in test_points], dtype=int)
    predictions = predict_map(theta, bits)
    confusion = np.zeros((theta.m, theta.m), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)
    if resolve_utility(utility, labels, theta.m) == 'f_measure':
        return f_measure(confusion)
    return accuracy(confusion)


def evaluate_test(belief: BeliefState,
                  test_points: Sequence[DataPoint],
                  utility: str = 'auto') -> float:
    """
    Utility of full-feature MAP predictions under the posterior mean.
    *utility* is ``accuracy``, ``f_measure`` or ``auto``, which picks
    the F-measure for imbalanced test sets.
    """
    return evaluate_theta(posterior_mean(belief), test_points, utility)
