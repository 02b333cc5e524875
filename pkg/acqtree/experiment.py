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


import concurrent.futures
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .acquisition import CostModel
from .belief import BeliefState
from .belief import DriftConfig
from .belief import ThetaTable
from .belief import estimate_theta
from .belief import interpolate_prior
from .belief import load_belief_document
from .belief import uniform_belief
from .config import config_to_kwargs
from .config import expand_sweeps
from .config import kwargs_to_config
from .config import validate_config
from .constants import DEFAULT_CRITERION
from .constants import DEFAULT_GENERATOR_TEST_SIZE
from .constants import DEFAULT_HYPOTHESIS_COUNT
from .constants import DEFAULT_LED_IRRELEVANT_FEATURES
from .constants import DEFAULT_LED_NOISE
from .constants import DEFAULT_OUTPUT_PATH
from .constants import DEFAULT_PRIOR_KAPPA
from .constants import DEFAULT_SYNTHETIC_LENGTH
from .constants import DEFAULT_TEST_FRACTION
from .constants import STAGGER_DEFAULT_DRIFT_POINTS
from .constants import STAGGER_DEFAULT_LENGTH
from .continuous import LatentBelief
from .continuous import ThresholdGrid
from .continuous import aggregate_theta_table
from .continuous import binarize_point
from .datastream import DataPoint
from .datastream import FeatureLayout
from .datastream import Metrics
from .datastream import StreamSpec
from .datastream import align_points
from .datastream import concept_index
from .datastream import evaluate_test
from .datastream import evaluate_theta
from .datastream import led_layout
from .datastream import led_stream
from .datastream import load_costs
from .datastream import load_dataset
from .datastream import resolve_utility
from .datastream import stagger_layout
from .datastream import stagger_points
from .datastream import stagger_stream
from .datastream import synthetic_layout
from .datastream import synthetic_stream
from .datastream import train_test_split
from .datastream import update_metrics
from .error import AcqTreeError
from .error import ConfigError
from .error import DataError
from .learner import ContinuousConfig
from .learner import EpochRecord
from .learner import LearnerConfig
from .learner import OfsConfig
from .learner import OnlineLearner
from .log import LOGGER
from .log import log_duration
from .log import use_verbosity
from .writer import ResultWriter
from .writer import summarize


class StreamBundle(NamedTuple):
    train: List[DataPoint]
    test_sets: List[List[DataPoint]]
    drift_points: Sequence[int]
    layout: FeatureLayout
    theta_star: Optional[ThetaTable]

    def test_set_at(self, t: int) -> List[DataPoint]:
        """The test set of the concept active at epoch *t*."""
        if not self.test_sets:
            return []
        return self.test_sets[concept_index(t, self.drift_points) % len(self.test_sets)]

    @property
    def labels(self) -> List[int]:
        return [p.label for p in self.train] + [p.label for s in self.test_sets for p in s]


class ReplicateResult(NamedTuple):
    seed: int
    records: List[Dict[str, Any]]
    belief: BeliefState
    metadata: Dict[str, Any]
    error: Optional[DataError] = None


class Experiment:
    """
    Runs an online learner over a stream for every replicate seed and
    writes per-epoch records, a summary and the final beliefs.

    :param stream_source: "stagger", "led", "synthetic" or a CSV file path
    :param stream_length: number of training epochs. Generators default
        to their standard lengths, datasets use all training rows.
    :param stream_drift_points: epochs at which the Stagger concept changes
    :param stream_shuffle_seed: seed of the dataset shuffle,
        the replicate seed if not given
    :param stream_test_fraction: held-out share of a dataset
    :param stream_test_size: size of generated test sets, one per concept
    :param stream_schema: column types of a dataset
    :param stream_costs: path of a feature cost file
    :param stream_noise: LED segment flip probability
    :param stream_irrelevant_features: number of LED irrelevant features
    :param stream_theta: parameter table of the synthetic source
    :param stream_class_prior: class prior of the synthetic source
    :param learner_criterion: EC2, IG, US or RANDOM
    :param learner_hypothesis_count: hypothesis draws per epoch
    :param learner_enumerate: enumerate all hypotheses instead of sampling
    :param learner_budget: maximum cost per epoch
    :param learner_drift: mapping with enabled, gamma, alpha_bar, beta_bar
    :param learner_prior: mapping with lambda and kappa
    :param learner_ofs: mapping with enabled, budget, epsilon, learning_rate
    :param learner_continuous: mapping with enabled, thresholds,
        selection, eta, warmup
    :param learner_loss: m x m utility matrix, rows true classes
    :param evaluation_mode: "map" for full-feature MAP predictions,
        "session" for planning sessions on test points
    :param evaluation_every: evaluate every this many epochs, never if 0
    :param evaluation_utility: "auto", "accuracy" or "f_measure"
    :param output_path: result directory
    :param output_overwrite: replace an existing result directory
    :param output_curves: also write a Zarr dataset of the records
    :param output_retry: keyword arguments of retry.api.retry_call
    :param seeds: replicate seeds
    :param parallelism: number of replicates run concurrently
    :param dry_run: run without writing results
    :param verbosity: 0, 1 or 2
    """

    def __init__(self, *,
                 stream_source: str = None,
                 stream_length: int = None,
                 stream_drift_points: Sequence[int] = None,
                 stream_shuffle_seed: int = None,
                 stream_test_fraction: float = DEFAULT_TEST_FRACTION,
                 stream_test_size: int = DEFAULT_GENERATOR_TEST_SIZE,
                 stream_schema: Dict[str, str] = None,
                 stream_costs: str = None,
                 stream_noise: float = DEFAULT_LED_NOISE,
                 stream_irrelevant_features: int = DEFAULT_LED_IRRELEVANT_FEATURES,
                 stream_theta: List[List[float]] = None,
                 stream_class_prior: List[float] = None,
                 learner_criterion: str = DEFAULT_CRITERION,
                 learner_hypothesis_count: int = DEFAULT_HYPOTHESIS_COUNT,
                 learner_enumerate: bool = False,
                 learner_budget: float = None,
                 learner_drift: Dict[str, Any] = None,
                 learner_prior: Dict[str, Any] = None,
                 learner_ofs: Dict[str, Any] = None,
                 learner_continuous: Dict[str, Any] = None,
                 learner_loss: List[List[float]] = None,
                 evaluation_mode: str = 'map',
                 evaluation_every: int = 1,
                 evaluation_utility: str = 'auto',
                 output_path: str = None,
                 output_overwrite: bool = False,
                 output_curves: bool = False,
                 output_retry: Dict[str, Any] = None,
                 seeds: Sequence[int] = None,
                 parallelism: int = 1,
                 dry_run: bool = False,
                 verbosity: int = None):

        seeds = list(seeds) if seeds is not None else [0]
        validate_config(kwargs_to_config(
            stream_source=stream_source,
            stream_length=stream_length,
            stream_drift_points=list(stream_drift_points)
            if stream_drift_points is not None else None,
            stream_test_fraction=stream_test_fraction,
            stream_test_size=stream_test_size,
            stream_schema=stream_schema,
            stream_costs=stream_costs,
            stream_noise=stream_noise,
            stream_irrelevant_features=stream_irrelevant_features,
            stream_theta=stream_theta,
            learner_criterion=learner_criterion,
            learner_hypothesis_count=learner_hypothesis_count,
            learner_budget=learner_budget,
            learner_drift=learner_drift,
            learner_prior=learner_prior,
            learner_ofs=learner_ofs,
            learner_continuous=learner_continuous,
            learner_loss=learner_loss,
            evaluation_mode=evaluation_mode,
            evaluation_every=evaluation_every,
            evaluation_utility=evaluation_utility,
            output_retry=output_retry,
            seeds=seeds,
            parallelism=parallelism,
        ))

        if stream_source == 'stagger':
            stream_length = stream_length if stream_length is not None \
                else STAGGER_DEFAULT_LENGTH
            if stream_drift_points is None:
                stream_drift_points = [p for p in STAGGER_DEFAULT_DRIFT_POINTS
                                       if p < stream_length]
        self.stream_spec = StreamSpec(source=stream_source,
                                      length=stream_length,
                                      drift_points=stream_drift_points,
                                      shuffle_seed=stream_shuffle_seed,
                                      test_fraction=stream_test_fraction)
        self.stream_test_size = stream_test_size
        self.stream_schema = stream_schema
        self.stream_costs = stream_costs
        self.stream_noise = stream_noise
        self.stream_irrelevant_features = stream_irrelevant_features
        self.stream_theta = stream_theta
        self.stream_class_prior = stream_class_prior
        self.learner_criterion = learner_criterion
        self.learner_hypothesis_count = learner_hypothesis_count
        self.learner_enumerate = learner_enumerate
        self.learner_budget = learner_budget
        self.learner_drift = dict(learner_drift or {})
        self.learner_prior = dict(learner_prior or {})
        self.learner_ofs = dict(learner_ofs or {})
        self.learner_continuous = dict(learner_continuous or {})
        self.learner_loss = np.asarray(learner_loss, dtype=np.float64) \
            if learner_loss is not None else None
        self.evaluation_mode = evaluation_mode
        self.evaluation_every = evaluation_every
        self.evaluation_utility = evaluation_utility
        self.output_path = output_path or DEFAULT_OUTPUT_PATH
        self.output_overwrite = output_overwrite
        self.output_curves = output_curves
        self.output_retry = output_retry
        self.seeds = seeds
        self.parallelism = parallelism
        self.dry_run = dry_run
        self.verbosity = verbosity

    def run(self) -> Dict[str, Any]:
        with use_verbosity(self.verbosity or 0):
            with log_duration('Running experiment', unit='epochs') as duration:
                return self._run(duration.add)

    def _run(self, count_epochs: Callable[[int], None]) -> Dict[str, Any]:
        if self.dry_run:
            LOGGER.warning('Dry run!')

        writer = ResultWriter(self.output_path,
                              output_overwrite=self.output_overwrite,
                              output_curves=self.output_curves,
                              output_retry_kwargs=self.output_retry,
                              dry_run=self.dry_run)
        writer.prepare()

        all_records = []
        error = None
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.parallelism) as executor:
            futures = [executor.submit(self.run_replicate, seed) for seed in self.seeds]
            # Results are merged in seed order.
            for future in futures:
                if error is not None:
                    future.cancel()
                    continue
                result = future.result()
                writer.write_records(result.records)
                all_records.extend(result.records)
                count_epochs(len(result.records))
                if result.error is not None:
                    error = result.error
                    continue
                writer.write_belief(result.seed, result.belief, **result.metadata)

        summary = summarize(all_records)
        writer.write_summary(summary)
        writer.write_curves(all_records)
        if error is not None:
            raise error
        return summary

    def run_replicate(self, seed: int) -> ReplicateResult:
        """Run the learner over the stream of replicate *seed*."""
        stream_seed, learner_seed = np.random.SeedSequence(seed).spawn(2)
        with log_duration(f'Replicate {seed}', unit='epochs') as duration:
            bundle = self.build_stream(np.random.default_rng(stream_seed))
            learner = OnlineLearner(self._learner_config(bundle, learner_seed),
                                    self._initial_belief(bundle),
                                    costs=self._costs(bundle.layout),
                                    binary_features=bundle.layout.binary_features)
            utility = resolve_utility(self.evaluation_utility, bundle.labels,
                                      bundle.layout.m)
            metrics = Metrics(bundle.layout.m, utility)
            records = []
            length = len(bundle.train)

            def on_epoch(_learner: OnlineLearner, record: EpochRecord):
                update_metrics(metrics, record)
                test_utility = None
                if self._evaluate_at(record.t, length):
                    test_utility = self._evaluate(learner, bundle.test_set_at(record.t), utility)
                    if test_utility is not None:
                        metrics.test_curve.append((record.t, test_utility))
                records.append(dict(seed=seed,
                                    t=record.t,
                                    cost=record.cost,
                                    correct=bool(record.correct),
                                    train_utility=metrics.train_utility,
                                    test_utility=test_utility,
                                    stop_reason=record.stop_reason,
                                    queries=record.queries,
                                    hypotheses=record.hypotheses))
                duration.add()

            try:
                learner.run(bundle.train, on_epoch=on_epoch)
            except DataError as e:
                LOGGER.error(f'Replicate {seed} aborted after {len(records)} epochs: {e}')
                return ReplicateResult(seed, records, learner.belief, {}, error=e)

        return ReplicateResult(seed, records, learner.belief, self._belief_metadata(learner, bundle))

    def build_stream(self, rng: np.random.Generator) -> StreamBundle:
        spec = self.stream_spec
        source = spec.source
        if source == 'stagger':
            drift_points = spec.drift_points
            train = stagger_stream(spec.length, drift_points, rng)
            test_sets = [stagger_points(self.stream_test_size, concept, rng)
                         for concept in range(3 if drift_points else 1)]
            first_concept = train[:drift_points[0]] if drift_points else train
            return StreamBundle(train, test_sets, drift_points, stagger_layout(),
                                _estimate_theta(first_concept, stagger_layout()))
        if source == 'led':
            length = self._generator_length()
            layout = led_layout(self.stream_irrelevant_features)
            train = led_stream(length, rng, self.stream_noise, self.stream_irrelevant_features)
            test = led_stream(self.stream_test_size, rng, self.stream_noise,
                              self.stream_irrelevant_features)
            return StreamBundle(train, [test], (), layout, _estimate_theta(train + test, layout))
        if source == 'synthetic':
            m = len(self.stream_theta[0])
            try:
                theta_star = ThetaTable(self.stream_theta,
                                        self.stream_class_prior
                                        if self.stream_class_prior is not None
                                        else np.full(m, 1.0 / m))
            except AcqTreeError as e:
                raise ConfigError(f'stream.theta: {e}') from e
            train = synthetic_stream(theta_star, self._generator_length(), rng)
            test = synthetic_stream(theta_star, self.stream_test_size, rng)
            return StreamBundle(train, [test], (), synthetic_layout(theta_star), theta_star)

        points, layout = load_dataset(source, self.stream_schema)
        if spec.shuffle_seed is not None:
            rng = np.random.default_rng(spec.shuffle_seed)
        train, test = train_test_split(points, spec.test_fraction, rng)
        if spec.length is not None:
            train = train[:spec.length]
        return StreamBundle(train, [test] if test else [], (), layout,
                            _estimate_theta(points, layout) if layout.is_binary else None)

    def _generator_length(self) -> int:
        length = self.stream_spec.length
        return length if length is not None else DEFAULT_SYNTHETIC_LENGTH

    def _learner_config(self, bundle: StreamBundle,
                        seed: np.random.SeedSequence) -> LearnerConfig:
        layout = bundle.layout
        drift = DriftConfig(**{k: v for k, v in self.learner_drift.items()
                               if k in ('enabled', 'gamma', 'alpha_bar', 'beta_bar')})
        feature_selection = None
        if self.learner_ofs.get('enabled', bool(self.learner_ofs)):
            feature_selection = OfsConfig(**{'budget': max(1, layout.n // 2),
                                             **{k: v for k, v in self.learner_ofs.items()
                                                if k != 'enabled'}})
        continuous = None
        if self.learner_continuous.get('enabled', bool(self.learner_continuous)):
            continuous = ContinuousConfig(**{k: v for k, v in self.learner_continuous.items()
                                             if k != 'enabled'})
        elif not layout.is_binary:
            raise ConfigError(f'learner.continuous.enabled: dataset has real-valued'
                              f' features, e.g. {layout.names[layout.kinds.index("real")]}')
        if self.learner_loss is not None and self.learner_loss.shape != (layout.m, layout.m):
            raise ConfigError(f'learner.loss: must be a {layout.m} x {layout.m} matrix')
        return LearnerConfig(criterion=self.learner_criterion,
                             hypothesis_count=self.learner_hypothesis_count,
                             drift=drift,
                             feature_selection=feature_selection,
                             continuous=continuous,
                             budget=self.learner_budget,
                             seed=seed,
                             enumerate_all=self.learner_enumerate,
                             utility_matrix=self.learner_loss)

    def _initial_belief(self, bundle: StreamBundle) -> BeliefState:
        layout = bundle.layout
        if 'lambda' not in self.learner_prior:
            return uniform_belief(layout.n, layout.m)
        if bundle.theta_star is None:
            raise ConfigError('learner.prior.lambda: requires a binary stream')
        return interpolate_prior(bundle.theta_star,
                                 self.learner_prior['lambda'],
                                 self.learner_prior.get('kappa', DEFAULT_PRIOR_KAPPA))

    def _costs(self, layout: FeatureLayout) -> CostModel:
        if self.stream_costs:
            return load_costs(self.stream_costs, layout.n)
        return CostModel.uniform(layout.n)

    def _evaluate_at(self, t: int, length: int) -> bool:
        every = self.evaluation_every
        return bool(every) and ((t + 1) % every == 0 or t == length - 1)

    def _evaluate(self, learner: OnlineLearner,
                  test: List[DataPoint], utility: str) -> Optional[float]:
        if not test:
            return None
        if self.evaluation_mode == 'session':
            return learner.evaluate_sessions(test, utility).utility
        return learner.evaluate(test, utility)

    @staticmethod
    def _belief_metadata(learner: OnlineLearner, bundle: StreamBundle) -> Dict[str, Any]:
        metadata = dict(feature_names=list(bundle.layout.names),
                        class_labels=list(bundle.layout.class_labels))
        if learner.latent is not None:
            metadata.update(thresholds=[t.tolist() for t in learner.latent.grid.thresholds],
                            usage=learner.latent.usage.tolist())
        return metadata


def run_experiment(config: Dict[str, Any]) -> List[Dict[str, Any]]:
    """
    Run the experiment of *config*, once per sweep value. Sweep
    results go into sub-directories of the output path.
    """
    summaries = []
    for label, expanded_config in expand_sweeps(config):
        kwargs = config_to_kwargs(expanded_config)
        if label:
            root = kwargs.get('output_path') or DEFAULT_OUTPUT_PATH
            kwargs['output_path'] = f'{root.rstrip("/")}/{label}'
            LOGGER.info(f'Sweep {label}')
        summaries.append(Experiment(**kwargs).run())
    return summaries


def evaluate_saved_belief(belief_path: str, test_path: str, utility: str = 'auto') -> float:
    """Test utility of a belief written by an experiment on a CSV test file."""
    document = load_belief_document(belief_path)
    belief = BeliefState(document['alpha'], document['beta'], document['class_counts'])
    points, layout = load_dataset(test_path, class_labels=document.get('class_labels'))
    if document.get('feature_names'):
        points = align_points(points, layout, document['feature_names'])
    if 'thresholds' not in document:
        return evaluate_test(belief, points, utility)
    latent = LatentBelief(belief, document['usage'], ThresholdGrid(tuple(document['thresholds'])))
    columns = latent.most_used_columns()
    binarized = [DataPoint(binarize_point(p.features, latent.grid, columns), p.label)
                 for p in points]
    return evaluate_theta(aggregate_theta_table(latent), binarized, utility)


def _estimate_theta(points: Sequence[DataPoint], layout: FeatureLayout) -> Optional[ThetaTable]:
    if not points:
        return None
    bits = np.stack([p.features for p in points])
    return estimate_theta(bits, [p.label for p in points], layout.m)
