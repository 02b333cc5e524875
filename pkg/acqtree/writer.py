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
import os.path
from typing import Any, Dict, List, Optional, Sequence

import fsspec
import numpy as np
import pandas as pd
import retry.api

from .belief import BeliefState
from .belief import save_belief
from .constants import DEFAULT_OUTPUT_RETRY_KWARGS
from .constants import RECORD_FIELDS
from .error import AcqTreeError
from .log import LOGGER
from .log import log_duration
from .version import version

RECORDS_NAME = 'records.jsonl'
SUMMARY_NAME = 'summary.json'
BELIEFS_DIR_NAME = 'beliefs'
CURVES_NAME = 'curves.zarr'


class ResultWriter:
    """
    Writes the results of one experiment into the directory *output_path*.

    Records are appended replicate by replicate, so a partially
    finished experiment leaves all records written so far.
    """

    def __init__(self,
                 output_path: str,
                 *,
                 output_overwrite: bool = False,
                 output_curves: bool = False,
                 output_retry_kwargs: Dict[str, Any] = None,
                 dry_run: bool = False):
        if not output_path:
            raise ValueError('output_path must be given')
        self._fs, self._output_path = fsspec.core.url_to_fs(os.path.expanduser(output_path))
        self._output_overwrite = output_overwrite
        self._output_curves = output_curves
        self._output_retry_kwargs = output_retry_kwargs or DEFAULT_OUTPUT_RETRY_KWARGS
        self._dry_run = dry_run
        self._prepared = False

    @property
    def output_path(self) -> str:
        return self._output_path

    def prepare(self):
        """Create the output directory and an empty records file."""
        self._retry(self._prepare)
        self._prepared = True

    def write_records(self, records: Sequence[Dict[str, Any]]):
        self._retry(self._write_records, list(records))

    def write_summary(self, summary: Dict[str, Any]):
        self._retry(self._write_text, SUMMARY_NAME,
                    json.dumps(summary, indent=2) + '\n')

    def write_belief(self, seed: int, belief: BeliefState, **metadata):
        path = self._join(BELIEFS_DIR_NAME, f'seed-{seed}.json')
        if self._dry_run:
            return
        self._retry(self._fs.makedirs, self._join(BELIEFS_DIR_NAME), exist_ok=True)
        self._retry(save_belief, belief, self._fs.unstrip_protocol(path), **metadata)

    def write_curves(self, records: Sequence[Dict[str, Any]]):
        """Write the numeric record fields as a Zarr dataset over (seed, t)."""
        if not self._output_curves or not records:
            return
        frame = records_frame(records).drop(columns=['stop_reason'])
        frame = frame.astype({'correct': np.int8, 'test_utility': np.float64})
        dataset = frame.set_index(['seed', 't']).to_xarray()
        dataset.attrs.update(title='acqtree learning curves', version=version)
        with log_duration('Writing curves'):
            if self._dry_run:
                LOGGER.warning('Writing disabled, dry run!')
                return
            self._retry(dataset.to_zarr,
                        self._fs.get_mapper(self._join(CURVES_NAME)),
                        mode='w')

    def _prepare(self):
        exists = self._fs.exists(self._output_path)
        if exists and not self._output_overwrite:
            raise AcqTreeError(f'Output path {self._output_path} exists,'
                               f' use output.overwrite to replace it')
        if self._dry_run:
            LOGGER.warning('Writing disabled, dry run!')
            return
        if exists:
            with log_duration(f'Removing results {self._output_path}'):
                self._fs.delete(self._output_path, recursive=True)
        self._fs.makedirs(self._output_path, exist_ok=True)
        with self._fs.open(self._join(RECORDS_NAME), 'w'):
            pass

    def _write_records(self, records: List[Dict[str, Any]]):
        if self._dry_run:
            return
        lines = ''.join(json.dumps({k: record.get(k) for k in RECORD_FIELDS}) + '\n'
                        for record in records)
        with self._fs.open(self._join(RECORDS_NAME), 'a') as fp:
            fp.write(lines)
        LOGGER.info(f'{len(records)} records written to {self._output_path}')

    def _write_text(self, name: str, text: str):
        if self._dry_run:
            return
        with self._fs.open(self._join(name), 'w') as fp:
            fp.write(text)
        LOGGER.info(f'{name} written to {self._output_path}')

    def _join(self, *names: str) -> str:
        return '/'.join((self._output_path.rstrip('/'),) + names)

    def _retry(self, func, *args, **kwargs):
        return retry.api.retry_call(func,
                                    fargs=args,
                                    fkwargs=kwargs,
                                    logger=LOGGER,
                                    **self._output_retry_kwargs)


def records_frame(records: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(records), columns=list(RECORD_FIELDS))


def summarize(records: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Summarize records across replicates: mean and one standard error
    of the per-seed total cost, accuracy and final test utility.
    """
    frame = records_frame(records)
    if frame.empty:
        return dict(replicates=0, records=0, total_cost=0.0,
                    mean_total_cost=None, se_total_cost=None,
                    mean_accuracy=None, se_accuracy=None,
                    mean_final_test_utility=None, se_final_test_utility=None,
                    mean_queries=None, mean_hypotheses=None,
                    stop_reasons={})
    frame['correct'] = frame['correct'].astype(np.float64)
    frame['test_utility'] = pd.to_numeric(frame['test_utility'])
    per_seed = frame.groupby('seed', sort=True).agg(total_cost=('cost', 'sum'),
                                                    accuracy=('correct', 'mean'))
    final_test = frame.dropna(subset=['test_utility']) \
        .groupby('seed', sort=True)['test_utility'].last()
    return dict(replicates=int(per_seed.shape[0]),
                records=int(frame.shape[0]),
                total_cost=_number(frame['cost'].sum()),
                mean_total_cost=_number(per_seed['total_cost'].mean()),
                se_total_cost=_number(per_seed['total_cost'].sem()),
                mean_accuracy=_number(per_seed['accuracy'].mean()),
                se_accuracy=_number(per_seed['accuracy'].sem()),
                mean_final_test_utility=_number(final_test.mean()),
                se_final_test_utility=_number(final_test.sem()),
                mean_queries=_number(frame['queries'].mean()),
                mean_hypotheses=_number(frame['hypotheses'].mean()),
                stop_reasons={str(k): int(v) for k, v
                              in frame['stop_reason'].value_counts().sort_index().items()})


def emit_results(records: Sequence[Dict[str, Any]], path: str,
                 **writer_kwargs) -> Dict[str, Any]:
    """Write *records* and their summary into the directory *path*."""
    writer = ResultWriter(path, **writer_kwargs)
    writer.prepare()
    writer.write_records(records)
    summary = summarize(records)
    writer.write_summary(summary)
    writer.write_curves(records)
    return summary


def _number(value) -> Optional[float]:
    value = float(value)
    return None if np.isnan(value) else value
