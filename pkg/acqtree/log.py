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


import contextlib
import logging
import sys
import time
from typing import Optional

logging.basicConfig(
    level=logging.WARNING,
    format='%(asctime)s: %(levelname)s: %(name)s: %(message)s',
    stream=sys.stderr,
)

LOGGER = logging.getLogger('acqtree')
LOGGER.setLevel(logging.WARNING)

# Logging level of verbosity 0, 1 and 2.
VERBOSITY_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def get_verbosity() -> int:
    level = LOGGER.level
    return sum(1 for v in VERBOSITY_LEVELS[1:] if level <= v)


def set_verbosity(verbosity: Optional[int]) -> int:
    """Set the verbosity, clamped to 0..2, and return the previous one."""
    old_verbosity = get_verbosity()
    index = min(max(verbosity or 0, 0), len(VERBOSITY_LEVELS) - 1)
    LOGGER.setLevel(VERBOSITY_LEVELS[index])
    return old_verbosity


@contextlib.contextmanager
def use_verbosity(new_verbosity: Optional[int]):
    old_verbosity = set_verbosity(new_verbosity)
    try:
        yield None
    finally:
        set_verbosity(old_verbosity)


def log_epoch(t: int, prediction: int, label: int, cost: float, stop_reason: str):
    if LOGGER.isEnabledFor(logging.DEBUG):
        LOGGER.debug(f'Epoch {t}: predicted {prediction}, label {label},'
                     f' cost {cost:g}, stop {stop_reason}')


class log_duration(contextlib.AbstractContextManager):
    """
    Log the duration of a task such as a replicate or a whole
    experiment. Callers that pass a *unit* count processed items with
    :meth:`add`; the final message then reports the throughput,
    e.g. "(180 epochs, 95.3 epochs/s)".
    """

    def __init__(self, tag: str = None, unit: Optional[str] = None):
        self.tag = tag or 'task'
        self.unit = unit
        self.count = 0
        self.start = None
        self.duration = None

    def add(self, count: int = 1):
        self.count += count

    def __enter__(self):
        self.start = time.perf_counter()
        LOGGER.debug(f'{self.tag}...')
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self.duration = time.perf_counter() - self.start
        message = f'took {self.duration:,.2f} seconds{self._throughput()}'
        if exc_type is None:
            LOGGER.info(f'{self.tag} done: {message}')
        else:
            LOGGER.error(f'{self.tag} failed: {message}')

    def _throughput(self) -> str:
        if not self.unit:
            return ''
        rate = self.count / self.duration if self.duration > 0 else 0.0
        return f' ({self.count:,} {self.unit}, {rate:,.1f} {self.unit}/s)'
