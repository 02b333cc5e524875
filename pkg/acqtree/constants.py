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


# Belief
DEFAULT_DRIFT_GAMMA = 0.1
DEFAULT_DRIFT_ALPHA_BAR = 1.0
DEFAULT_DRIFT_BETA_BAR = 1.0
DEFAULT_PRIOR_KAPPA = 50.0

# Planning
DEFAULT_CRITERION = 'EC2'
DEFAULT_HYPOTHESIS_COUNT = 100
ZERO_GAIN_TOLERANCE = 1e-12
MAX_ENUMERATED_COLUMNS = 20

# Continuous features
DEFAULT_THRESHOLD_COUNT = 5
DEFAULT_EXP3_ETA = 0.01
DEFAULT_WARMUP_SIZE = 30

# Online feature selection
DEFAULT_OFS_EPSILON = 0.2
DEFAULT_OFS_LEARNING_RATE = 0.1

# Streams
STAGGER_DEFAULT_LENGTH = 180
STAGGER_DEFAULT_DRIFT_POINTS = (60, 120)
DEFAULT_TEST_FRACTION = 0.2
DEFAULT_GENERATOR_TEST_SIZE = 200
IMBALANCE_THRESHOLD = 0.6
DEFAULT_LED_NOISE = 0.1
DEFAULT_LED_IRRELEVANT_FEATURES = 17
DEFAULT_SYNTHETIC_LENGTH = 500

# Output
DEFAULT_OUTPUT_PATH = 'acqtree-out'
DEFAULT_OUTPUT_RETRY_KWARGS = dict(tries=1, delay=0.1, backoff=1.1)
RECORD_FIELDS = ('seed', 't', 'cost', 'correct', 'train_utility',
                 'test_utility', 'stop_reason', 'queries', 'hypotheses')
