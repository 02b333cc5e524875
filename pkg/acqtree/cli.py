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


from typing import Tuple

import click

from acqtree.constants import DEFAULT_OUTPUT_PATH
from acqtree.constants import STAGGER_DEFAULT_DRIFT_POINTS
from acqtree.constants import STAGGER_DEFAULT_LENGTH


# Important note: when adding new options, make sure their default
# value is None, otherwise the default values will override any value
# given in the configuration files.


@click.group(name='acqtree', invoke_without_command=True)
@click.option('--version', is_flag=True,
              help='Show version number and exit.')
@click.pass_context
def acqtree(ctx: click.Context, version: bool):
    """
    Cost-sensitive online decision-tree learning. Predicts the labels
    of streaming data points while buying as few feature values as
    possible.
    """
    if version:
        from acqtree.version import version
        print(version)
        return 0
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


def _config_options(func):
    func = click.option('--set', '-s', 'overrides', metavar='KEY=VALUE', multiple=True,
                        help='Set the configuration value of a dotted KEY,'
                             ' e.g. "learner.criterion=IG". May be repeated.')(func)
    func = click.option('--config', '-c', 'config_options', metavar='CONFIG_FILE',
                        multiple=True,
                        help='Configuration file (YAML). Multiple may be given.')(func)
    func = click.argument('config_paths', nargs=-1, metavar='[CONFIG_FILE ...]')(func)
    return func


@acqtree.command(name='run')
@_config_options
@click.option('--output', '-o', 'output_path', metavar='OUTPUT_PATH',
              help=f'Result directory. Defaults to "{DEFAULT_OUTPUT_PATH}".')
@click.option('--seed', 'seeds', type=int, multiple=True,
              help='Replicate seed. May be repeated, replaces /seeds.')
@click.option('--parallelism', '-j', 'parallelism', type=int, default=None,
              help='Number of replicates run concurrently.')
@click.option('--overwrite', '-w', 'overwrite', is_flag=True, default=None,
              help='Overwrite existing OUTPUT_PATH.')
@click.option('--dry-run', '-d', 'dry_run', is_flag=True, default=None,
              help='Run the experiment, omit writing results.')
@click.option('--verbose', '-v', 'verbose', count=True,
              help='Print more output. Use twice for even more output.')
def run(config_paths: Tuple[str],
        config_options: Tuple[str],
        overrides: Tuple[str],
        output_path: str,
        seeds: Tuple[int],
        parallelism: int,
        overwrite: bool,
        dry_run: bool,
        verbose: int):
    """
    Run the experiment described by one or more configuration files and
    write per-epoch records, a summary, and the final beliefs into
    OUTPUT_PATH.

    CONFIG_FILE must be in YAML format. It comprises the objects
    "stream", "learner", "evaluation", and "output", plus the top-level
    keys "seeds", "parallelism", and "sweep".
    See acqtree/res/config-template.yml for a template file that
    describes the format. Multiple configuration files are merged:
    objects recursively, lists are appended, and other values overwrite
    each other from left to right. For example:

    \b
    acqtree run common.yml stagger-drift.yml -o out/stagger
    acqtree run stagger-drift.yml -s learner.criterion=IG -s seeds=[0,1,2]

    Command line options have precedence over the configuration files:

    \b
    [--set KEY=VALUE] overrides KEY
    [--output OUTPUT_PATH] overrides /output/path
    [--overwrite] overrides /output/overwrite
    [--seed] overrides /seeds
    [--parallelism] overrides /parallelism
    [--dry-run] overrides /dry_run
    [--verbose] overrides /verbosity
    """
    from acqtree.config import set_dotted
    from acqtree.error import AcqTreeError
    from acqtree.experiment import run_experiment
    try:
        config = _load(config_paths + config_options, overrides,
                       output_path=output_path,
                       output_overwrite=overwrite,
                       parallelism=parallelism,
                       verbosity=verbose if verbose else None,
                       dry_run=dry_run)
        if seeds:
            config = set_dotted(config, 'seeds', list(seeds))
        run_experiment(config)
    except AcqTreeError as e:
        raise click.ClickException(str(e)) from e


@acqtree.command(name='validate')
@_config_options
def validate(config_paths: Tuple[str],
             config_options: Tuple[str],
             overrides: Tuple[str]):
    """
    Check an experiment configuration without running it.
    """
    from acqtree.config import expand_sweeps
    from acqtree.config import validate_config
    from acqtree.error import AcqTreeError
    try:
        config = _load(config_paths + config_options, overrides)
        validate_config(config)
    except AcqTreeError as e:
        raise click.ClickException(str(e)) from e
    count = len(expand_sweeps(config))
    print(f'Configuration is valid ({count} experiment{"s" if count != 1 else ""}).')


@acqtree.command(name='gen-stagger')
@click.option('--T', 'length', type=int, default=STAGGER_DEFAULT_LENGTH,
              help=f'Stream length. Defaults to {STAGGER_DEFAULT_LENGTH}.')
@click.option('--drift', 'drift_points', type=int, multiple=True,
              help=f'Epoch at which the concept changes. May be repeated.'
                   f' Defaults to {", ".join(map(str, STAGGER_DEFAULT_DRIFT_POINTS))}.')
@click.option('--seed', 'seed', type=int, default=0,
              help='Random seed. Defaults to 0.')
@click.option('--out', 'output_path', metavar='OUTPUT_FILE', required=True,
              help='CSV file to write.')
def gen_stagger(length: int,
                drift_points: Tuple[int],
                seed: int,
                output_path: str):
    """
    Generate a Stagger stream with abrupt concept drifts and write it as
    CSV with the nominal columns size, color, shape and a 0/1 label.
    """
    import numpy as np
    from acqtree.datastream import stagger_stream
    from acqtree.datastream import write_stagger_csv
    from acqtree.error import AcqTreeError
    if not drift_points:
        drift_points = tuple(p for p in STAGGER_DEFAULT_DRIFT_POINTS if p < length)
    try:
        points = stagger_stream(length, sorted(drift_points), np.random.default_rng(seed))
        write_stagger_csv(points, output_path)
    except AcqTreeError as e:
        raise click.ClickException(str(e)) from e


@acqtree.command(name='eval')
@click.option('--belief', 'belief_path', metavar='BELIEF_FILE', required=True,
              help='Belief written by "acqtree run", e.g. beliefs/seed-0.json.')
@click.option('--test', 'test_path', metavar='TEST_FILE', required=True,
              help='CSV test file with header row, label in the last column.')
@click.option('--utility', 'utility', default='auto',
              type=click.Choice(['auto', 'accuracy', 'f_measure']),
              help='Test utility. "auto" uses the F-measure for imbalanced'
                   ' test sets and accuracy otherwise.')
def evaluate(belief_path: str, test_path: str, utility: str):
    """
    Print the test utility of a saved belief, predicting each test point
    from all its features.
    """
    from acqtree.error import AcqTreeError
    from acqtree.experiment import evaluate_saved_belief
    try:
        print(evaluate_saved_belief(belief_path, test_path, utility))
    except AcqTreeError as e:
        raise click.ClickException(str(e)) from e


def _load(config_paths, overrides, **kwargs):
    from acqtree.config import apply_overrides
    from acqtree.config import load_config
    config = load_config(config_paths=list(config_paths), **kwargs)
    return apply_overrides(config, overrides)


if __name__ == '__main__':
    acqtree()
