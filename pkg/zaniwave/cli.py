# SPDX-License-Identifier: Apache-2.0

# Copyright 2026 Contributors to zaniwave

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""
The zaniwave command line tool. Every verb is a method of CommandLine marked
with the verb decorator; main() returns the process exit code.
"""

from argparse import ArgumentParser
import glob
import json
import logging
import os
import sys

import numpy as np

from zaniwave import counts, datafiles, enums, evaluation, messaging, pipeline, simulate, wavelets
from zaniwave import enable_default_logging
from zaniwave.errors import PartialCompletion, ValidationError, ZaniwaveError
from zaniwave.objects import SamplerConfig
from zaniwave.preflight import preflight_config

logger = logging.getLogger('zaniwave')

# Flags that map straight onto RunConfig and SamplerConfig fields.
RUN_FLAGS = ['data_path', 'nesting_path', 'variants', 'output_dir', 'seed', 'levels',
             'transform_draws', 'bandwidth']
SAMPLER_FLAGS = ['iterations', 'warmup', 'chains', 'thinning', 'target_accept',
                 'max_tree_depth', 'algorithm']


def verb(name):
    """
    Decorator to mark a method as the handler for a command line verb.
    """
    def _actual_decorator(decorated_function):
        decorated_function.__verb__ = name
        return decorated_function
    return _actual_decorator


def _add_sampler_flags(parser):
    parser.add_argument('--iterations', type=int)
    parser.add_argument('--warmup', type=int)
    parser.add_argument('--chains', type=int)
    parser.add_argument('--thinning', type=int)
    parser.add_argument('--target-accept', dest='target_accept', type=float)
    parser.add_argument('--max-tree-depth', dest='max_tree_depth', type=int)
    parser.add_argument('--algorithm', choices=enums.ALGORITHM.values)
    parser.add_argument('--seed', type=int)


def _add_run_flags(parser):
    parser.add_argument('--config', help="JSON file with RunConfig fields; flags override it")
    parser.add_argument('--data', dest='data_path')
    parser.add_argument('--nesting', dest='nesting_path')
    parser.add_argument('--variants', nargs='+', choices=enums.VARIANT.values)
    parser.add_argument('--output-dir', dest='output_dir',
                        help="Defaults to $ZANIWAVE_OUTPUT_DIR or ./zaniwave_output")
    parser.add_argument('--levels', type=int, help="Number of wavelet detail levels")
    parser.add_argument('--transform-draws', dest='transform_draws', type=int)
    parser.add_argument('--bandwidth', type=float, help="Kernel smoother bandwidth in time units")
    parser.add_argument('--parallel', action='store_true', default=None,
                        help="Fit branches concurrently, without warm starts")
    parser.add_argument('--no-warm-starts', dest='use_warm_starts', action='store_false', default=None)
    _add_sampler_flags(parser)


def build_parser():
    parser = ArgumentParser(prog='zaniwave',
                            description="Nested zero-and-N-inflated binomial wavelet models "
                                        "for multi-category count time series")
    parser.add_argument('-v', '--verbose', action='store_true', help="Log debug messages")
    verbs = parser.add_subparsers(dest='verb', required=True)

    ingest = verbs.add_parser('ingest', help="Validate a haul CSV and summarise it")
    ingest.add_argument('path')
    ingest.add_argument('--quarters', type=int, help="Number of time units (default: the largest)")
    ingest.add_argument('--trips', type=int, help="Number of trips (default: the largest id)")

    sim = verbs.add_parser('simulate', help="Write synthetic data")
    sim.add_argument('kind', choices=['series', 'counts'])
    sim.add_argument('--output', required=True)
    sim.add_argument('--seed', type=int)
    sim.add_argument('--points', type=int, default=128, help="Series length")
    sim.add_argument('--noise', type=float, default=0.3, help="Series noise sd")
    sim.add_argument('--nesting', dest='nesting_path',
                     help="Nesting JSON for counts; the eight-category discards tree by default")
    sim.add_argument('--trips', type=int, default=20)
    sim.add_argument('--quarters', type=int, default=56)
    sim.add_argument('--hauls-per-trip', dest='hauls_per_trip', type=int, default=3)
    sim.add_argument('--mean-total', dest='mean_total', type=float, default=50.0)
    sim.add_argument('--level', type=float, default=0.0, help="Mean logit of every branch")
    sim.add_argument('--amplitude', type=float, default=1.0)
    sim.add_argument('--period', type=float, default=4.0, help="Season length in time units")
    sim.add_argument('--lambda0', type=float, default=-np.inf)
    sim.add_argument('--lambda-n', dest='lambda_n', type=float, default=-np.inf)
    sim.add_argument('--sigma', type=float, default=0.3)
    sim.add_argument('--sigma-u', dest='sigma_u', type=float, default=0.3)

    fit = verbs.add_parser('fit', help="Fit every variant to every branch")
    _add_run_flags(fit)

    holdout = verbs.add_parser('holdout', help="Fit with held-out records and score predictions")
    _add_run_flags(holdout)
    holdout.add_argument('--fraction', type=float, default=0.10)
    holdout.add_argument('--without-overdispersion', dest='include_overdispersion',
                         action='store_false')

    waic = verbs.add_parser('waic', help="Rebuild the WAIC table from saved archives")
    waic.add_argument('--output-dir', dest='output_dir')
    waic.add_argument('--nesting', dest='nesting_path', help="Orders the rows like the nesting")

    transform = verbs.add_parser('transform', help="Posterior wavelet transform of a series")
    transform.add_argument('series', help="CSV with columns time,value")
    transform.add_argument('--output', required=True)
    transform.add_argument('--levels', type=int)
    transform.add_argument('--switch', type=float, default=None,
                           help="Report the dominant level before and after this time")
    transform.add_argument('--transform-draws', dest='transform_draws', type=int, default=100)
    _add_sampler_flags(transform)
    return parser


def run_config_payload(args):
    """
    Merge a --config file with the flags that were given.
    """
    payload = {}
    if getattr(args, 'config', None):
        try:
            with open(args.config) as file:
                payload = json.load(file)
        except (OSError, json.JSONDecodeError) as err:
            raise ValidationError(f"Cannot read the configuration '{args.config}': {err}")
    for name in RUN_FLAGS + ['parallel', 'use_warm_starts']:
        if getattr(args, name, None) is not None:
            payload[name] = getattr(args, name)
    sampler = dict(payload.get('sampler') or {})
    for name in SAMPLER_FLAGS + ['seed']:
        if getattr(args, name, None) is not None:
            sampler[name] = getattr(args, name)
    payload['sampler'] = sampler
    return payload


class CommandLine:
    def __init__(self, out=None):
        self.out = out or sys.stdout
        self.verbs = {}
        for method in [getattr(self, attr) for attr in dir(self) if callable(getattr(self, attr))]:
            if hasattr(method, '__verb__'):
                self.verbs[method.__verb__] = method

    def echo(self, text):
        print(text, file=self.out)

    def __call__(self, args):
        return self.verbs[args.verb](args)

    @verb('ingest')
    def ingest(self, args):
        dataset = datafiles.read_hauls(args.path, T=args.quarters, J=args.trips)
        self.echo(messaging.create_message('ingest_summary', dataset=dataset))
        self.echo(f"J={dataset.J} T={dataset.T} K={dataset.K}")
        return enums.EXIT_CODE.SUCCESS

    @verb('simulate')
    def simulate(self, args):
        if args.kind == 'series':
            times, values = simulate.simulate_regime_switch(args.points, args.noise, args.seed)
            datafiles.write_series(times, values, args.output)
            self.echo(f"Wrote {len(times)} points to {args.output}")
            return enums.EXIT_CODE.SUCCESS

        if args.nesting_path:
            with open(args.nesting_path) as file:
                tree = counts.parse_nesting(file.read())
        else:
            tree = counts.parse_nesting(counts.DISCARDS_NESTING)
        basis, interpolation = pipeline.build_grid(args.quarters)
        mean = simulate.seasonal_mean(args.quarters, args.level, args.amplitude, args.period)
        theta = simulate.theta_from_mean(mean, basis, interpolation)
        dataset, truth = simulate.simulate_counts(
            tree, {label: theta for label in tree.branch_labels}, args.quarters, args.trips,
            basis=basis, interpolation=interpolation, lambda0=args.lambda0, lambda_n=args.lambda_n,
            sigma=args.sigma, sigma_u=args.sigma_u, hauls_per_trip=args.hauls_per_trip,
            mean_total=args.mean_total, seed=args.seed)
        datafiles.write_hauls(dataset, args.output)
        truth_path = os.path.splitext(args.output)[0] + '_truth.json'
        with open(truth_path, 'w') as file:
            json.dump({label: {name: np.asarray(value).tolist() for name, value in values.items()
                               if name not in ('eta',)}
                       for label, values in truth.items()}, file, indent=2)
        self.echo(f"Wrote {dataset.M} hauls to {args.output} and the true parameters to {truth_path}")
        return enums.EXIT_CODE.SUCCESS

    @verb('fit')
    def fit(self, args):
        payload = run_config_payload(args)
        return self._fit(payload)

    @verb('holdout')
    def holdout(self, args):
        payload = run_config_payload(args)
        payload['holdout'] = dict(payload.get('holdout') or {}, enabled=True, fraction=args.fraction,
                                  include_overdispersion=args.include_overdispersion)
        return self._fit(payload)

    def _fit(self, payload):
        try:
            bundle = pipeline.fit_all(payload)
            code = enums.EXIT_CODE.SUCCESS
        except PartialCompletion as err:
            bundle, code = err.bundle, err.exit_code
        with open(os.path.join(bundle.output_dir, 'summary.txt')) as file:
            self.echo(file.read().rstrip('\n'))
        for (branch, variant), coverage in bundle.coverage.items():
            self.echo(f"Holdout coverage {branch} / {variant}: {100 * coverage:.1f}%")
        return code

    @verb('waic')
    def waic(self, args):
        output_dir = args.output_dir or os.environ.get('ZANIWAVE_OUTPUT_DIR', 'zaniwave_output')
        paths = sorted(glob.glob(os.path.join(output_dir, 'archives', '*.zip')))
        if not paths:
            raise ValidationError(f"No archives found in {os.path.join(output_dir, 'archives')}")
        results, branches = {}, []
        for path in paths:
            archive = datafiles.load_archive(path)
            branch = None if archive.variant == enums.VARIANT.MULTINOMIAL else archive.branch
            results[(branch, archive.variant)] = evaluation.waic(archive.pooled_loglik())
            if branch is not None and branch not in branches:
                branches.append(branch)
        if args.nesting_path:
            with open(args.nesting_path) as file:
                order = counts.parse_nesting(file.read()).branch_labels
            branches = [label for label in order if label in branches] + \
                       [label for label in branches if label not in order]
        table = evaluation.waic_table(results, branches)
        datafiles.write_waic_table(table, os.path.join(output_dir, 'waic_table.csv'))
        self.echo(table.to_string(float_format=lambda value: f"{value:.1f}"))
        return enums.EXIT_CODE.SUCCESS

    @verb('transform')
    def transform(self, args):
        times, values = datafiles.read_series(args.series)
        payload = preflight_config('sampler_config', {name: getattr(args, name)
                                                      for name in SAMPLER_FLAGS + ['seed']
                                                      if getattr(args, name) is not None})
        config = SamplerConfig(**payload)
        archive, posterior, summary = pipeline.fit_series(times, values, config, levels=args.levels,
                                                          n_draws=args.transform_draws)
        datafiles.write_transform_summary(summary, args.output)
        self.echo(f"Wrote the transform of {archive.n_draws} draws to {args.output}")
        if args.switch is not None:
            interpolation = posterior.interpolation
            energy = wavelets.summary_energy(summary, args.switch, span=interpolation.span)
            labels = wavelets.level_labels(posterior.basis, interpolation)
            before, after = (labels[int(np.argmax(energy[1:, side])) + 1] for side in (0, 1))
            self.echo(f"Dominant series level before t={args.switch}: {before}, after: {after}")
        return enums.EXIT_CODE.SUCCESS


def main(argv=None):
    args = build_parser().parse_args(argv)
    enable_default_logging(logging.DEBUG if args.verbose else logging.INFO)
    try:
        return CommandLine()(args)
    except ZaniwaveError as err:
        logger.error(err.description)
        return err.exit_code
    except OSError as err:
        logger.error(f"{err.__class__.__name__}: {err}")
        return enums.EXIT_CODE.VALIDATION


if __name__ == '__main__':
    sys.exit(main())
