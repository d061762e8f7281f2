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
A complete analysis: read the hauls, fit every variant to every branch of
the nesting, compare the fits by WAIC and write plot-ready outputs.
"""

import asyncio
import logging
import os
import re

import numpy as np
import pandas as pd

from zaniwave import counts, datafiles, enums, evaluation, hooks, messaging, sampler, utils, wavelets
from zaniwave.errors import PartialCompletion, ValidationError
from zaniwave.objects import BranchDataset, FitBundle, RunConfig, SamplerConfig
from zaniwave.posterior import BranchPosterior, SeriesPosterior
from zaniwave.preflight import preflight_config

logger = logging.getLogger('zaniwave')

MULTINOMIAL_KEY = (None, enums.VARIANT.MULTINOMIAL)
JITTER_SEED = 0


def ingest(path, T=None, J=None):
    """
    Read and validate a haul CSV and log its summary.
    """
    dataset = datafiles.read_hauls(path, T=T, J=J)
    logger.info(messaging.create_message('ingest_summary', dataset=dataset))
    return dataset


def load_tree(nesting_path, dataset):
    """
    Read the nesting configuration for a dataset. Two-category data need no
    configuration.
    """
    if nesting_path is None:
        if dataset.K == 2:
            return counts.two_category_tree(dataset.category_names)
        raise ValidationError(f"A nesting configuration is required for {dataset.K} categories")
    with open(nesting_path) as file:
        tree = counts.parse_nesting(file.read(), dataset.category_names)
    if tree.K != dataset.K:
        raise ValidationError(f"The nesting covers {tree.K} categories, the data have {dataset.K}")
    if list(tree.category_names) != list(dataset.category_names):
        logger.warning(f"The nesting names the categories {tree.category_names}, the data "
                       f"{dataset.category_names}; matching them by position.")
    return tree


def build_grid(T, levels=None):
    """
    The wavelet basis and the placement of the time units 1..T on it.
    """
    basis = wavelets.build_basis(levels or wavelets.grid_levels(T))
    interpolation = wavelets.build_interpolation(np.arange(1, T + 1), basis)
    return basis, interpolation


def empirical_proportions(branch, jitter=0.2, seed=JITTER_SEED):
    """
    Observed proportions y / n of the records with trials, with a jittered
    copy of the time for plotting.
    """
    active = branch.active
    time = branch.time_index[active] + 1
    rng = np.random.default_rng(seed)
    return pd.DataFrame({'record_id': np.flatnonzero(active),
                         'time': time,
                         'proportion': branch.y[active] / branch.n[active],
                         'n': branch.n[active],
                         'jitter': time + rng.uniform(-jitter, jitter, size=len(time))})


def kernel_smooth(times, values, grid=None, bandwidth=5.0):
    """
    Nadaraya-Watson smoother with a Gaussian kernel.

    :param times: Times of the observations.
    :param values: Observed values.
    :param grid: Times to evaluate the smoother at; every integer between
                 the first and last observation by default.
    :param float bandwidth: Standard deviation of the kernel, in time units.
    :returns: A pandas DataFrame with columns time and smooth.
    """
    if bandwidth <= 0:
        raise ValidationError(f"The bandwidth must be positive, got {bandwidth}")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid is None:
        grid = np.arange(np.floor(times.min()), np.ceil(times.max()) + 1) if len(times) else np.zeros(0)
    grid = np.asarray(grid, dtype=float)
    weights = np.exp(-0.5 * ((grid[:, None] - times[None, :]) / bandwidth) ** 2)
    with np.errstate(invalid='ignore', divide='ignore'):
        smooth = weights @ values / weights.sum(axis=1)
    return pd.DataFrame({'time': grid, 'smooth': smooth})


def band_frame(posterior, archive, names):
    """
    Median and 95% band of logit^-1(mu) per component and time unit.
    """
    bands = posterior.proportion_bands(archive.pooled_draws())
    time = np.arange(1, posterior.T + 1)
    return pd.concat([pd.DataFrame({'time': time, 'component': name, 'lo95': bands[0, c],
                                    'median': bands[1, c], 'hi95': bands[2, c]})
                      for c, name in enumerate(names)], ignore_index=True)


def file_stem(branch, variant=None):
    """
    A file name for a branch label, e.g. 'Dab vs Plaice' -> 'Dab_vs_Plaice'.
    """
    stem = re.sub(r'[^A-Za-z0-9.-]+', '_', branch or 'all').strip('_')
    return f"{stem}__{variant}" if variant else stem


def _active_subset(branch):
    active = branch.active
    return BranchDataset(node_label=branch.node_label, y=branch.y[active], n=branch.n[active],
                         time_index=branch.time_index[active], trip_index=branch.trip_index[active],
                         T=branch.T, J=branch.J), np.flatnonzero(active)


class Analysis:
    """
    One run of fit_all. Owns all mutable state; every fit writes only its own
    files.

    :param RunConfig config: The run settings.
    :param HaulDataset dataset: The hauls; read from config.data_path if absent.
    :param NestingTree tree: The nesting; read from config.nesting_path if absent.
    """
    def __init__(self, config, dataset=None, tree=None):
        self.config = config
        self.dataset = dataset if dataset is not None else ingest(config.data_path)
        self.tree = tree or load_tree(config.nesting_path, self.dataset)
        self.basis, self.interpolation = build_grid(self.dataset.T, config.levels)
        self.split = None
        self.train, self.test = self.dataset, None
        if config.holdout.enabled:
            self.split = evaluation.make_holdout(self.dataset, config.holdout.fraction,
                                                 config.holdout.seed)
            self.train = self.dataset.subset(self.split.train)
            self.test = self.dataset.subset(self.split.test)
            logger.info(f"Holding out {len(self.split.test)} of {self.dataset.M} records")
        self.bundle = FitBundle(output_dir=config.output_dir, tree=self.tree, holdout=self.split)

    @property
    def nested_variants(self):
        return [variant for variant in enums.NESTED_VARIANTS if variant in self.config.variants]

    def _path(self, name):
        return os.path.join(self.config.output_dir, name)

    def _write(self, writer, value, name):
        path = self._path(name)
        writer(value, path)
        self.bundle.files.append(name)
        return path

    async def run(self):
        os.makedirs(self.config.output_dir, exist_ok=True)
        await hooks.call(enums.HOOK_POINT.BEFORE_FIT, self.config, self.tree)
        jobs = [self.fit_branch(node) for node in self.tree.nodes]
        if enums.VARIANT.MULTINOMIAL in self.config.variants:
            jobs.append(self.fit_multinomial())
        if self.config.parallel:
            await asyncio.gather(*jobs)
        else:
            for job in jobs:
                await job

        variants = [variant for variant in enums.ALL_VARIANTS if variant in self.config.variants]
        self.bundle.table = evaluation.waic_table(self.bundle.waic, self.tree.branch_labels, variants)
        self._write(datafiles.write_waic_table, self.bundle.table, 'waic_table.csv')
        self.bundle.inflation = {node.label: counts.inflation_fraction(
                                     counts.aggregate_branch(self.train, node))
                                 for node in self.tree.nodes}
        summary = messaging.create_message('fit_summary', table=self.bundle.table,
                                           failures=self.bundle.failures,
                                           requested=self.bundle.requested,
                                           output_dir=self.config.output_dir,
                                           inflation=self.bundle.inflation)
        with open(self._path('summary.txt'), 'w') as file:
            file.write(summary + '\n')
        self.bundle.files.append('summary.txt')
        self.bundle.files.sort()
        logger.info(summary)
        await hooks.call(enums.HOOK_POINT.AFTER_FIT, self.bundle)
        return self.bundle

    async def fit_branch(self, node):
        """
        Fit the nested variants to one branch, simplest first, each warm
        started from the one before it when the run allows.
        """
        self._write_empirical(node)
        data = counts.aggregate_branch(self.train, node)
        previous = None
        for variant in self.nested_variants:
            posterior = BranchPosterior(data, variant, self.basis, self.interpolation, self.config.prior)
            initial = self._warm_start(posterior, previous)
            previous = await self._fit(node.label, variant, posterior, initial, node)

    async def fit_multinomial(self):
        posterior = BranchPosterior(self.train, enums.VARIANT.MULTINOMIAL, self.basis,
                                    self.interpolation, self.config.prior)
        await self._fit(None, enums.VARIANT.MULTINOMIAL, posterior, None)

    def _warm_start(self, posterior, previous):
        config = self.config
        if previous is None or not config.use_warm_starts:
            return None
        source, archive = previous
        if posterior.variant not in config.warm_start or source.variant not in config.warm_start:
            return None
        logger.debug(f"Starting {posterior.label}/{posterior.variant} from the last draws "
                     f"of {source.variant}")
        return np.array([posterior.embed(archive.draws[chain, -1], source)
                         for chain in range(archive.chains)])

    async def _fit(self, branch, variant, posterior, initial, node=None):
        key = (branch, variant)
        seed = utils.child_seed(self.config.seed, branch or 'all', variant)
        try:
            if self.config.parallel:
                archive = await sampler.run_async(posterior, self.config.sampler, initial=initial,
                                                  seed=seed, branch=branch or 'all', variant=variant)
            else:
                archive = sampler.run(posterior, self.config.sampler, initial=initial, seed=seed,
                                      branch=branch or 'all', variant=variant)
            result = evaluation.waic(archive.pooled_loglik())
            self._write_fit(branch, variant, posterior, archive, node)
        except Exception as err:
            logger.error(f"Fitting {branch or 'all'}/{variant} failed: {err.__class__.__name__}: {err}")
            self.bundle.failures[key] = err
            await hooks.call(enums.HOOK_POINT.AFTER_BRANCH, branch, variant, None, err)
            return None
        self.bundle.archives[key] = archive
        self.bundle.waic[key] = result
        await hooks.call(enums.HOOK_POINT.AFTER_BRANCH, branch, variant, archive, result)
        return posterior, archive

    def _write_fit(self, branch, variant, posterior, archive, node):
        stem = file_stem(branch, variant)
        self._write(datafiles.save_archive, archive, os.path.join('archives', f'{stem}.zip'))
        if variant == enums.VARIANT.MULTINOMIAL:
            names = list(self.dataset.category_names[:-1])
        else:
            names = [branch]
        self._write(datafiles.write_frame, band_frame(posterior, archive, names), f'fitted_{stem}.csv')

        if posterior.has_wavelet and posterior.C == 1:
            mu = posterior.mean_function(archive.pooled_draws())[:, 0, :]
            summary = wavelets.transform_summary(mu, self.basis, self.interpolation,
                                                 n_draws=self.config.transform_draws)
            self._write(datafiles.write_transform_summary, summary, f'transform_{stem}.csv')

        if self.test is not None and node is not None:
            test, active = _active_subset(counts.aggregate_branch(self.test, node))
            predictions = evaluation.predict_holdout(
                archive, posterior, test, record_ids=self.split.test[active],
                include_overdispersion=self.config.holdout.include_overdispersion,
                seed=utils.child_seed(self.config.seed, branch, variant, 'holdout'))
            self.bundle.coverage[(branch, variant)] = evaluation.interval_coverage(predictions)
            self._write(datafiles.write_frame, predictions, f'holdout_{stem}.csv')

    def _write_empirical(self, node):
        branch = counts.aggregate_branch(self.dataset, node)
        frame = empirical_proportions(branch)
        smoother = kernel_smooth(frame['time'], frame['proportion'],
                                 grid=np.arange(1, self.dataset.T + 1),
                                 bandwidth=self.config.bandwidth)
        self._write(datafiles.write_frame, frame, f'empirical_{file_stem(node.label)}.csv')
        self._write(datafiles.write_frame, smoother, f'smoother_{file_stem(node.label)}.csv')


def _as_run_config(config):
    if isinstance(config, RunConfig):
        config = config.to_dict()
    return RunConfig.from_dict(preflight_config('run_config', config))


async def fit_all_async(config, dataset=None, tree=None):
    """
    Run a complete analysis and write the output bundle.

    :param config: A RunConfig, or a dict of its fields.
    :param HaulDataset dataset: Use these hauls instead of config.data_path.
    :param NestingTree tree: Use this nesting instead of config.nesting_path.
    :returns: A FitBundle.
    :raises PartialCompletion: When some fits failed and others completed.
    """
    config = _as_run_config(config)
    analysis = Analysis(config, dataset=dataset, tree=tree)
    bundle = await analysis.run()
    if bundle.failures:
        if not bundle.archives:
            raise next(iter(bundle.failures.values()))
        raise PartialCompletion(bundle.failures, bundle)
    return bundle


def fit_all(config, dataset=None, tree=None):
    """
    Blocking version of fit_all_async.
    """
    return asyncio.run(fit_all_async(config, dataset=dataset, tree=tree))


def fit_series(times, values, config=None, levels=None, prior=None, seed=None, n_draws=100,
               margin=enums.MARGIN.PERIODIC):
    """
    Fit the Gaussian wavelet regression to an evenly spaced real-valued
    series. The series fills two thirds of the grid (wavelets.SERIES_FILL),
    so its series levels sit two below the detail levels.

    :returns: (archive, posterior, WaveletTransformSummary)
    """
    times = np.asarray(times, dtype=float)
    config = config or SamplerConfig()
    n = len(times)
    if n < 2:
        raise ValidationError("A series needs at least two points")
    spacing = float(np.median(np.diff(times)))
    basis = wavelets.build_basis(levels or wavelets.grid_levels(n))
    interpolation = wavelets.build_interpolation(times, basis,
                                                 cells_per_unit=wavelets.SERIES_FILL * basis.L / (n * spacing))
    posterior = SeriesPosterior(values, basis, interpolation, prior)
    archive = sampler.run(posterior, config, seed=seed, branch='series', variant=posterior.variant)
    mu = posterior.mean_function(archive.pooled_draws())[:, 0, :]
    summary = wavelets.transform_summary(mu, basis, interpolation, n_draws=n_draws, margin=margin)
    return archive, posterior, summary
