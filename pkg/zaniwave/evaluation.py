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
Model comparison by WAIC and out-of-sample checks on held-out records.
"""

import logging

import numpy as np
import pandas as pd
from scipy.special import expit, logsumexp

from zaniwave import enums, utils
from zaniwave.distributions import sample_branch
from zaniwave.errors import ValidationError
from zaniwave.objects import HoldoutSplit, WaicResult

logger = logging.getLogger('zaniwave')

TOTAL = 'Total'


def waic(loglik):
    """
    Widely applicable information criterion from pointwise log-likelihoods.

    :param loglik: Array of shape (draws, observations).
    :returns: A WaicResult with waic = -2 lpd_hat + 2 p_waic, where p_waic
              sums the per-observation sample variances (denominator H - 1).
    """
    loglik = np.asarray(loglik, dtype=float)
    if loglik.ndim == 1:
        loglik = loglik[:, None]
    if loglik.ndim != 2:
        raise ValidationError(f"Expected a (draws, observations) matrix, got shape {loglik.shape}")
    if loglik.shape[0] < 2:
        raise ValidationError(f"WAIC needs at least 2 draws, got {loglik.shape[0]}")
    if not np.all(np.isfinite(loglik)):
        raise ValidationError("The log-likelihood matrix has non-finite entries")
    pointwise_lpd = logsumexp(loglik, axis=0) - np.log(loglik.shape[0])
    pointwise_p_waic = np.var(loglik, axis=0, ddof=1)
    lpd_hat = float(np.sum(pointwise_lpd))
    p_waic = float(np.sum(pointwise_p_waic))
    return WaicResult(waic=-2 * lpd_hat + 2 * p_waic, lpd_hat=lpd_hat, p_waic=p_waic,
                      pointwise_lpd=pointwise_lpd, pointwise_p_waic=pointwise_p_waic)


def waic_table(results, branches, variants=None):
    """
    Arrange WAIC values with one row per branch, in the given order, plus a
    Total row, and one column per variant. The multinomial variant is not
    nested, so its single value goes in the Total row.

    :param dict results: Maps (branch, variant) to a WaicResult or a number.
                         The multinomial result is keyed by (None, 'multinomial')
                         or ('multinomial', 'multinomial').
    :param list branches: Branch labels in pre-order.
    :param list variants: Column order; defaults to the variants present.
    :returns: A pandas DataFrame.
    """
    if variants is None:
        present = {variant for _, variant in results}
        variants = [variant for variant in enums.ALL_VARIANTS if variant in present]

    def value(key):
        result = results.get(key)
        if result is None:
            return np.nan
        return result.waic if isinstance(result, WaicResult) else float(result)

    table = pd.DataFrame(np.nan, index=list(branches) + [TOTAL], columns=list(variants))
    for variant in variants:
        if variant == enums.VARIANT.MULTINOMIAL:
            total = value((None, variant))
            if np.isnan(total):
                total = value((enums.VARIANT.MULTINOMIAL, variant))
            table.loc[TOTAL, variant] = total
            continue
        column = [value((branch, variant)) for branch in branches]
        table.loc[list(branches), variant] = column
        table.loc[TOTAL, variant] = np.sum(column)
    table.index.name = 'branch'
    return table


def make_holdout(dataset, fraction=0.10, seed=None):
    """
    Pick test records uniformly among those at time points with at least two
    records, never taking the last training record of a time point.

    :param HaulDataset dataset: The full data.
    :param float fraction: Share of all records to hold out.
    :param seed: Seed of the permutation.
    :returns: A HoldoutSplit of record positions.
    """
    if not 0 < fraction < 1:
        raise ValidationError(f"The holdout fraction must lie in (0, 1), got {fraction}")
    quarters = dataset.quarters
    per_time = np.bincount(quarters, minlength=dataset.T + 1)
    eligible = per_time[quarters] >= 2
    if not np.any(eligible):
        raise ValidationError("No time point has more than one record, nothing can be held out")
    wanted = int(round(fraction * dataset.M))

    rng = np.random.default_rng(seed)
    remaining = per_time.copy()
    test = []
    for index in rng.permutation(np.flatnonzero(eligible)):
        if len(test) >= wanted:
            break
        if remaining[quarters[index]] > 1:
            remaining[quarters[index]] -= 1
            test.append(index)
    if len(test) < wanted:
        logger.warning(f"Only {len(test)} of the requested {wanted} records could be held out")
    test = np.sort(np.array(test, dtype=np.int64))
    train = np.setdiff1d(np.arange(dataset.M), test)
    return HoldoutSplit(train=train, test=test, fraction=fraction, eligible=eligible,
                        seed=utils.seed_value(seed))


def predict_holdout(archive, posterior, test, record_ids=None, include_overdispersion=True, seed=None):
    """
    Posterior predictive intervals for held-out branch counts.

    For every retained draw, p = logit^-1(mu_t + sigma z) with z standard
    normal (z = 0 when include_overdispersion is False); trip random effects
    are left out. A count is drawn from the variant's distribution given the
    observed number of trials.

    :param SampleArchive archive: Draws of the fit.
    :param BranchPosterior posterior: The posterior the archive was drawn from.
    :param BranchDataset test: Held-out records of the same branch.
    :param record_ids: Identifiers for the output rows; positions by default.
    :returns: A pandas DataFrame with columns record_id, observed, median,
              lo95, hi95 and their square roots.
    """
    if archive.variant == enums.VARIANT.MULTINOMIAL:
        raise ValidationError("Holdout prediction is done per branch, not for the multinomial fit")
    if np.any(test.time_index >= posterior.T) or np.any(test.time_index < 0):
        raise ValidationError("A held-out record lies at a time point outside the fitted grid")
    draws = archive.pooled_draws()
    rng = np.random.default_rng(seed)
    mu = posterior.mean_function(draws)[:, 0, :]
    x = mu[:, test.time_index]
    if include_overdispersion:
        sigma = np.exp(archive.block('log_sigma')[:, 0])
        x = x + sigma[:, None] * rng.normal(size=x.shape)
    p = np.clip(expit(x), 1e-300, 1 - 1e-16)
    lambda0 = archive.block('lambda0')[:, :1] if 'lambda0' in archive.blocks else -np.inf
    lambda_n = archive.block('lambda_n')[:, :1] if 'lambda_n' in archive.blocks else -np.inf
    predicted = sample_branch(archive.variant, test.n[None, :], p, rng,
                              lambda0=lambda0, lambda_n=lambda_n)
    lo, median, hi = np.percentile(predicted, [2.5, 50, 97.5], axis=0)
    if record_ids is None:
        record_ids = np.arange(test.M)
    frame = pd.DataFrame({'record_id': np.asarray(record_ids),
                          'observed': test.y,
                          'median': median,
                          'lo95': lo,
                          'hi95': hi})
    for column in ('observed', 'median', 'lo95', 'hi95'):
        frame[f'sqrt_{column}'] = np.sqrt(frame[column])
    return frame


def interval_coverage(predictions):
    """
    Share of held-out counts inside their 95% predictive interval.
    """
    inside = (predictions['observed'] >= predictions['lo95']) & (predictions['observed'] <= predictions['hi95'])
    return float(np.mean(inside)) if len(predictions) else float('nan')
