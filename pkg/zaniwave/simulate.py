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
Synthetic data: a noisy series whose frequency content changes halfway,
and haul counts drawn through a nesting tree from known branch models.
"""

import logging

import numpy as np
from scipy.special import expit

from zaniwave import enums, wavelets
from zaniwave.distributions import sample_zani
from zaniwave.errors import ValidationError
from zaniwave.objects import HaulDataset, HaulRecord

logger = logging.getLogger('zaniwave')


def regime_switch_mean(times, beta=(2.0, 2.0), frequencies=(4.0, 10.0), switch=0.5):
    """
    beta[0] sin(2 pi f0 t), plus beta[1] sin(2 pi f1 t) from t = switch on.
    """
    times = np.asarray(times, dtype=float)
    return (beta[0] * np.sin(2 * np.pi * frequencies[0] * times)
            + (times >= switch) * beta[1] * np.sin(2 * np.pi * frequencies[1] * times))


def simulate_regime_switch(n_points=128, noise_sd=0.3, seed=None, beta=(2.0, 2.0)):
    """
    Sample the regime-switching series at t = i / n_points, i = 0..n_points - 1.

    :returns: (times, values)
    """
    if n_points < 16:
        raise ValidationError(f"The series needs at least 16 points, got {n_points}")
    rng = np.random.default_rng(seed)
    times = np.arange(n_points) / n_points
    values = regime_switch_mean(times, beta) + noise_sd * rng.normal(size=n_points)
    return times, values


def _per_branch(value, label, default):
    if isinstance(value, dict):
        return value.get(label, default)
    return default if value is None else value


def simulate_counts(tree, theta, T, J, basis=None, interpolation=None, lambda0=-np.inf,
                    lambda_n=-np.inf, sigma=0.3, sigma_u=0.3, hauls_per_trip=3,
                    mean_total=50.0, seed=None):
    """
    Draw haul counts from nested ZaNI-binomial branch models.

    Each trip gets a uniformly drawn time unit and a random effect per
    branch. A haul's total is Poisson; it is split top-down through the
    tree, with the left share of every node drawn from that node's model.

    :param NestingTree tree: The nesting.
    :param dict theta: Wavelet coefficients per branch label. Missing
                       branches get all-zero coefficients.
    :param int T: Number of time units.
    :param int J: Number of trips.
    :param lambda0: Zero-inflation weight, a number or a dict per branch.
    :param lambda_n: N-inflation weight, a number or a dict per branch.
    :param sigma: Over-dispersion sd, a number or a dict per branch.
    :param sigma_u: Trip random-effect sd, a number or a dict per branch.
    :param hauls_per_trip: A number, or a length-J sequence.
    :returns: (HaulDataset, truth) where truth maps each branch label to its
              parameters, mean function, random effects and latent logits.
    """
    rng = np.random.default_rng(seed)
    if basis is None:
        basis = wavelets.build_basis(wavelets.grid_levels(T))
    if interpolation is None:
        interpolation = wavelets.build_interpolation(np.arange(1, T + 1), basis)
    hauls = np.broadcast_to(np.asarray(hauls_per_trip, dtype=np.int64), (J,))
    trip_quarter = rng.integers(1, T + 1, size=J)
    trip_ids = np.repeat(np.arange(1, J + 1), hauls)
    obs_index = np.concatenate([np.arange(1, n + 1) for n in hauls]) if J else np.zeros(0, np.int64)
    quarters = trip_quarter[trip_ids - 1]
    M = len(trip_ids)
    totals = rng.poisson(mean_total, size=M)

    truth = {}
    for node in tree.nodes:
        coefficients = np.asarray(_per_branch(theta, node.label, np.zeros(basis.L)), dtype=float)
        mu = wavelets.mean_function(coefficients, interpolation, basis)
        branch_sigma = float(_per_branch(sigma, node.label, 0.3))
        branch_sigma_u = float(_per_branch(sigma_u, node.label, 0.3))
        b = branch_sigma_u * rng.normal(size=J)
        eta = mu[quarters - 1] + b[trip_ids - 1] + branch_sigma * rng.normal(size=M)
        truth[node.label] = {'theta': coefficients, 'mu': mu, 'b': b, 'eta': eta,
                             'lambda0': float(_per_branch(lambda0, node.label, -np.inf)),
                             'lambda_n': float(_per_branch(lambda_n, node.label, -np.inf)),
                             'sigma': branch_sigma, 'sigma_u': branch_sigma_u}

    counts = np.zeros((M, tree.K), dtype=np.int64)
    at_node = {tree.root.label: totals}
    node_by_members = {node.member_set: node for node in tree.nodes}
    for node in tree.nodes:
        n = at_node.pop(node.label)
        params = truth[node.label]
        p = np.clip(expit(params['eta']), 1e-12, 1 - 1e-12)
        left = sample_zani(n, p, params['lambda0'], params['lambda_n'], rng)
        for members, share in ((node.left_set, left), (node.right_set, n - left)):
            if len(members) == 1:
                counts[:, members[0]] = share
            else:
                at_node[node_by_members[members].label] = share

    records = [HaulRecord(trip_id=int(trip), obs_index=int(obs), quarter=int(quarter), counts=row)
               for trip, obs, quarter, row in zip(trip_ids, obs_index, quarters, counts)]
    dataset = HaulDataset(records=records, K=tree.K, T=T, J=J, category_names=list(tree.category_names))
    logger.debug(f"Simulated {M} hauls over {J} trips and {T} time units")
    return dataset, truth


def theta_from_mean(mean, basis, interpolation, margin=enums.MARGIN.PERIODIC):
    """
    Wavelet coefficients whose mean function reproduces `mean` on the
    observed times, up to interpolation error.
    """
    return wavelets.dwt(wavelets.grid_from_series(mean, interpolation, margin=margin), basis)


def seasonal_mean(T, level=0.0, amplitude=1.0, period=4.0, phase=0.0):
    """
    level + amplitude sin(2 pi (t - 1) / period + phase) on t = 1..T.
    """
    t = np.arange(1, T + 1, dtype=float)
    return level + amplitude * np.sin(2 * np.pi * (t - 1) / period + phase)
