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
Multiplicative-gamma shrinkage prior on wavelet coefficients.

Coefficient l has precision phi * tau[detail_map[l]] with tau the running
product of delta. delta[0] (the scaling coefficient) is Ga(alpha1, 1), every
later entry Ga(alpha2, 1); phi is Ga(nu/2, rate nu/2); alpha1 and alpha2 are
uniform on the bounds of the PriorConfig.

Every function accepts leading batch dimensions: theta (..., L), delta
(..., D + 1) and phi, alpha1, alpha2 of shape (...).
"""

import numpy as np
from scipy import stats
from scipy.special import digamma

from zaniwave.errors import DomainError
from zaniwave.objects import PriorConfig, ShrinkageState

LOG_2PI = np.log(2 * np.pi)


def _unpack(state):
    delta = np.asarray(state.delta, dtype=float)
    phi = np.asarray(state.phi, dtype=float)
    if np.any(delta <= 0) or np.any(phi <= 0):
        raise DomainError("delta and phi must be positive")
    return delta, phi, np.asarray(state.alpha1, dtype=float), np.asarray(state.alpha2, dtype=float)


def coefficient_precision(state, detail_map):
    delta, phi, _, _ = _unpack(state)
    return phi[..., None] * np.cumprod(delta, axis=-1)[..., detail_map]


def coefficient_log_density(theta, state, detail_map):
    """
    Sum of the Normal log-densities of the coefficients.
    """
    theta = np.asarray(theta, dtype=float)
    precision = coefficient_precision(state, detail_map)
    return np.sum(0.5 * np.log(precision) - 0.5 * LOG_2PI - 0.5 * precision * theta ** 2, axis=-1)


def _in_bounds(value, bounds):
    return (value > bounds[0]) & (value < bounds[1])


def hyperprior_log_density(state, prior=None):
    """
    Log-density of delta, phi, alpha1 and alpha2 under their priors. Values
    of alpha outside the uniform supports give -inf.
    """
    prior = prior or PriorConfig()
    delta, phi, alpha1, alpha2 = _unpack(state)
    inside = _in_bounds(alpha1, prior.alpha1_bounds) & _in_bounds(alpha2, prior.alpha2_bounds)
    safe1 = np.where(inside, alpha1, np.mean(prior.alpha1_bounds))
    safe2 = np.where(inside, alpha2, np.mean(prior.alpha2_bounds))
    total = (stats.gamma.logpdf(delta[..., 0], safe1)
             + np.sum(stats.gamma.logpdf(delta[..., 1:], safe2[..., None]), axis=-1)
             + stats.gamma.logpdf(phi, prior.nu / 2, scale=2 / prior.nu)
             - np.log(prior.alpha1_bounds[1] - prior.alpha1_bounds[0])
             - np.log(prior.alpha2_bounds[1] - prior.alpha2_bounds[0]))
    total = np.where(inside, total, -np.inf)
    return float(total) if np.ndim(total) == 0 else total


def log_prior(theta, state, detail_map, prior=None):
    """
    Log-density of the coefficients and every shrinkage hyperparameter.

    :param theta: Wavelet coefficients.
    :param ShrinkageState state: delta, phi, alpha1 and alpha2.
    :param detail_map: Level of each coefficient, 0 for the scaling one.
    :param PriorConfig prior: Hyperprior settings.
    """
    total = coefficient_log_density(theta, state, detail_map) + hyperprior_log_density(state, prior)
    return float(total) if np.ndim(total) == 0 else total


def log_prior_gradient(theta, state, detail_map, prior=None):
    """
    Derivatives of log_prior with respect to theta, delta, phi, alpha1 and
    alpha2 on the natural scale, returned as a dict.
    """
    prior = prior or PriorConfig()
    theta = np.asarray(theta, dtype=float)
    delta, phi, alpha1, alpha2 = _unpack(state)
    tau = np.cumprod(delta, axis=-1)
    precision = phi[..., None] * tau[..., detail_map]
    n_levels = delta.shape[-1]

    # Per coefficient, d/dlog(tau) of the Normal term.
    per_coefficient = 0.5 - 0.5 * precision * theta ** 2
    per_level = np.stack([np.sum(per_coefficient * (detail_map == level), axis=-1)
                          for level in range(n_levels)], axis=-1)
    # delta[d] scales tau at every level >= d.
    from_coefficients = np.flip(np.cumsum(np.flip(per_level, axis=-1), axis=-1), axis=-1)
    shapes = np.concatenate([alpha1[..., None],
                             np.broadcast_to(alpha2[..., None], delta[..., 1:].shape)], axis=-1)
    d_delta = from_coefficients / delta + (shapes - 1) / delta - 1
    d_phi = (np.sum(0.5 / phi[..., None] - 0.5 * tau[..., detail_map] * theta ** 2, axis=-1)
             + (prior.nu / 2 - 1) / phi - prior.nu / 2)
    d_alpha1 = np.log(delta[..., 0]) - digamma(alpha1)
    d_alpha2 = np.sum(np.log(delta[..., 1:]) - digamma(alpha2)[..., None], axis=-1)
    return {'theta': -precision * theta,
            'delta': d_delta,
            'phi': d_phi,
            'alpha1': d_alpha1,
            'alpha2': d_alpha2}


def sample_prior(basis, rng, prior=None, alpha1=None, alpha2=None, phi=None, size=None):
    """
    Ancestral draw alpha -> delta -> tau -> theta.

    Any of alpha1, alpha2 and phi can be fixed; the rest are drawn from their
    priors. With size, every returned array gets that leading shape.

    :returns: (theta, ShrinkageState)
    """
    prior = prior or PriorConfig()
    shape = () if size is None else tuple(np.atleast_1d(size))
    if alpha1 is None:
        alpha1 = rng.uniform(*prior.alpha1_bounds, size=shape)
    if alpha2 is None:
        alpha2 = rng.uniform(*prior.alpha2_bounds, size=shape)
    if phi is None:
        phi = rng.gamma(prior.nu / 2, 2 / prior.nu, size=shape)
    alpha1 = np.broadcast_to(np.asarray(alpha1, dtype=float), shape)
    alpha2 = np.broadcast_to(np.asarray(alpha2, dtype=float), shape)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), shape)

    delta = np.empty(shape + (basis.D + 1,))
    delta[..., 0] = rng.gamma(alpha1, 1.0, size=shape)
    delta[..., 1:] = rng.gamma(alpha2[..., None], 1.0, size=shape + (basis.D,))
    state = ShrinkageState(delta=delta, phi=phi, alpha1=alpha1, alpha2=alpha2, nu=prior.nu)
    scale = 1 / np.sqrt(coefficient_precision(state, basis.detail_map))
    theta = rng.normal(size=shape + (basis.L,)) * scale
    return theta, state
