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
Unnormalised log-posterior, with exact gradient, of one model fit over an
unconstrained parameter vector.

The model has C latent components: one for the nested binomial-family
variants, K - 1 for the multinomial-logistic variant. For record i with
time index t and trip j,

    eta[i, c] ~ N(mu[c, t] + b[c, j], sigma[c]**2),   mu[c] = H W' theta[c]
    b[c, j]   ~ N(0, sigma_u[c]**2)

and the counts follow the variant's distribution with p = logit^-1(eta).
Positive parameters are sampled on the log scale; alpha1 and alpha2 through
a logit scaled to their uniform prior bounds.
"""

import logging
from collections import OrderedDict

import numpy as np
from scipy.special import expit, gammaln, log_expit, logit, logsumexp, softmax

from zaniwave import enums, shrinkage
from zaniwave.distributions import binomial_loglik_logit, zani_loglik_logit
from zaniwave.errors import DomainError, NonFiniteDensityError, ShapeError, ValidationError
from zaniwave.objects import BranchDataset, HaulDataset, PriorConfig, ShrinkageState

logger = logging.getLogger('zaniwave')

LOG_2PI = np.log(2 * np.pi)

# Starting values of coordinates that a simpler variant does not have.
EMBED_DEFAULTS = {'theta': 0.0,
                  'log_delta': 0.0,
                  'log_phi': 0.0,
                  'alpha1_u': 0.0,
                  'alpha2_u': 0.0,
                  'lambda0': -3.0,
                  'lambda_n': -3.0}


class ParameterLayout:
    """
    Named blocks of a flat parameter vector, in a fixed order.
    """
    def __init__(self, blocks):
        self.shapes = OrderedDict((name, tuple(int(s) for s in shape)) for name, shape in blocks)
        self.offsets = OrderedDict()
        offset = 0
        for name, shape in self.shapes.items():
            self.offsets[name] = offset
            offset += int(np.prod(shape))
        self.size = offset

    def __contains__(self, name):
        return name in self.shapes

    def __iter__(self):
        return iter(self.shapes.items())

    def __eq__(self, other):
        return isinstance(other, ParameterLayout) and self.shapes == other.shapes

    def slice(self, name):
        offset = self.offsets[name]
        return slice(offset, offset + int(np.prod(self.shapes[name])))

    def pack(self, values):
        vector = np.empty(self.size)
        for name, shape in self.shapes.items():
            if name not in values:
                raise ValidationError(f"Missing parameter block '{name}'")
            block = np.asarray(values[name], dtype=float)
            if block.shape != shape:
                raise ShapeError(f"Block '{name}' has shape {block.shape}, expected {shape}")
            vector[self.slice(name)] = block.ravel()
        return vector

    def unpack(self, vector):
        vector = np.asarray(vector, dtype=float)
        if vector.shape[-1] != self.size:
            raise ShapeError(f"Expected {self.size} parameters, got {vector.shape[-1]}")
        return {name: vector[..., self.slice(name)].reshape(vector.shape[:-1] + shape)
                for name, shape in self.shapes.items()}

    def coordinate_names(self):
        names = []
        for name, shape in self.shapes.items():
            for index in np.ndindex(*shape):
                names.append(f"{name}[{','.join(str(i) for i in index)}]")
        return names

    def to_header(self):
        return {name: [self.offsets[name], list(shape)] for name, shape in self.shapes.items()}

    @classmethod
    def from_header(cls, header):
        ordered = sorted(header.items(), key=lambda item: item[1][0])
        return cls([(name, tuple(shape)) for name, (offset, shape) in ordered])


def _half_cauchy_logpdf(value, scale):
    return np.log(2 / (np.pi * scale)) - np.log1p((value / scale) ** 2)


def _shrinkage_term(values, detail_map, prior, gradient=False):
    """
    Shrinkage prior of theta and its hyperparameters. The value leaves out
    the Jacobian of the log and logit transforms; the gradients, returned per
    block (theta, log_delta, log_phi, alpha1_u, alpha2_u), already include it.

    :returns: (value, gradients or None)
    """
    delta, phi = np.exp(values['log_delta']), np.exp(values['log_phi'])
    w1 = prior.alpha1_bounds[1] - prior.alpha1_bounds[0]
    w2 = prior.alpha2_bounds[1] - prior.alpha2_bounds[0]
    s1, s2 = expit(values['alpha1_u']), expit(values['alpha2_u'])
    if not (np.all(np.isfinite(delta)) and np.all(delta > 0)
            and np.all(np.isfinite(phi)) and np.all(phi > 0)):
        grads = {name: np.full(values[name].shape, np.nan)
                 for name in ('log_delta', 'log_phi', 'alpha1_u', 'alpha2_u')}
        grads['theta'] = np.zeros_like(values['theta'])
        return -np.inf, grads if gradient else None
    state = ShrinkageState(delta=delta, phi=phi,
                           alpha1=prior.alpha1_bounds[0] + w1 * s1,
                           alpha2=prior.alpha2_bounds[0] + w2 * s2, nu=prior.nu)
    value = float(np.sum(shrinkage.log_prior(values['theta'], state, detail_map, prior)))
    if not gradient:
        return value, None
    prior_grad = shrinkage.log_prior_gradient(values['theta'], state, detail_map, prior)
    return value, {'theta': prior_grad['theta'],
                   'log_delta': prior_grad['delta'] * delta + 1,
                   'log_phi': prior_grad['phi'] * phi + 1,
                   'alpha1_u': prior_grad['alpha1'] * w1 * s1 * (1 - s1) + (1 - 2 * s1),
                   'alpha2_u': prior_grad['alpha2'] * w2 * s2 * (1 - s2) + (1 - 2 * s2)}


class BranchPosterior:
    """
    The log-posterior of one variant fitted to one branch (or, for the
    multinomial variant, to the full haul data).

    :param data: A BranchDataset, or a HaulDataset for the multinomial variant.
    :param str variant: One of enums.VARIANT.
    :param WaveletBasis basis: Basis on the grid.
    :param InterpolationMatrix interpolation: Placement of the T time units.
    :param PriorConfig prior: Hyperprior settings.
    """
    def __init__(self, data, variant, basis, interpolation, prior=None):
        if variant not in enums.VARIANT.values:
            raise ValidationError(f"Unknown variant '{variant}'")
        self.variant = variant
        self.basis = basis
        self.interpolation = interpolation
        self.prior = prior or PriorConfig()
        self.data = data

        if variant == enums.VARIANT.MULTINOMIAL:
            if not isinstance(data, HaulDataset):
                raise ValidationError("The multinomial variant is fitted to a HaulDataset")
            self.label = 'multinomial'
            self.counts = data.counts.astype(float)
            self.n = data.totals.astype(float)
            self.time_index = data.quarters - 1
            self.trip_index = data.trips - 1
            self.C = data.K - 1
            self.log_coefficient = gammaln(self.n + 1) - gammaln(self.counts + 1).sum(axis=1)
        else:
            if not isinstance(data, BranchDataset):
                raise ValidationError(f"The {variant} variant is fitted to a BranchDataset")
            self.label = data.node_label
            self.y = data.y.astype(float)
            self.n = data.n.astype(float)
            self.time_index = data.time_index
            self.trip_index = data.trip_index
            self.C = 1
        self.T, self.J = data.T, data.J
        self.M = len(self.n)
        self.active = self.n > 0

        if interpolation.H.shape != (self.T, basis.L):
            raise ShapeError(f"The interpolation matrix has shape {interpolation.H.shape}, "
                             f"expected {(self.T, basis.L)}")
        # mu = X theta maps coefficients to the T time units.
        self.X = interpolation.H @ basis.W.T

        self.has_wavelet = variant != enums.VARIANT.CM_B
        self.has_lambda0 = variant in (enums.VARIANT.W_ZI_B, enums.VARIANT.W_ZANI_B)
        self.has_lambda_n = variant == enums.VARIANT.W_ZANI_B

        C, D = self.C, basis.D
        blocks = [('eta', (self.M, C))]
        if self.has_wavelet:
            blocks.append(('theta', (C, basis.L)))
        blocks += [('b', (C, self.J)), ('log_sigma', (C,)), ('log_sigma_u', (C,))]
        if self.has_wavelet:
            blocks += [('log_delta', (C, D + 1)), ('log_phi', (C,)),
                       ('alpha1_u', (C,)), ('alpha2_u', (C,))]
        if self.has_lambda0:
            blocks.append(('lambda0', (C,)))
        if self.has_lambda_n:
            blocks.append(('lambda_n', (C,)))
        self.layout = ParameterLayout(blocks)

    @property
    def size(self):
        return self.layout.size

    def __repr__(self):
        return f"BranchPosterior(label='{self.label}', variant='{self.variant}', size={self.size})"

    # Transforms

    def _alpha(self, u, bounds):
        return bounds[0] + (bounds[1] - bounds[0]) * expit(u)

    def _alpha_u(self, alpha, bounds):
        alpha = np.asarray(alpha, dtype=float)
        if np.any(alpha <= bounds[0]) or np.any(alpha >= bounds[1]):
            raise DomainError(f"alpha must lie strictly inside {bounds}")
        return logit((alpha - bounds[0]) / (bounds[1] - bounds[0]))

    def untransform(self, params):
        """
        Map an unconstrained vector to a dict of parameters on their natural
        scales.
        """
        values = self.layout.unpack(params)
        natural = {'eta': values['eta'], 'b': values['b'],
                   'sigma': np.exp(values['log_sigma']),
                   'sigma_u': np.exp(values['log_sigma_u'])}
        if self.has_wavelet:
            natural.update(theta=values['theta'],
                           delta=np.exp(values['log_delta']),
                           phi=np.exp(values['log_phi']),
                           alpha1=self._alpha(values['alpha1_u'], self.prior.alpha1_bounds),
                           alpha2=self._alpha(values['alpha2_u'], self.prior.alpha2_bounds))
        if self.has_lambda0:
            natural['lambda0'] = values['lambda0']
        if self.has_lambda_n:
            natural['lambda_n'] = values['lambda_n']
        return natural

    def transform(self, natural):
        """
        Map natural-scale parameters to the unconstrained vector. Values on
        or beyond the boundary of their support raise a DomainError.
        """
        for name in ('sigma', 'sigma_u', 'delta', 'phi'):
            if name in natural and np.any(np.asarray(natural[name]) <= 0):
                raise DomainError(f"{name} must be positive")
        values = {'eta': natural['eta'], 'b': natural['b'],
                  'log_sigma': np.log(natural['sigma']),
                  'log_sigma_u': np.log(natural['sigma_u'])}
        if self.has_wavelet:
            values.update(theta=natural['theta'],
                          log_delta=np.log(natural['delta']),
                          log_phi=np.log(natural['phi']),
                          alpha1_u=self._alpha_u(natural['alpha1'], self.prior.alpha1_bounds),
                          alpha2_u=self._alpha_u(natural['alpha2'], self.prior.alpha2_bounds))
        if self.has_lambda0:
            values['lambda0'] = natural['lambda0']
        if self.has_lambda_n:
            values['lambda_n'] = natural['lambda_n']
        return self.layout.pack(values)

    def log_jacobian(self, params):
        values = self.layout.unpack(params)
        total = np.sum(values['log_sigma']) + np.sum(values['log_sigma_u'])
        if self.has_wavelet:
            total += np.sum(values['log_delta']) + np.sum(values['log_phi'])
            for name, bounds in (('alpha1_u', self.prior.alpha1_bounds),
                                 ('alpha2_u', self.prior.alpha2_bounds)):
                u = values[name]
                total += np.sum(np.log(bounds[1] - bounds[0]) + log_expit(u) + log_expit(-u))
        return float(total)

    # Model pieces

    def mean_function(self, params):
        """
        mu on the T time units, shaped (..., C, T). Zero for CM-B.
        """
        params = np.asarray(params, dtype=float)
        if not self.has_wavelet:
            return np.zeros(params.shape[:-1] + (self.C, self.T))
        return self.layout.unpack(params)['theta'] @ self.X.T

    def _likelihood(self, eta, lambda0, lambda_n, gradient):
        pointwise = np.zeros(self.M)
        d_eta = np.zeros((self.M, self.C))
        d_lambda0 = np.zeros(self.C)
        d_lambda_n = np.zeros(self.C)

        if self.variant == enums.VARIANT.MULTINOMIAL:
            padded = np.concatenate([eta, np.zeros((self.M, 1))], axis=1)
            pointwise = (self.log_coefficient + np.sum(self.counts[:, :-1] * eta, axis=1)
                         - self.n * logsumexp(padded, axis=1))
            if gradient:
                d_eta = self.counts[:, :-1] - self.n[:, None] * softmax(padded, axis=1)[:, :-1]
            return pointwise, d_eta, d_lambda0, d_lambda_n

        act = self.active
        x = eta[act, 0]
        y, n = self.y[act], self.n[act]
        if self.variant in (enums.VARIANT.CM_B, enums.VARIANT.W_B):
            if gradient:
                value, d_x = binomial_loglik_logit(y, n, x, gradient=True)
            else:
                value = binomial_loglik_logit(y, n, x)
        else:
            l0 = lambda0[0]
            ln = lambda_n[0] if self.has_lambda_n else -np.inf
            if gradient:
                value, d_x, d_l0, d_ln = zani_loglik_logit(y, n, x, l0, ln, gradient=True)
                d_lambda0[0] = np.sum(d_l0)
                if self.has_lambda_n:
                    d_lambda_n[0] = np.sum(d_ln)
            else:
                value = zani_loglik_logit(y, n, x, l0, ln)
        pointwise[act] = value
        if gradient:
            d_eta[act, 0] = d_x
        return pointwise, d_eta, d_lambda0, d_lambda_n

    def pointwise_loglik(self, params):
        """
        Likelihood-only log-density of every record at the given parameters.
        Records without trials contribute 0.
        """
        values = self.layout.unpack(params)
        pointwise, _, _, _ = self._likelihood(values['eta'], values.get('lambda0'),
                                              values.get('lambda_n'), gradient=False)
        return pointwise

    def log_posterior_terms(self, params, gradient=False):
        """
        Evaluate every term of the log-posterior separately.

        :returns: A dict mapping term names to values and, with
                  gradient=True, also the gradient vector.
        """
        values = self.layout.unpack(params)
        eta, b = values['eta'], values['b']
        log_sigma, log_sigma_u = values['log_sigma'], values['log_sigma_u']
        sigma, sigma_u = np.exp(log_sigma), np.exp(log_sigma_u)
        lambda0, lambda_n = values.get('lambda0'), values.get('lambda_n')
        scale = self.prior.half_cauchy_scale
        terms = OrderedDict()

        with np.errstate(all='ignore'):
            pointwise, d_eta, d_lambda0, d_lambda_n = self._likelihood(eta, lambda0, lambda_n, gradient)
            terms['likelihood'] = float(np.sum(pointwise))

            if self.has_wavelet:
                mu = values['theta'] @ self.X.T
            else:
                mu = np.zeros((self.C, self.T))
            resid = eta - mu[:, self.time_index].T - b[:, self.trip_index].T
            terms['latent'] = float(np.sum(-0.5 * LOG_2PI - log_sigma - 0.5 * resid ** 2 / sigma ** 2))
            terms['random_effects'] = float(np.sum(-0.5 * LOG_2PI - log_sigma_u[:, None]
                                                   - 0.5 * b ** 2 / sigma_u[:, None] ** 2))
            terms['sigma'] = float(np.sum(_half_cauchy_logpdf(sigma, scale))
                                   + np.sum(_half_cauchy_logpdf(sigma_u, scale)))

            if self.has_wavelet:
                terms['shrinkage'], prior_grads = _shrinkage_term(values, self.basis.detail_map,
                                                                  self.prior, gradient)

            if self.has_lambda0:
                lambdas = [lambda0] + ([lambda_n] if self.has_lambda_n else [])
                variance = self.prior.lambda_variance
                terms['lambda'] = float(sum(np.sum(-0.5 * np.log(2 * np.pi * variance)
                                                   - 0.5 * value ** 2 / variance) for value in lambdas))
            terms['jacobian'] = self.log_jacobian(params)

        if not gradient:
            return terms

        grads = {}
        with np.errstate(all='ignore'):
            scaled = resid / sigma ** 2
            grads['eta'] = d_eta - scaled
            d_mu = np.zeros((self.C, self.T))
            np.add.at(d_mu.T, self.time_index, scaled)
            d_b = np.zeros((self.C, self.J))
            np.add.at(d_b.T, self.trip_index, scaled)
            grads['b'] = d_b - b / sigma_u[:, None] ** 2
            grads['log_sigma'] = (np.sum(-1 + resid ** 2 / sigma ** 2, axis=0)
                                  - 2 * sigma ** 2 / (scale ** 2 + sigma ** 2) + 1)
            grads['log_sigma_u'] = (np.sum(-1 + b ** 2 / sigma_u[:, None] ** 2, axis=1)
                                    - 2 * sigma_u ** 2 / (scale ** 2 + sigma_u ** 2) + 1)
            if self.has_wavelet:
                grads.update(prior_grads)
                grads['theta'] = d_mu @ self.X + prior_grads['theta']
            if self.has_lambda0:
                grads['lambda0'] = d_lambda0 - lambda0 / self.prior.lambda_variance
            if self.has_lambda_n:
                grads['lambda_n'] = d_lambda_n - lambda_n / self.prior.lambda_variance
        return terms, self.layout.pack(grads)

    def log_posterior(self, params, strict=False):
        """
        The log-posterior and its gradient.

        A non-finite value is logged with the name of the offending term and
        returned as -inf, or raised as NonFiniteDensityError when strict.

        :returns: (value, gradient)
        """
        terms, grad = self.log_posterior_terms(params, gradient=True)
        value = sum(terms.values())
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            term = next((name for name, term_value in terms.items() if not np.isfinite(term_value)),
                        'gradient')
            if strict:
                raise NonFiniteDensityError(term)
            logger.debug(f"Non-finite log-posterior for {self.label}/{self.variant} in term '{term}'")
            return -np.inf, np.zeros_like(grad)
        return value, grad

    def __call__(self, params):
        return self.log_posterior(params)

    # Starting points

    def initial_point(self, rng):
        return rng.uniform(-1, 1, size=self.size)

    def embed(self, params, source):
        """
        Lift a parameter vector of a simpler variant on the same data into
        this variant. Shared blocks are copied; new blocks take their
        EMBED_DEFAULTS value.

        :param params: Parameter vector of `source`.
        :param BranchPosterior source: The posterior `params` belongs to.
        """
        values = source.layout.unpack(params)
        lifted = {}
        for name, shape in self.layout:
            if name in values:
                if values[name].shape != shape:
                    raise ShapeError(f"Cannot embed block '{name}' of shape {values[name].shape} "
                                     f"into {shape}")
                lifted[name] = values[name]
            elif name in EMBED_DEFAULTS:
                lifted[name] = np.full(shape, EMBED_DEFAULTS[name])
            else:
                raise ValidationError(f"No starting value for block '{name}'")
        return self.layout.pack(lifted)

    # Summaries

    def proportion_bands(self, draws, quantiles=(2.5, 50, 97.5)):
        """
        Percentiles over draws of logit^-1(mu) per component and time unit,
        shaped (len(quantiles), C, T).
        """
        mu = self.mean_function(np.atleast_2d(draws))
        return np.percentile(expit(mu), quantiles, axis=0)


class SeriesPosterior:
    """
    Wavelet regression of a real-valued series observed with Gaussian noise,
    y[t] ~ N(mu[t], s**2) with mu = H W' theta, under the same shrinkage
    prior as the count models. Used to read off frequency content of a
    continuous signal such as the regime-switching simulation.

    :param values: The T observed values.
    :param WaveletBasis basis: Basis on the grid.
    :param InterpolationMatrix interpolation: Placement of the T observations.
    :param PriorConfig prior: Hyperprior settings; the noise sd gets the
                              half-Cauchy prior.
    """
    def __init__(self, values, basis, interpolation, prior=None):
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 1:
            raise ShapeError("The series must be one-dimensional")
        self.basis = basis
        self.interpolation = interpolation
        self.prior = prior or PriorConfig()
        self.label = 'series'
        self.variant = enums.VARIANT.W_B
        self.T = len(self.values)
        self.C = 1
        if interpolation.H.shape != (self.T, basis.L):
            raise ShapeError(f"The interpolation matrix has shape {interpolation.H.shape}, "
                             f"expected {(self.T, basis.L)}")
        self.X = interpolation.H @ basis.W.T
        self.layout = ParameterLayout([('theta', (1, basis.L)), ('log_noise', (1,)),
                                       ('log_delta', (1, basis.D + 1)), ('log_phi', (1,)),
                                       ('alpha1_u', (1,)), ('alpha2_u', (1,))])

    @property
    def size(self):
        return self.layout.size

    def __repr__(self):
        return f"SeriesPosterior(T={self.T}, size={self.size})"

    def mean_function(self, params):
        return self.layout.unpack(np.asarray(params, dtype=float))['theta'] @ self.X.T

    def pointwise_loglik(self, params):
        values = self.layout.unpack(params)
        noise = np.exp(values['log_noise'][0])
        resid = self.values - (values['theta'] @ self.X.T)[0]
        return -0.5 * LOG_2PI - np.log(noise) - 0.5 * resid ** 2 / noise ** 2

    def log_posterior(self, params, strict=False):
        values = self.layout.unpack(params)
        log_noise = values['log_noise'][0]
        scale = self.prior.half_cauchy_scale
        with np.errstate(all='ignore'):
            noise = np.exp(log_noise)
            resid = self.values - (values['theta'] @ self.X.T)[0]
            shrinkage_value, grads = _shrinkage_term(values, self.basis.detail_map, self.prior,
                                                     gradient=True)
            jacobian = log_noise + np.sum(values['log_delta']) + np.sum(values['log_phi'])
            for name, bounds in (('alpha1_u', self.prior.alpha1_bounds),
                                 ('alpha2_u', self.prior.alpha2_bounds)):
                u = values[name]
                jacobian += np.sum(np.log(bounds[1] - bounds[0]) + log_expit(u) + log_expit(-u))
            terms = {'likelihood': float(np.sum(-0.5 * LOG_2PI - log_noise - 0.5 * resid ** 2 / noise ** 2)),
                     'noise': float(_half_cauchy_logpdf(noise, scale)),
                     'shrinkage': shrinkage_value,
                     'jacobian': float(jacobian)}
            grads['theta'] = grads['theta'] + (resid / noise ** 2)[None, :] @ self.X
            grads['log_noise'] = np.array([np.sum(-1 + resid ** 2 / noise ** 2)
                                           - 2 * noise ** 2 / (scale ** 2 + noise ** 2) + 1])
            grad = self.layout.pack(grads)
        value = sum(terms.values())
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            term = next((name for name, term_value in terms.items() if not np.isfinite(term_value)),
                        'gradient')
            if strict:
                raise NonFiniteDensityError(term)
            logger.debug(f"Non-finite log-posterior for the series model in term '{term}'")
            return -np.inf, np.zeros_like(grad)
        return value, grad

    def __call__(self, params):
        return self.log_posterior(params)

    def initial_point(self, rng):
        return rng.uniform(-1, 1, size=self.size)
