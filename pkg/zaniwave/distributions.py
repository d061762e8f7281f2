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
Binomial, zero-inflated binomial, zero-and-N-inflated binomial and
multinomial-logistic building blocks.

All mixture weights are evaluated in log space through

    A = lambda0 + N log(1 - p),   B = lambdaN + N log(p),
    Z = log(exp(A) + exp(B) + 1)

so that q0 = exp(A - Z) and qN = exp(B - Z) never underflow for large N.
The zero-inflated binomial is the special case lambdaN = -inf; its
MixtureWeights.q0 is the probability of the point mass at zero.
"""

import numpy as np
from scipy.special import gammaln, expit, log_expit, logit, softmax

from zaniwave import enums
from zaniwave.errors import DomainError, ValidationError
from zaniwave.objects import MixtureWeights


def _softplus(x):
    return np.logaddexp(0.0, x)


def _check_probability(p):
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p <= 0) or np.any(p >= 1):
        raise DomainError("p must lie strictly inside (0, 1)")
    return p


def _check_counts(y, n):
    y = np.asarray(y)
    n = np.asarray(n)
    if np.any(n < 0):
        raise DomainError("The number of trials must be non-negative")
    if np.any(y < 0) or np.any(y > n):
        raise DomainError("y must lie in 0..N")
    return y.astype(float), n.astype(float)


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def log_choose(n, y):
    return gammaln(n + 1) - gammaln(y + 1) - gammaln(n - y + 1)


def binomial_logpmf(y, n, p):
    """
    Binomial log-pmf. p may be 0 or 1, in which case impossible outcomes
    get -inf.
    """
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        success = np.where(y > 0, y * np.log(p), 0.0)
        failure = np.where(n - y > 0, (n - y) * np.log1p(-p), 0.0)
    return _scalar(log_choose(n, y) + success + failure)


def multinomial_logpmf(y, n, p):
    """
    Multinomial log-pmf of the count vector y with n trials.
    """
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    if y.shape != p.shape:
        raise ValidationError(f"y and p must have the same shape, got {y.shape} and {p.shape}")
    if np.any(y < 0) or y.sum() != n:
        raise DomainError(f"The counts {y.tolist()} do not sum to {n}")
    if np.any(p < 0) or not np.isclose(p.sum(), 1.0, atol=1e-12):
        raise DomainError("p must be a probability vector")
    with np.errstate(divide='ignore'):
        terms = np.where(y > 0, y * np.log(p), 0.0)
    return float(gammaln(n + 1) - gammaln(y + 1).sum() + terms.sum())


def multilogit(eta):
    """
    Map K - 1 logits to the K-simplex, with category K as the reference
    (its logit is fixed at zero). Works along the last axis.
    """
    eta = np.asarray(eta, dtype=float)
    padded = np.concatenate([eta, np.zeros(eta.shape[:-1] + (1,))], axis=-1)
    return softmax(padded, axis=-1)


def multilogit_inverse(p):
    """
    Map a strictly positive K-simplex to its K - 1 logits against category K.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or not np.allclose(p.sum(axis=-1), 1.0):
        raise DomainError("p must be a strictly positive probability vector")
    log_p = np.log(p)
    return log_p[..., :-1] - log_p[..., -1:]


def _log_weights(n, log_p, log_q, lambda0, lambda_n):
    A = lambda0 + n * log_q
    B = lambda_n + n * log_p
    Z = np.logaddexp(np.logaddexp(A, B), 0.0)
    return A, B, Z


def zani_weights(N, p, lambda0, lambda_n):
    """
    Point-mass probabilities q0 (at zero) and qN (at N).
    """
    p = _check_probability(p)
    n = np.asarray(N, dtype=float)
    if np.any(n < 0):
        raise DomainError("The number of trials must be non-negative")
    A, B, Z = _log_weights(n, np.log(p), np.log1p(-p), lambda0, lambda_n)
    return MixtureWeights(q0=_scalar(np.exp(A - Z)), qN=_scalar(np.exp(B - Z)))


def zi_weights(N, p, lambda0):
    return zani_weights(N, p, lambda0, -np.inf)


def zani_loglik_logit(y, n, x, lambda0, lambda_n, gradient=False):
    """
    ZaNI-binomial log-pmf parameterised by x = logit(p). Inputs broadcast.

    :returns: The log-pmf, or with gradient=True a tuple (value, d/dx,
              d/dlambda0, d/dlambdaN).
    """
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    lambda0 = np.asarray(lambda0, dtype=float)
    lambda_n = np.asarray(lambda_n, dtype=float)
    log_p, log_q = log_expit(x), log_expit(-x)
    A, B, Z = _log_weights(n, log_p, log_q, lambda0, lambda_n)
    at_zero = y == 0
    at_n = (y == n) & ~at_zero
    empty = n == 0
    with np.errstate(invalid='ignore'):
        interior = log_choose(n, y) + y * log_p + (n - y) * log_q
        value = np.where(at_zero, _softplus(lambda0) + n * log_q,
                         np.where(at_n, _softplus(lambda_n) + n * log_p, interior)) - Z
    value = np.where(empty, 0.0, value)
    if not gradient:
        return _scalar(value)

    p = expit(x)
    q0 = np.exp(A - Z)
    qN = np.exp(B - Z)
    dZ = n * (qN * (1 - p) - q0 * p)
    d_x = np.where(at_zero, -n * p, np.where(at_n, n * (1 - p), y - n * p)) - dZ
    d_lambda0 = np.where(at_zero, expit(lambda0), 0.0) - q0
    d_lambda_n = np.where(at_n, expit(lambda_n), 0.0) - qN
    zero = np.zeros(np.broadcast(value, d_x).shape)
    return (_scalar(value),
            _scalar(np.where(empty, zero, d_x)),
            _scalar(np.where(empty, zero, d_lambda0)),
            _scalar(np.where(empty, zero, d_lambda_n)))


def zani_logpmf(y, N, p, lambda0, lambda_n):
    """
    log[q0 1{y=0} + qN 1{y=N} + (1 - q0 - qN) Bin(y; N, p)]. Returns 0 when
    N is 0.
    """
    p = _check_probability(p)
    y, n = _check_counts(y, N)
    return zani_loglik_logit(y, n, logit(p), lambda0, lambda_n)


def zani_logpmf_grad(y, N, p, lambda0, lambda_n):
    """
    The ZaNI log-pmf and its derivatives with respect to (logit p, lambda0,
    lambdaN).
    """
    p = _check_probability(p)
    y, n = _check_counts(y, N)
    return zani_loglik_logit(y, n, logit(p), lambda0, lambda_n, gradient=True)


def zi_logpmf(y, N, p, lambda0):
    """
    Zero-inflated binomial log-pmf. The point mass at zero carries
    probability 1 / (1 + exp(-lambda0) (1 - p)**-N), the complement of the
    binomial weight.
    """
    return zani_logpmf(y, N, p, lambda0, -np.inf)


def zi_logpmf_grad(y, N, p, lambda0):
    value, d_x, d_lambda0, _ = zani_logpmf_grad(y, N, p, lambda0, -np.inf)
    return value, d_x, d_lambda0


def binomial_loglik_logit(y, n, x, gradient=False):
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    value = log_choose(n, y) + y * log_expit(x) + (n - y) * log_expit(-x)
    if not gradient:
        return _scalar(value)
    return _scalar(value), _scalar(y - n * expit(x))


def binomial_logpmf_grad(y, N, p):
    p = _check_probability(p)
    y, n = _check_counts(y, N)
    return binomial_loglik_logit(y, n, logit(p), gradient=True)


def sample_zani(N, p, lambda0, lambda_n, rng, size=None):
    """
    Draw from the ZaNI-binomial mixture. Arguments broadcast; size adds
    leading dimensions.
    """
    p = _check_probability(p)
    n = np.asarray(N, dtype=np.int64)
    weights = zani_weights(n, p, lambda0, lambda_n)
    shape = np.broadcast(n, p, np.asarray(weights.q0)).shape
    if size is not None:
        shape = tuple(np.atleast_1d(size)) + shape
    u = rng.random(shape)
    binomial = rng.binomial(np.broadcast_to(n, shape), np.broadcast_to(p, shape))
    draws = np.where(u < weights.q0, 0, np.where(u < weights.q0 + weights.qN, n, binomial))
    return draws.astype(np.int64) if draws.ndim else int(draws)


def sample_zi(N, p, lambda0, rng, size=None):
    return sample_zani(N, p, lambda0, -np.inf, rng, size=size)


def sample_branch(variant, N, p, rng, lambda0=-np.inf, lambda_n=-np.inf, size=None):
    """
    Draw a branch count from the distribution of a nested model variant.
    """
    if variant in (enums.VARIANT.CM_B, enums.VARIANT.W_B):
        lambda0, lambda_n = -np.inf, -np.inf
    elif variant == enums.VARIANT.W_ZI_B:
        lambda_n = -np.inf
    elif variant != enums.VARIANT.W_ZANI_B:
        raise ValidationError(f"Variant '{variant}' has no branch distribution")
    return sample_zani(N, p, lambda0, lambda_n, rng, size=size)
