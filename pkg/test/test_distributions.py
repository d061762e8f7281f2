from zaniwave import distributions, enums
from zaniwave.errors import DomainError, ValidationError

import numpy as np
import pytest
from scipy import stats
from scipy.special import logit


CASES = [(0, 0.3, 0.0, 0.0),
         (1, 0.5, 1.0, -1.0),
         (5, 0.3, 1.0, 0.5),
         (12, 0.9, -2.0, 3.0),
         (20, 0.05, 4.0, -np.inf),
         (7, 0.6, -np.inf, -np.inf)]


def finite_difference(function, x, h=1e-6):
    return (function(x + h) - function(x - h)) / (2 * h)


@pytest.mark.parametrize('N, p, lambda0, lambda_n', CASES)
def test_zani_pmf_sums_to_one(N, p, lambda0, lambda_n):
    total = sum(np.exp(distributions.zani_logpmf(y, N, p, lambda0, lambda_n)) for y in range(N + 1))
    assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize('N, p, lambda0, lambda_n', CASES)
def test_zani_relabelling_symmetry(N, p, lambda0, lambda_n):
    for y in range(N + 1):
        left = distributions.zani_logpmf(y, N, p, lambda0, lambda_n)
        right = distributions.zani_logpmf(N - y, N, 1 - p, lambda_n, lambda0)
        assert left == pytest.approx(right, abs=1e-10)


def test_zani_weights_formula():
    N, p, lambda0, lambda_n = 6, 0.4, 0.7, -0.3
    weights = distributions.zani_weights(N, p, lambda0, lambda_n)
    a = np.exp(lambda0) * (1 - p) ** N
    b = np.exp(lambda_n) * p ** N
    assert weights.q0 == pytest.approx(a / (1 + a + b))
    assert weights.qN == pytest.approx(b / (1 + a + b))
    assert weights.binomial == pytest.approx(1 / (1 + a + b))


def test_zi_matches_explicit_mixture():
    N, p, lambda0 = 8, 0.35, 0.5
    q0 = 1 / (1 + np.exp(-lambda0) * (1 - p) ** -N)
    for y in range(N + 1):
        expected = q0 * (y == 0) + (1 - q0) * stats.binom.pmf(y, N, p)
        assert np.exp(distributions.zi_logpmf(y, N, p, lambda0)) == pytest.approx(expected, rel=1e-10)
        assert distributions.zi_logpmf(y, N, p, lambda0) == \
            pytest.approx(distributions.zani_logpmf(y, N, p, lambda0, -np.inf))


def test_binomial_limit():
    N, p = 9, 0.2
    for y in range(N + 1):
        assert distributions.zani_logpmf(y, N, p, -np.inf, -np.inf) == \
            pytest.approx(stats.binom.logpmf(y, N, p), abs=1e-10)
        assert distributions.binomial_logpmf(y, N, p) == pytest.approx(stats.binom.logpmf(y, N, p))


def test_binomial_logpmf_at_the_edges():
    assert distributions.binomial_logpmf(0, 4, 0.0) == 0.0
    assert distributions.binomial_logpmf(1, 4, 0.0) == -np.inf
    assert distributions.binomial_logpmf(4, 4, 1.0) == 0.0


def test_empty_trials_contribute_nothing():
    assert distributions.zani_logpmf(0, 0, 0.3, 2.0, 1.0) == 0.0
    value, d_x, d_lambda0, d_lambda_n = distributions.zani_loglik_logit(0, 0, 0.4, 2.0, 1.0,
                                                                        gradient=True)
    assert (value, d_x, d_lambda0, d_lambda_n) == (0.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize('N, p, lambda0, lambda_n', [c for c in CASES if c[0] > 0 and np.isfinite(c[2:]).all()])
def test_zani_gradient(N, p, lambda0, lambda_n):
    x = logit(p)
    for y in range(N + 1):
        _, d_x, d_lambda0, d_lambda_n = distributions.zani_logpmf_grad(y, N, p, lambda0, lambda_n)
        assert d_x == pytest.approx(finite_difference(
            lambda v: distributions.zani_loglik_logit(y, N, v, lambda0, lambda_n), x), abs=1e-6)
        assert d_lambda0 == pytest.approx(finite_difference(
            lambda v: distributions.zani_loglik_logit(y, N, x, v, lambda_n), lambda0), abs=1e-6)
        assert d_lambda_n == pytest.approx(finite_difference(
            lambda v: distributions.zani_loglik_logit(y, N, x, lambda0, v), lambda_n), abs=1e-6)


def test_zi_and_binomial_gradients():
    N, p, lambda0 = 10, 0.3, 0.2
    x = logit(p)
    for y in (0, 3, 10):
        _, d_x, d_lambda0 = distributions.zi_logpmf_grad(y, N, p, lambda0)
        assert d_x == pytest.approx(finite_difference(
            lambda v: distributions.zani_loglik_logit(y, N, v, lambda0, -np.inf), x), abs=1e-6)
        assert d_lambda0 == pytest.approx(finite_difference(
            lambda v: distributions.zani_loglik_logit(y, N, x, v, -np.inf), lambda0), abs=1e-6)
        _, d_x = distributions.binomial_logpmf_grad(y, N, p)
        assert d_x == pytest.approx(y - N * p)


def test_vectorised_loglik_matches_scalar():
    y = np.array([0, 2, 5, 0])
    n = np.array([5, 5, 5, 0])
    x = np.array([-0.5, 0.1, 1.2, 0.3])
    values = distributions.zani_loglik_logit(y, n, x, 0.4, -0.2)
    for i in range(len(y)):
        assert values[i] == pytest.approx(distributions.zani_loglik_logit(y[i], n[i], x[i], 0.4, -0.2))


@pytest.mark.parametrize('y, N, p', [(0, 3, 0.0), (0, 3, 1.0), (4, 3, 0.5), (-1, 3, 0.5),
                                     (0, -1, 0.5), (0, 3, np.nan)])
def test_zani_domain_errors(y, N, p):
    with pytest.raises(DomainError):
        distributions.zani_logpmf(y, N, p, 0.0, 0.0)


def test_zani_params_validation():
    from zaniwave.objects import ZaNIParams
    with pytest.raises(DomainError):
        ZaNIParams(N=-1, p=0.5)
    with pytest.raises(DomainError):
        ZaNIParams(N=3, p=1.0)


def test_multinomial_logpmf():
    p = np.array([0.2, 0.5, 0.3])
    y = np.array([1, 3, 2])
    assert distributions.multinomial_logpmf(y, 6, p) == pytest.approx(stats.multinomial.logpmf(y, 6, p))
    with pytest.raises(DomainError):
        distributions.multinomial_logpmf(y, 7, p)
    with pytest.raises(ValidationError):
        distributions.multinomial_logpmf(y[:2], 4, p)


def test_multilogit_reference_is_last_category():
    eta = np.array([[0.5, -1.0], [0.0, 0.0]])
    p = distributions.multilogit(eta)
    assert np.allclose(p.sum(axis=1), 1)
    assert np.allclose(p[1], 1 / 3)
    assert np.allclose(np.log(p[0, :2] / p[0, 2]), eta[0])
    assert np.allclose(distributions.multilogit_inverse(p), eta)


def test_sample_zani_frequencies():
    rng = np.random.default_rng(2026)
    N, p, lambda0, lambda_n = 5, 0.3, 1.0, 0.5
    draws = distributions.sample_zani(N, p, lambda0, lambda_n, rng, size=200000)
    frequencies = np.bincount(draws, minlength=N + 1) / len(draws)
    expected = np.exp([distributions.zani_logpmf(y, N, p, lambda0, lambda_n) for y in range(N + 1)])
    assert np.max(np.abs(frequencies - expected)) < 0.006


def test_sample_zani_scalar_and_broadcast():
    rng = np.random.default_rng(0)
    assert isinstance(distributions.sample_zani(4, 0.5, 0.0, 0.0, rng), int)
    draws = distributions.sample_zani(np.array([0, 3, 10]), np.array([0.1, 0.5, 0.9]), 0.0, 0.0, rng,
                                      size=7)
    assert draws.shape == (7, 3)
    assert np.all(draws[:, 0] == 0)
    assert np.all(draws <= np.array([0, 3, 10]))


def test_sample_branch_respects_the_variant():
    rng = np.random.default_rng(3)
    # Huge inflation weights are ignored by the plain binomial variants.
    draws = distributions.sample_branch(enums.VARIANT.W_B, 20, 0.5, rng, lambda0=30.0, lambda_n=30.0,
                                        size=2000)
    assert np.mean(draws == 0) < 0.01
    draws = distributions.sample_branch(enums.VARIANT.W_ZI_B, 20, 0.5, rng, lambda0=30.0, lambda_n=30.0,
                                        size=2000)
    assert np.all(draws == 0)
    draws = distributions.sample_branch(enums.VARIANT.W_ZANI_B, 20, 0.5, rng, lambda0=30.0,
                                        lambda_n=30.0, size=2000)
    assert np.all((draws == 0) | (draws == 20))
    assert 0.4 < np.mean(draws == 0) < 0.6
    with pytest.raises(ValidationError):
        distributions.sample_branch(enums.VARIANT.MULTINOMIAL, 20, 0.5, rng)
