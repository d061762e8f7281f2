from zaniwave import sampler
from zaniwave.errors import SamplerError, ValidationError
from zaniwave.objects import SamplerConfig

from test.fixtures.targets import BetaBinomialTarget, BrokenTarget, GaussianTarget

import logging

import numpy as np
import pytest
from scipy.special import expit


def small_config(**overrides):
    settings = dict(iterations=1500, warmup=500, chains=2, seed=1)
    settings.update(overrides)
    return SamplerConfig(**settings)


def test_leapfrog_is_reversible():
    target = GaussianTarget([0.5, -1.0], [[1.0, 0.3], [0.3, 0.5]])
    position = np.array([1.0, 0.2])
    logp, grad = target.log_posterior(position)
    point = sampler.PhasePoint(position, np.array([0.4, -0.7]), logp, grad)
    forward = point
    for _ in range(10):
        forward = sampler.leapfrog(forward, 0.1, target.log_posterior)
    backward = sampler.PhasePoint(forward.position, -forward.momentum, forward.logp, forward.grad)
    for _ in range(10):
        backward = sampler.leapfrog(backward, 0.1, target.log_posterior)
    assert np.allclose(backward.position, position)
    assert np.allclose(-backward.momentum, point.momentum)
    # The energy is nearly conserved for a small step.
    assert abs(forward.energy(np.ones(2)) - point.energy(np.ones(2))) < 0.01


def test_leapfrog_flags_non_finite_density():
    point = sampler.PhasePoint(np.zeros(2), np.ones(2), 0.0, np.zeros(2))
    new = sampler.leapfrog(point, 0.1, BrokenTarget().log_posterior)
    assert new.logp == -np.inf


def test_gaussian_moments():
    mean = np.array([1.0, -2.0])
    cov = np.array([[1.0, 0.5], [0.5, 2.0]])
    archive = sampler.run(GaussianTarget(mean, cov), small_config())
    draws = archive.pooled_draws()
    assert draws.shape == (2000, 2)
    assert np.allclose(draws.mean(axis=0), mean, atol=0.15)
    assert np.allclose(np.cov(draws.T), cov, atol=0.3)
    assert archive.converged
    assert np.all(archive.divergences == 0)


def test_hmc_gaussian_moments():
    mean = np.array([0.5, 0.0, -0.5])
    archive = sampler.run(GaussianTarget(mean), small_config(algorithm='hmc', hmc_steps=1))
    assert np.allclose(archive.pooled_draws().mean(axis=0), mean, atol=0.15)
    assert np.allclose(archive.pooled_draws().var(axis=0), 1.0, atol=0.3)


def test_beta_binomial_posterior():
    archive = sampler.run(BetaBinomialTarget(7, 20), small_config())
    p = expit(archive.pooled_draws()[:, 0])
    assert p.mean() == pytest.approx(8 / 22, abs=0.02)
    assert p.var() == pytest.approx(8 * 14 / (22 ** 2 * 23), rel=0.25)


def test_archive_layout_and_thinning():
    config = SamplerConfig(iterations=60, warmup=20, thinning=4, chains=3, seed=2)
    archive = sampler.run(GaussianTarget([0.0]), config)
    assert config.retained == 10
    assert archive.draws.shape == (3, 10, 1)
    assert archive.loglik.shape == (3, 10, 1)
    assert archive.accept_stat.shape == (3, 10)
    assert archive.step_size.shape == (3,)
    assert archive.rhat.shape == (1,)
    assert archive.branch == 'target'
    assert archive.variant == 'custom'
    assert archive.config['thinning'] == 4


@pytest.mark.parametrize('iterations, warmup, thinning', [(61, 20, 4), (100, 50, 3)])
def test_thinning_must_divide_the_kept_iterations(iterations, warmup, thinning):
    with pytest.raises(ValidationError):
        SamplerConfig(iterations=iterations, warmup=warmup, thinning=thinning)


def test_same_seed_same_draws():
    config = small_config(iterations=80, warmup=40)
    first = sampler.run(GaussianTarget([0.0, 1.0]), config)
    second = sampler.run(GaussianTarget([0.0, 1.0]), config)
    other = sampler.run(GaussianTarget([0.0, 1.0]), config, seed=99)
    assert np.array_equal(first.draws, second.draws)
    assert not np.array_equal(first.draws, other.draws)


@pytest.mark.asyncio
async def test_run_async_matches_run():
    config = small_config(iterations=80, warmup=40, chains=3)
    target = BetaBinomialTarget(3, 10)
    sequential = sampler.run(target, config)
    concurrent = await sampler.run_async(target, config)
    assert np.array_equal(sequential.draws, concurrent.draws)
    assert np.array_equal(sequential.step_size, concurrent.step_size)


def test_initial_points():
    config = small_config(iterations=30, warmup=10, chains=2, adapt_mass=False)
    starts = np.array([[5.0], [-5.0]])
    archive = sampler.run(GaussianTarget([0.0]), config, initial=starts)
    assert archive.chains == 2
    with pytest.raises(ValidationError):
        sampler.run(GaussianTarget([0.0]), config, initial=np.zeros((3, 1)))


def test_broken_target_raises():
    with pytest.raises(SamplerError):
        sampler.run(BrokenTarget(), small_config(iterations=20, warmup=10))


def test_split_rhat():
    rng = np.random.default_rng(3)
    mixed = rng.normal(size=(4, 500, 2))
    assert np.all(sampler.split_rhat(mixed) < 1.02)
    stuck = mixed + np.array([0.0, 0.0, 3.0, 3.0])[:, None, None]
    assert np.all(sampler.split_rhat(stuck) > 1.1)
    # Splitting catches a single chain that drifts.
    drifting = np.linspace(0, 10, 400)[None, :] + rng.normal(size=(1, 400))
    assert sampler.split_rhat(drifting) > 1.1
    with pytest.raises(ValidationError):
        sampler.split_rhat(np.zeros((2, 3)))


def test_split_rhat_constant_chains(caplog):
    with caplog.at_level(logging.WARNING, logger='zaniwave'):
        value = sampler.rhat(np.ones((2, 10)))
    assert np.isnan(value)
    assert "zero within-chain variance" in caplog.text


def test_dual_averaging_moves_toward_target():
    high = sampler.DualAveraging(0.5, target_accept=0.8)
    for _ in range(50):
        step = sampler.adapt_step(high, 1.0)
    assert step > 0.5
    low = sampler.DualAveraging(0.5, target_accept=0.8)
    for _ in range(50):
        step = low.update(0.0)
    assert step < 0.5
    assert low.final_step < 0.5
    low.restart(0.2)
    assert low.counter == 0
    assert low.step == pytest.approx(0.2)


def test_find_reasonable_step():
    target = GaussianTarget([0.0, 0.0], np.diag([0.01, 0.01]))
    position = np.array([0.05, -0.05])
    logp, grad = target.log_posterior(position)
    point = sampler.PhasePoint(position, np.zeros(2), logp, grad)
    step = sampler.find_reasonable_step(point, target.log_posterior, np.random.default_rng(4))
    assert 0 < step < 1


def test_regularized_variance():
    draws = np.random.default_rng(5).normal(scale=2.0, size=(500, 3))
    variance = sampler.regularized_variance(draws)
    assert np.allclose(variance, 4.0, rtol=0.2)
    assert np.all(sampler.regularized_variance(np.zeros((20, 2))) > 0)
