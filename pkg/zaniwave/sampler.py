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
Hamiltonian Monte Carlo with a diagonal mass matrix.

The default transition is the No-U-Turn sampler with multinomial sampling
inside the trajectory, biased progressive sampling between doublings and
the generalised U-turn criterion. A static path-length transition is
available for debugging. During warmup the step size is tuned by dual
averaging and the diagonal mass matrix is estimated from the draws of the
middle of warmup.

A target is any object with a `size`, a `log_posterior(x)` returning
(value, gradient) and an `initial_point(rng)`; `pointwise_loglik(x)` is used
when present to fill the archive's log-likelihood matrix.
"""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from zaniwave import enums, messaging, utils
from zaniwave.errors import SamplerError, ValidationError
from zaniwave.objects import SampleArchive, SamplerConfig

logger = logging.getLogger('zaniwave')

MAX_STEP_SEARCH = 100


@dataclass
class PhasePoint:
    position: np.ndarray
    momentum: np.ndarray
    logp: float
    grad: np.ndarray

    def energy(self, inv_mass):
        return self.logp - kinetic_energy(self.momentum, inv_mass)


def kinetic_energy(momentum, inv_mass):
    return 0.5 * np.sum(inv_mass * momentum ** 2)


def _evaluate(log_density, position):
    logp, grad = log_density(position)
    grad = np.asarray(grad, dtype=float)
    if not np.isfinite(logp) or not np.all(np.isfinite(grad)):
        return -np.inf, np.zeros_like(position)
    return float(logp), grad


def leapfrog(point, step, log_density, inv_mass=None):
    """
    One leapfrog step of size `step` (negative to integrate backwards).
    A non-finite density or gradient at the new position gives logp -inf.

    :param PhasePoint point: Current position, momentum, logp and gradient.
    :param callable log_density: Returns (logp, gradient) at a position.
    :param inv_mass: Diagonal of the inverse mass matrix, ones by default.
    :returns: The new PhasePoint.
    """
    if inv_mass is None:
        inv_mass = np.ones_like(point.position)
    momentum = point.momentum + 0.5 * step * point.grad
    position = point.position + step * inv_mass * momentum
    logp, grad = _evaluate(log_density, position)
    momentum = momentum + 0.5 * step * grad
    return PhasePoint(position, momentum, logp, grad)


@dataclass
class _Subtree:
    left: PhasePoint
    right: PhasePoint
    proposal: PhasePoint
    log_weight: float
    momentum_sum: np.ndarray
    accept_sum: float
    n_leapfrog: int
    turning: bool = False
    diverging: bool = False


@dataclass
class TransitionInfo:
    accept_stat: float
    n_leapfrog: int
    depth: int
    diverging: bool
    depth_hit: bool
    energy_error: float


def _is_turning(momentum_sum, left_momentum, right_momentum, inv_mass):
    return (np.dot(momentum_sum, inv_mass * left_momentum) <= 0
            or np.dot(momentum_sum, inv_mass * right_momentum) <= 0)


def _merge(first, second, direction, rng, biased, inv_mass):
    """
    Join `second`, built after `first` in `direction`, onto `first`.
    """
    if direction > 0:
        earlier, later = first, second
    else:
        earlier, later = second, first
    total_weight = np.logaddexp(first.log_weight, second.log_weight)
    if biased:
        accept = min(1.0, np.exp(second.log_weight - first.log_weight))
    else:
        accept = np.exp(second.log_weight - total_weight)
    proposal = second.proposal if rng.uniform() < accept else first.proposal
    momentum_sum = first.momentum_sum + second.momentum_sum
    turning = _is_turning(momentum_sum, earlier.left.momentum, later.right.momentum, inv_mass)
    # Extra checks across the seam between the two halves.
    if not turning:
        across = earlier.momentum_sum + later.left.momentum
        turning = _is_turning(across, earlier.left.momentum, later.left.momentum, inv_mass)
    if not turning:
        across = later.momentum_sum + earlier.right.momentum
        turning = _is_turning(across, earlier.right.momentum, later.right.momentum, inv_mass)
    return _Subtree(left=earlier.left, right=later.right, proposal=proposal,
                    log_weight=total_weight, momentum_sum=momentum_sum,
                    accept_sum=first.accept_sum + second.accept_sum,
                    n_leapfrog=first.n_leapfrog + second.n_leapfrog,
                    turning=turning, diverging=False)


def _build_tree(point, direction, depth, step, log_density, inv_mass, energy0, threshold, rng):
    if depth == 0:
        new = leapfrog(point, direction * step, log_density, inv_mass)
        energy = new.energy(inv_mass)
        delta = energy - energy0 if np.isfinite(energy) else -np.inf
        return _Subtree(left=new, right=new, proposal=new, log_weight=delta,
                        momentum_sum=new.momentum.copy(),
                        accept_sum=min(1.0, float(np.exp(min(delta, 0.0)))),
                        n_leapfrog=1, diverging=bool(-delta > threshold))

    first = _build_tree(point, direction, depth - 1, step, log_density, inv_mass,
                        energy0, threshold, rng)
    if first.turning or first.diverging:
        return first
    edge = first.right if direction > 0 else first.left
    second = _build_tree(edge, direction, depth - 1, step, log_density, inv_mass,
                         energy0, threshold, rng)
    if second.turning or second.diverging:
        first.accept_sum += second.accept_sum
        first.n_leapfrog += second.n_leapfrog
        first.turning = second.turning
        first.diverging = second.diverging
        if direction > 0:
            first.right = second.right
        else:
            first.left = second.left
        return first
    return _merge(first, second, direction, rng, biased=False, inv_mass=inv_mass)


def sample_momentum(rng, inv_mass):
    return rng.normal(size=len(inv_mass)) / np.sqrt(inv_mass)


def nuts_draw(point, log_density, step, max_depth, rng, inv_mass=None, threshold=1000.0):
    """
    One No-U-Turn transition.

    :param PhasePoint point: Current state; its momentum is resampled.
    :param float step: Leapfrog step size.
    :param int max_depth: Maximum number of trajectory doublings.
    :param float threshold: Energy error beyond which a trajectory diverges.
    :returns: (PhasePoint, TransitionInfo)
    """
    if inv_mass is None:
        inv_mass = np.ones_like(point.position)
    momentum = sample_momentum(rng, inv_mass)
    start = PhasePoint(point.position, momentum, point.logp, point.grad)
    energy0 = start.energy(inv_mass)
    tree = _Subtree(left=start, right=start, proposal=start, log_weight=0.0,
                    momentum_sum=momentum.copy(), accept_sum=0.0, n_leapfrog=0)
    depth = 0
    diverging = False
    while depth < max_depth:
        direction = 1 if rng.uniform() < 0.5 else -1
        edge = tree.right if direction > 0 else tree.left
        new = _build_tree(edge, direction, depth, step, log_density, inv_mass,
                          energy0, threshold, rng)
        depth += 1
        if new.diverging or new.turning:
            tree.accept_sum += new.accept_sum
            tree.n_leapfrog += new.n_leapfrog
            diverging = new.diverging
            break
        tree = _merge(tree, new, direction, rng, biased=True, inv_mass=inv_mass)
        if tree.turning:
            break
    accept_stat = tree.accept_sum / tree.n_leapfrog if tree.n_leapfrog else 0.0
    proposal = tree.proposal
    return proposal, TransitionInfo(accept_stat=accept_stat, n_leapfrog=tree.n_leapfrog,
                                    depth=depth, diverging=diverging,
                                    depth_hit=depth >= max_depth and not tree.turning and not diverging,
                                    energy_error=float(proposal.energy(inv_mass) - energy0))


def hmc_draw(point, log_density, step, n_steps, rng, inv_mass=None, threshold=1000.0):
    """
    One static HMC transition of n_steps leapfrog steps with a Metropolis
    correction.
    """
    if inv_mass is None:
        inv_mass = np.ones_like(point.position)
    start = PhasePoint(point.position, sample_momentum(rng, inv_mass), point.logp, point.grad)
    energy0 = start.energy(inv_mass)
    current = start
    for _ in range(n_steps):
        current = leapfrog(current, step, log_density, inv_mass)
        if not np.isfinite(current.logp):
            break
    energy = current.energy(inv_mass)
    delta = energy - energy0 if np.isfinite(energy) else -np.inf
    accept = min(1.0, float(np.exp(min(delta, 0.0))))
    diverging = bool(-delta > threshold)
    accepted = rng.uniform() < accept
    proposal = current if accepted else start
    return proposal, TransitionInfo(accept_stat=accept, n_leapfrog=n_steps, depth=0,
                                    diverging=diverging, depth_hit=False,
                                    energy_error=float(delta if accepted else 0.0))


def find_reasonable_step(point, log_density, rng, inv_mass=None, step=1.0):
    """
    Double or halve the step until the acceptance probability of a single
    leapfrog step crosses one half.
    """
    if inv_mass is None:
        inv_mass = np.ones_like(point.position)
    start = PhasePoint(point.position, sample_momentum(rng, inv_mass), point.logp, point.grad)
    energy0 = start.energy(inv_mass)

    def log_accept(step):
        energy = leapfrog(start, step, log_density, inv_mass).energy(inv_mass)
        return energy - energy0 if np.isfinite(energy) else -np.inf

    direction = 1 if log_accept(step) > np.log(0.5) else -1
    for _ in range(MAX_STEP_SEARCH):
        if direction * log_accept(step) <= -direction * np.log(2):
            break
        step *= 2.0 ** direction
    return step


class DualAveraging:
    """
    Nesterov dual averaging of the log step size toward a target acceptance
    statistic.
    """
    def __init__(self, initial_step, target_accept=0.8, gamma=0.05, t0=10.0, kappa=0.75,
                 mu_factor=10.0):
        self.target_accept = target_accept
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.mu_factor = mu_factor
        self.restart(initial_step)

    def restart(self, initial_step):
        self.mu = np.log(self.mu_factor * initial_step)
        self.counter = 0
        self.h_bar = 0.0
        self.log_step = np.log(initial_step)
        self.log_step_bar = 0.0

    def update(self, accept_stat):
        """
        Feed one acceptance statistic and return the next step size.
        """
        self.counter += 1
        weight = 1.0 / (self.counter + self.t0)
        self.h_bar = (1 - weight) * self.h_bar + weight * (self.target_accept - accept_stat)
        self.log_step = self.mu - np.sqrt(self.counter) / self.gamma * self.h_bar
        eta = self.counter ** -self.kappa
        self.log_step_bar = eta * self.log_step + (1 - eta) * self.log_step_bar
        return float(np.exp(self.log_step))

    @property
    def step(self):
        return float(np.exp(self.log_step))

    @property
    def final_step(self):
        return float(np.exp(self.log_step_bar))


def adapt_step(dual_averaging, accept_stat):
    """
    Advance a DualAveraging state by one acceptance statistic and return the
    next step size.
    """
    return dual_averaging.update(accept_stat)


def regularized_variance(draws):
    """
    Diagonal mass estimate shrunk toward a small constant.
    """
    n = len(draws)
    variance = np.var(draws, axis=0, ddof=1)
    return (n / (n + 5.0)) * variance + 1e-3 * (5.0 / (n + 5.0))


def split_rhat(draws):
    """
    Split-chain potential scale reduction factor per parameter.

    :param draws: Array of shape (chains, draws) or (chains, draws, parameters).
    :returns: R-hat per parameter; NaN where the within-chain variance is 0.
    """
    draws = np.asarray(draws, dtype=float)
    scalar = draws.ndim == 2
    if scalar:
        draws = draws[..., None]
    chains, n, _ = draws.shape
    if n < 4:
        raise ValidationError(f"R-hat needs at least 4 draws per chain, got {n}")
    half = n // 2
    split = np.concatenate([draws[:, :half], draws[:, n - half:]], axis=0)
    within = np.mean(np.var(split, axis=1, ddof=1), axis=0)
    between = half * np.var(np.mean(split, axis=1), axis=0, ddof=1)
    pooled = (half - 1) / half * within + between / half
    with np.errstate(divide='ignore', invalid='ignore'):
        rhat = np.sqrt(pooled / within)
    undefined = ~(within > 0)
    if np.any(undefined):
        logger.warning(f"R-hat is undefined for {int(undefined.sum())} parameter(s) "
                       f"with zero within-chain variance")
        rhat[undefined] = np.nan
    return float(rhat[0]) if scalar else rhat


rhat = split_rhat


def _mass_window(warmup):
    start, end = warmup // 2, int(0.8 * warmup)
    if end - start < 10:
        return None
    return start, end


def run_chain(target, config, rng, initial=None, name='chain'):
    """
    Run one chain and return its retained draws and diagnostics as a dict.
    """
    inv_mass = np.ones(target.size)
    position = np.asarray(initial if initial is not None else target.initial_point(rng), dtype=float)
    logp, grad = _evaluate(target.log_posterior, position)
    if not np.isfinite(logp):
        raise SamplerError(f"{name}: the initial point has a non-finite log density")
    point = PhasePoint(position, np.zeros_like(position), logp, grad)

    step = config.initial_step or find_reasonable_step(point, target.log_posterior, rng, inv_mass)
    dual = DualAveraging(step, config.target_accept)
    window = _mass_window(config.warmup) if config.adapt_mass else None
    window_draws = []

    draws, accept, energy = [], [], []
    divergences = warmup_divergences = depth_hits = 0
    for iteration in range(config.iterations):
        if config.algorithm == enums.ALGORITHM.HMC:
            point, info = hmc_draw(point, target.log_posterior, step, config.hmc_steps, rng,
                                   inv_mass, config.divergence_threshold)
        else:
            point, info = nuts_draw(point, target.log_posterior, step, config.max_tree_depth, rng,
                                    inv_mass, config.divergence_threshold)
        if iteration < config.warmup:
            warmup_divergences += info.diverging
            step = adapt_step(dual, info.accept_stat)
            if window is not None and window[0] <= iteration < window[1]:
                window_draws.append(point.position)
                if iteration == window[1] - 1:
                    inv_mass = regularized_variance(np.array(window_draws))
                    step = find_reasonable_step(point, target.log_posterior, rng, inv_mass, step)
                    dual.restart(step)
            if iteration == config.warmup - 1:
                if warmup_divergences == config.warmup:
                    raise SamplerError(f"{name}: every warmup transition diverged "
                                       f"(last step size {step:.3g})")
                step = dual.final_step
            continue
        divergences += info.diverging
        depth_hits += info.depth_hit
        if (iteration - config.warmup) % config.thinning == 0:
            draws.append(point.position)
            accept.append(info.accept_stat)
            energy.append(info.energy_error)

    draws = np.array(draws)
    if hasattr(target, 'pointwise_loglik'):
        loglik = np.array([target.pointwise_loglik(draw) for draw in draws])
    else:
        loglik = np.zeros((len(draws), 0))
    logger.info(f"{name}: step size {step:.3g}, {divergences} divergences, "
                f"mean acceptance {np.mean(accept):.2f}")
    return {'draws': draws, 'loglik': loglik, 'accept_stat': np.array(accept),
            'energy_error': np.array(energy), 'divergences': divergences,
            'depth_hits': depth_hits, 'step_size': step}


def _initial_points(initial, chains):
    if initial is None:
        return [None] * chains
    initial = np.asarray(initial, dtype=float)
    if initial.ndim == 1:
        return [initial] * chains
    if len(initial) != chains:
        raise ValidationError(f"Got {len(initial)} initial points for {chains} chains")
    return list(initial)


def _assemble(target, config, results, seed, branch, variant):
    draws = np.stack([result['draws'] for result in results])
    blocks = target.layout.to_header() if hasattr(target, 'layout') else {'x': [0, [target.size]]}
    archive = SampleArchive(variant=variant, branch=branch, blocks=blocks, draws=draws,
                            loglik=np.stack([result['loglik'] for result in results]),
                            accept_stat=np.stack([result['accept_stat'] for result in results]),
                            divergences=np.array([result['divergences'] for result in results]),
                            step_size=np.array([result['step_size'] for result in results]),
                            depth_hits=np.array([result['depth_hits'] for result in results]),
                            rhat=split_rhat(draws) if draws.shape[1] >= 4
                            else np.full(draws.shape[-1], np.nan),
                            energy_error=np.stack([result['energy_error'] for result in results]),
                            seed=utils.seed_value(seed), config=asdict(config))
    logger.info(messaging.create_message('convergence_summary', archive=archive))
    return archive


def _labels(target, branch, variant):
    return (branch or getattr(target, 'label', 'target'),
            variant or getattr(target, 'variant', 'custom'))


def run(target, config=None, initial=None, seed=None, branch=None, variant=None):
    """
    Run all chains one after the other.

    :param target: The posterior to sample.
    :param SamplerConfig config: Sampler settings.
    :param initial: One starting vector for all chains, or one per chain.
    :param seed: Master seed, an integer or SeedSequence. Defaults to config.seed.
    :returns: A SampleArchive.
    """
    config = config or SamplerConfig()
    seed = config.seed if seed is None else seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    branch, variant = _labels(target, branch, variant)
    generators = utils.spawn_generators(seed, config.chains)
    results = [run_chain(target, config, rng, start, name=f"{branch}/{variant} chain {index + 1}")
               for index, (rng, start) in enumerate(zip(generators, _initial_points(initial, config.chains)))]
    return _assemble(target, config, results, seed, branch, variant)


async def run_async(target, config=None, initial=None, seed=None, branch=None, variant=None,
                    executor=None):
    """
    Like run, but every chain runs as a separate task on an executor. The
    archive is identical to the one run produces for the same seed.
    """
    config = config or SamplerConfig()
    seed = config.seed if seed is None else seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    branch, variant = _labels(target, branch, variant)
    generators = utils.spawn_generators(seed, config.chains)
    loop = asyncio.get_event_loop()
    own_executor = executor is None
    executor = executor or ThreadPoolExecutor(max_workers=config.chains)
    try:
        tasks = [loop.run_in_executor(executor, run_chain, target, config, rng, start,
                                      f"{branch}/{variant} chain {index + 1}")
                 for index, (rng, start) in enumerate(zip(generators,
                                                          _initial_points(initial, config.chains)))]
        results = await asyncio.gather(*tasks)
    finally:
        if own_executor:
            executor.shutdown(wait=False)
    return _assemble(target, config, results, seed, branch, variant)
